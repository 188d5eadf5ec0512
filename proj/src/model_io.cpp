#include "sq/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace sq {

using nlohmann::json;

json model_to_json(const FittedChoiceModel& model) {
    json doc;
    doc["subcategory_id"] = model.subcategory_id;
    doc["kind"] = model.kind == ModelKind::FixedEffects ? "fixed_effects" : "mean_intercept";
    doc["feature_names"] = model.feature_names;
    doc["beta"] = model.beta;
    doc["gamma"] = json::object();
    for (const auto& [id, g] : model.gamma) doc["gamma"][id] = g;

    json smoothing;
    smoothing["kind"] = model.smoothing.kind == SmoothingKind::DropZeros ? "drop" : "laplace";
    if (model.smoothing.kind == SmoothingKind::Laplace) smoothing["alpha"] = model.smoothing.alpha;
    doc["smoothing_policy"] = smoothing;
    doc["centering"] = to_string(model.centering);

    const auto& d = model.diagnostics;
    json diag;
    diag["rows"] = d.rows;
    diag["r2"] = d.r2;
    diag["rmse"] = d.rmse;
    diag["rss"] = d.rss;
    diag["condition"] = std::isfinite(d.condition) ? json(d.condition) : json(nullptr);
    diag["feature_rank"] = d.feature_rank;
    diag["gauge_mean"] = d.gauge_mean;
    diag["solver"] = d.solver;
    diag["iterations"] = d.iterations;
    diag["rank_warnings"] = d.rank_warnings;
    diag["excluded_styles"] = d.excluded_styles;
    diag["skipped_weeks"] = d.skipped_weeks;
    doc["diagnostics"] = diag;
    return doc;
}

FittedChoiceModel model_from_json(const json& doc) {
    FittedChoiceModel model;
    model.subcategory_id = doc.at("subcategory_id").get<std::string>();
    const auto kind = doc.value("kind", std::string("fixed_effects"));
    if (kind == "fixed_effects")
        model.kind = ModelKind::FixedEffects;
    else if (kind == "mean_intercept")
        model.kind = ModelKind::MeanIntercept;
    else
        throw std::invalid_argument("unknown model kind '" + kind + "'");
    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.beta = doc.at("beta").get<std::vector<double>>();
    if (model.beta.size() != model.feature_names.size())
        throw std::invalid_argument("beta and feature_names differ in length");
    for (const auto& [id, g] : doc.at("gamma").items()) model.gamma.emplace(id, g.get<double>());

    const auto& smoothing = doc.at("smoothing_policy");
    const auto smoothing_kind = smoothing.at("kind").get<std::string>();
    if (smoothing_kind == "drop")
        model.smoothing = SmoothingPolicy::drop_zeros();
    else if (smoothing_kind == "laplace")
        model.smoothing = SmoothingPolicy::laplace(smoothing.at("alpha").get<double>());
    else
        throw std::invalid_argument("unknown smoothing policy '" + smoothing_kind + "'");
    model.centering = centering_from_string(doc.at("centering").get<std::string>());

    const auto& diag = doc.at("diagnostics");
    auto& d = model.diagnostics;
    d.rows = diag.at("rows").get<std::size_t>();
    d.r2 = diag.at("r2").get<double>();
    d.rmse = diag.at("rmse").get<double>();
    d.condition = diag.at("condition").is_null() ? std::numeric_limits<double>::infinity()
                                                 : diag.at("condition").get<double>();
    d.rank_warnings = diag.at("rank_warnings").get<std::vector<std::string>>();
    d.rss = diag.value("rss", 0.0);
    d.feature_rank = diag.value("feature_rank", std::size_t{0});
    d.gauge_mean = diag.value("gauge_mean", 0.0);
    d.solver = diag.value("solver", std::string());
    d.iterations = diag.value("iterations", 0);
    d.excluded_styles = diag.value("excluded_styles", std::vector<std::string>{});
    d.skipped_weeks = diag.value("skipped_weeks", std::vector<int>{});
    return model;
}

void save_model(const std::filesystem::path& path, const FittedChoiceModel& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(model).dump(2) << '\n';
}

FittedChoiceModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return model_from_json(json::parse(in));
}

}  // namespace sq
