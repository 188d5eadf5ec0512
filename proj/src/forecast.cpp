#include "sq/forecast.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sq {

const char* to_string(ForecastModel model) {
    switch (model) {
    case ForecastModel::SimpleROS: return "simple_ros";
    case ForecastModel::NormalizedROS: return "normalized_ros";
    case ForecastModel::MeanIntercept: return "mean_intercept";
    case ForecastModel::SQModel: return "sq_model";
    }
    return "unknown";
}

std::string column_label(ForecastModel model) {
    static constexpr const char* tags[] = {"(a)", "(b)", "(c)", "(d)"};
    return std::string(tags[static_cast<int>(model)]) + " " + to_string(model);
}

double ros(const SubcategoryPanel& panel, std::size_t style, WeekRange window) {
    if (window.size() <= 0) throw std::invalid_argument("ROS window is empty");
    double units = 0.0;
    double days = 0.0;
    for (int w = window.first; w <= window.last; ++w) {
        const auto& obs = panel.at(style, w);
        units += static_cast<double>(obs.sales_qty);
        days += obs.days_live_in_week;
    }
    return days > 0.0 ? units / days : 0.0;
}

std::map<int, double> actual_totals(const SubcategoryPanel& test) {
    std::map<int, double> totals;
    const auto range = test.week_range();
    for (int w = range.first; w <= range.last; ++w) totals[w] = static_cast<double>(test.total_sales(w));
    return totals;
}

CellValues actual_sales(const SubcategoryPanel& test) {
    CellValues out;
    const auto range = test.week_range();
    for (std::size_t s = 0; s < test.num_styles(); ++s)
        for (int w = range.first; w <= range.last; ++w) {
            const auto& obs = test.at(s, w);
            if (obs.is_live) out.emplace(StyleWeek{obs.style_id, w}, static_cast<double>(obs.sales_qty));
        }
    return out;
}

namespace {

WeekRange lookback_window(const SubcategoryPanel& train, int lookback) {
    const auto range = train.week_range();
    if (lookback < 1 || range.size() < lookback)
        throw std::invalid_argument("training window has " + std::to_string(range.size()) +
                                    " weeks; ROS baselines need " + std::to_string(lookback));
    return {range.last - lookback + 1, range.last};
}

// Trailing ROS of each test style; styles the training panel never saw get 0.
std::vector<double> trailing_ros(const SubcategoryPanel& train, const SubcategoryPanel& test, int lookback,
                                 std::vector<bool>& seen) {
    const WeekRange window = lookback_window(train, lookback);
    std::vector<double> out(test.num_styles(), 0.0);
    seen.assign(test.num_styles(), false);
    for (std::size_t s = 0; s < test.num_styles(); ++s) {
        const auto idx = train.style_index(test.styles()[s]);
        if (!idx) continue;
        seen[s] = train.live_week_count(*idx) > 0;
        out[s] = ros(train, *idx, window);
    }
    return out;
}

double total_for(const std::map<int, double>& totals, int week) {
    const auto it = totals.find(week);
    if (it == totals.end()) throw std::invalid_argument("no D_t for week " + std::to_string(week));
    return it->second;
}

}  // namespace

SalesForecast predict_simple_ros(const SubcategoryPanel& train, const SubcategoryPanel& test, int lookback) {
    SalesForecast fc;
    fc.model = ForecastModel::SimpleROS;
    std::vector<bool> seen;
    const auto rates = trailing_ros(train, test, lookback, seen);
    const auto range = test.week_range();
    for (std::size_t s = 0; s < test.num_styles(); ++s)
        for (int w = range.first; w <= range.last; ++w) {
            const auto& obs = test.at(s, w);
            if (!obs.is_live) continue;
            const StyleWeek key{obs.style_id, w};
            fc.predictions[key] = rates[s] * obs.days_live_in_week;
            if (!seen[s]) fc.uncovered.push_back(key);
        }
    return fc;
}

SalesForecast predict_normalized_ros(const SubcategoryPanel& train, const SubcategoryPanel& test,
                                     const std::map<int, double>& totals, int lookback) {
    SalesForecast fc;
    fc.model = ForecastModel::NormalizedROS;
    std::vector<bool> seen;
    const auto rates = trailing_ros(train, test, lookback, seen);
    const auto range = test.week_range();
    for (int w = range.first; w <= range.last; ++w) {
        const Assortment live = assortment_at(test, w);
        if (live.live_styles.empty()) {
            fc.skipped_weeks.push_back(w);
            continue;
        }
        const double demand = total_for(totals, w);
        double rate_sum = 0.0;
        for (const auto s : live.live_styles) rate_sum += rates[s];
        for (const auto s : live.live_styles) {
            const StyleWeek key{test.styles()[s], w};
            fc.predictions[key] = rate_sum > 0.0
                                      ? rates[s] / rate_sum * demand
                                      : demand / static_cast<double>(live.live_styles.size());
            if (!seen[s]) fc.uncovered.push_back(key);
        }
    }
    return fc;
}

FittedChoiceModel fit_mean_intercept(const SubcategoryPanel& train, const FeaturePanel& features,
                                     const FitOptions& options) {
    if (features.styles() != train.styles())
        throw std::invalid_argument("feature panel was built from a different style set");
    const ResponseSet responses =
        build_responses(train, train.week_range(), options.smoothing, options.centering);
    const DesignSystem system = build_design_matrix(responses.rows, features);
    FittedChoiceModel model = fit_pooled_intercept(system, options.solver);
    const double intercept = model.diagnostics.gauge_mean;
    for (const auto& id : train.styles()) model.gamma.emplace(id, intercept);
    model.subcategory_id = train.subcategory_id();
    model.smoothing = options.smoothing;
    model.centering = options.centering;
    model.diagnostics.skipped_weeks = responses.skipped_weeks;
    return model;
}

SalesForecast predict_choice_model(const FittedChoiceModel& model, const SubcategoryPanel& test,
                                   const FeaturePanel& features, const std::map<int, double>& totals) {
    if (features.styles() != test.styles())
        throw std::invalid_argument("feature panel was built from a different style set");
    SalesForecast fc;
    fc.model = model.kind == ModelKind::MeanIntercept ? ForecastModel::MeanIntercept : ForecastModel::SQModel;

    const auto range = test.week_range();
    std::vector<std::pair<std::size_t, double>> utilities;
    for (int w = range.first; w <= range.last; ++w) {
        utilities.clear();
        for (const auto& row : features.rows_in_week(w)) {
            const auto& id = test.styles()[row.style];
            const auto u = model.utility(id, row.centered);
            if (u)
                utilities.emplace_back(row.style, *u);
            else
                fc.uncovered.push_back({id, w});
        }
        if (utilities.empty()) {
            fc.skipped_weeks.push_back(w);
            continue;
        }
        const double demand = total_for(totals, w);
        double peak = -std::numeric_limits<double>::infinity();
        for (const auto& [s, u] : utilities) peak = std::max(peak, u);
        double denom = 0.0;
        for (auto& [s, u] : utilities) {
            u = std::exp(u - peak);
            denom += u;
        }
        for (const auto& [s, weight] : utilities)
            fc.predictions[{test.styles()[s], w}] = weight / denom * demand;
    }
    return fc;
}

double wmape(const CellValues& actual, const CellValues& predicted) {
    if (actual.size() != predicted.size())
        throw std::invalid_argument("wMAPE needs identical key sets");
    WmapeAccumulator acc;
    auto it = predicted.begin();
    for (const auto& [key, a] : actual) {
        if (it->first != key) throw std::invalid_argument("wMAPE needs identical key sets");
        acc.add(a, it->second);
        ++it;
    }
    if (!(acc.actual > 0.0)) throw std::invalid_argument("wMAPE undefined: actual sales sum to zero");
    return acc.percent();
}

double WmapeAccumulator::percent() const {
    if (!(actual > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * abs_error / actual;
}

SubcategoryBacktest backtest_subcategory(const SubcategoryPanel& panel, const BacktestConfig& config) {
    const SubcategoryPanel filtered = filter_min_weeks(panel, config.min_live_weeks);
    if (filtered.num_styles() == 0)
        throw std::invalid_argument("subcategory " + panel.subcategory_id() + " has no style live for " +
                                    std::to_string(config.min_live_weeks) + " weeks");
    if (filtered.num_weeks() < 5)
        throw std::invalid_argument("backtest needs at least 5 weeks of data");

    const FeaturePanel features = build_feature_panel(filtered);
    const TrainTestSplit split = split_train_test(filtered, config.train_weeks);

    SubcategoryBacktest out;
    out.subcategory_id = panel.subcategory_id();
    out.actual = actual_sales(split.test);
    out.totals = actual_totals(split.test);
    out.sq_model = fit_choice_model(filtered, features, split.train.week_range(), config.fit);
    out.mean_intercept_model = fit_mean_intercept(split.train, features, config.fit);

    out.forecasts[0] = predict_simple_ros(split.train, split.test, config.ros_lookback);
    out.forecasts[1] = predict_normalized_ros(split.train, split.test, out.totals, config.ros_lookback);
    out.forecasts[2] = predict_choice_model(out.mean_intercept_model, split.test, features, out.totals);
    out.forecasts[3] = predict_choice_model(out.sq_model, split.test, features, out.totals);
    return out;
}

BacktestReport backtest(const std::vector<SubcategoryPanel>& panels, const BacktestConfig& config) {
    BacktestReport report;
    report.config = config;

    std::vector<std::future<SubcategoryBacktest>> jobs;
    jobs.reserve(panels.size());
    for (const auto& panel : panels)
        jobs.push_back(std::async(std::launch::async, [&panel, &config] { return backtest_subcategory(panel, config); }));
    for (auto& job : jobs) report.subcategories.push_back(job.get());

    for (const auto m : kForecastModels) report.models[static_cast<std::size_t>(m)].model = m;
    for (const auto& sub : report.subcategories) {
        for (std::size_t m = 0; m < kForecastModels.size(); ++m) {
            auto& eval = report.models[m];
            const auto& predictions = sub.forecasts[m].predictions;
            for (const auto& [key, a] : sub.actual) {
                const auto it = predictions.find(key);
                const double f = it == predictions.end() ? 0.0 : it->second;
                eval.overall.add(a, f);
                eval.by_week[key.week].add(a, f);
                eval.by_subcategory[sub.subcategory_id].add(a, f);
            }
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Output

namespace {

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string cell(double v) { return std::isfinite(v) ? detail::format_real(v) : std::string(); }

void write_row(std::ostream& out, const std::string& label, const std::array<double, 4>& values) {
    out << label;
    for (const double v : values) out << ',' << cell(v);
    out << ',' << cell(values[1] - values[3]) << ',' << cell(values[2] - values[3]) << '\n';
}

void write_header(std::ostream& out, const char* first) {
    out << first;
    for (const auto m : kForecastModels) out << ',' << column_label(m);
    out << ",d_vs_b,d_vs_c\n";
}

}  // namespace

nlohmann::json report_to_json(const BacktestReport& report) {
    using nlohmann::json;
    json doc;
    doc["config"] = {{"train_weeks", report.config.train_weeks},
                     {"min_live_weeks", report.config.min_live_weeks},
                     {"ros_lookback", report.config.ros_lookback},
                     {"smoothing", report.config.fit.smoothing.kind == SmoothingKind::DropZeros ? "drop" : "laplace"},
                     {"alpha", report.config.fit.smoothing.alpha},
                     {"centering", to_string(report.config.fit.centering)}};

    json models = json::object();
    for (const auto& eval : report.models) {
        json m;
        m["overall"] = number(eval.overall.percent());
        m["abs_error"] = eval.overall.abs_error;
        m["actual"] = eval.overall.actual;
        m["by_week"] = json::object();
        for (const auto& [week, acc] : eval.by_week) m["by_week"][std::to_string(week)] = number(acc.percent());
        m["by_subcategory"] = json::object();
        for (const auto& [sub, acc] : eval.by_subcategory) m["by_subcategory"][sub] = number(acc.percent());
        models[to_string(eval.model)] = m;
    }
    doc["models"] = models;

    auto improvement = [&](auto&& pick) {
        const double b = pick(report.report(ForecastModel::NormalizedROS));
        const double c = pick(report.report(ForecastModel::MeanIntercept));
        const double d = pick(report.report(ForecastModel::SQModel));
        return json{{"d_vs_b", number(b - d)}, {"d_vs_c", number(c - d)}};
    };
    json improvements;
    improvements["overall"] = improvement([](const EvaluationReport& e) { return e.overall.percent(); });
    improvements["by_week"] = json::object();
    for (const auto& [week, acc] : report.report(ForecastModel::SQModel).by_week)
        improvements["by_week"][std::to_string(week)] =
            improvement([w = week](const EvaluationReport& e) { return e.by_week.at(w).percent(); });
    improvements["by_subcategory"] = json::object();
    for (const auto& [sub, acc] : report.report(ForecastModel::SQModel).by_subcategory)
        improvements["by_subcategory"][sub] =
            improvement([&s = sub](const EvaluationReport& e) { return e.by_subcategory.at(s).percent(); });
    doc["improvements"] = improvements;

    json subs = json::array();
    for (const auto& sub : report.subcategories) {
        json s;
        s["subcategory_id"] = sub.subcategory_id;
        s["test_cells"] = sub.actual.size();
        json totals = json::object();
        for (const auto& [week, total] : sub.totals) totals[std::to_string(week)] = total;
        s["actual_totals"] = totals;
        json coverage = json::object();
        for (const auto& fc : sub.forecasts)
            coverage[to_string(fc.model)] = {{"predicted", fc.predictions.size()},
                                             {"uncovered", fc.uncovered.size()},
                                             {"skipped_weeks", fc.skipped_weeks}};
        s["coverage"] = coverage;
        s["sq_model_rss"] = sub.sq_model.diagnostics.rss;
        s["mean_intercept_rss"] = sub.mean_intercept_model.diagnostics.rss;
        subs.push_back(s);
    }
    doc["subcategories"] = subs;
    return doc;
}

void write_subcategory_table(std::ostream& out, const BacktestReport& report) {
    write_header(out, "subcategory");
    for (const auto& sub : report.subcategories) {
        std::array<double, 4> values{};
        for (std::size_t m = 0; m < 4; ++m) values[m] = report.models[m].by_subcategory.at(sub.subcategory_id).percent();
        write_row(out, sub.subcategory_id, values);
    }
    std::array<double, 4> overall{};
    for (std::size_t m = 0; m < 4; ++m) overall[m] = report.models[m].overall.percent();
    write_row(out, "Overall", overall);
}

void write_week_table(std::ostream& out, const BacktestReport& report) {
    write_header(out, "week");
    for (const auto& [week, acc] : report.models[0].by_week) {
        std::array<double, 4> values{};
        for (std::size_t m = 0; m < 4; ++m) values[m] = report.models[m].by_week.at(week).percent();
        write_row(out, std::to_string(week), values);
    }
}

void write_predictions(std::ostream& out, const BacktestReport& report) {
    out << "subcategory_id,style_id,week,actual";
    for (const auto m : kForecastModels) out << ',' << to_string(m);
    out << '\n';
    for (const auto& sub : report.subcategories) {
        for (const auto& [key, a] : sub.actual) {
            out << sub.subcategory_id << ',' << key.style_id << ',' << key.week << ',' << detail::format_real(a);
            for (const auto& fc : sub.forecasts) {
                const auto it = fc.predictions.find(key);
                out << ',' << (it == fc.predictions.end() ? std::string() : detail::format_real(it->second));
            }
            out << '\n';
        }
    }
}

}  // namespace sq
