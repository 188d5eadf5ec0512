#include "sq/cli.hpp"

#include "sq/choice_model.hpp"
#include "sq/features.hpp"
#include "sq/forecast.hpp"
#include "sq/insights.hpp"
#include "sq/model_io.hpp"
#include "sq/panel.hpp"
#include "sq/synthgen.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <stdexcept>

namespace sq {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string input;
    std::string out_dir = ".";
    std::string model;
    bool iso_weeks = false;
    int train_weeks = 22;
    int min_live_weeks = 4;
    std::string smoothing = "drop";
    double alpha = 0.5;
    std::string centering = "geometric";
    double top_q = 0.9;
    double bottom_q = 0.1;
    int forward_weeks = 4;
    bool dump_features = false;

    std::uint64_t seed = 1;
    int styles = 200;
    int weeks = 26;
    long customers = 50000;
    double noise = 0.1;
    int subcategories = 1;
    bool drifting = false;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Log {
public:
    explicit Log(std::ostream& err) : err_(err) {}
    void info(const std::string& msg) { err_ << "[sq] info: " << msg << '\n'; }
    void error(const std::string& msg) { err_ << "[sq] error: " << msg << '\n'; }

private:
    std::ostream& err_;
};

std::string file_safe(const std::string& id) {
    std::string out = id;
    for (auto& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    return out;
}

FitOptions fit_options(const RunConfig& cfg) {
    FitOptions opts;
    if (cfg.smoothing == "drop")
        opts.smoothing = SmoothingPolicy::drop_zeros();
    else
        opts.smoothing = SmoothingPolicy::laplace(cfg.alpha);
    opts.centering = centering_from_string(cfg.centering);
    return opts;
}

std::vector<SubcategoryPanel> read_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw InputError("--input is required");
    LoadOptions opts;
    opts.week_format = cfg.iso_weeks ? WeekFormat::IsoWeek : WeekFormat::Integer;
    auto panels = load_panels(fs::path(cfg.input), opts);
    if (panels.empty()) throw InputError("input has no data rows");
    return panels;
}

fs::path prepare_out_dir(const RunConfig& cfg) {
    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void check_config(const RunConfig& cfg) {
    if (cfg.min_live_weeks < 1) throw InputError("--min-live-weeks must be >= 1");
    if (cfg.train_weeks < 1) throw InputError("--train-weeks must be >= 1");
    if (cfg.smoothing == "laplace" && !(cfg.alpha > 0.0)) throw InputError("--alpha must be > 0");
    if (!(cfg.bottom_q > 0.0 && cfg.bottom_q < cfg.top_q && cfg.top_q < 1.0))
        throw InputError("quantiles must satisfy 0 < --bottom-q < --top-q < 1");
    if (cfg.forward_weeks < 1) throw InputError("--forward-weeks must be >= 1");
}

struct SubcategoryFit {
    SubcategoryPanel panel;
    FeaturePanel features;
    FittedChoiceModel model;
};

SubcategoryFit fit_subcategory(const SubcategoryPanel& raw, const RunConfig& cfg, bool limit_weeks) {
    SubcategoryFit fit;
    fit.panel = filter_min_weeks(raw, cfg.min_live_weeks);
    if (fit.panel.num_styles() == 0)
        throw InputError("subcategory " + raw.subcategory_id() + " has no style live for " +
                         std::to_string(cfg.min_live_weeks) + " weeks");
    fit.features = build_feature_panel(fit.panel);
    WeekRange weeks = fit.panel.week_range();
    if (limit_weeks) {
        if (cfg.train_weeks > weeks.size())
            throw InputError("--train-weeks exceeds the panel's " + std::to_string(weeks.size()) + " weeks");
        weeks.last = weeks.first + cfg.train_weeks - 1;
    }
    fit.model = fit_choice_model(fit.panel, fit.features, weeks, fit_options(cfg));
    return fit;
}

std::vector<SubcategoryFit> fit_all(const std::vector<SubcategoryPanel>& panels, const RunConfig& cfg,
                                    bool limit_weeks) {
    std::vector<std::future<SubcategoryFit>> jobs;
    for (const auto& panel : panels)
        jobs.push_back(std::async(std::launch::async,
                                  [&panel, &cfg, limit_weeks] { return fit_subcategory(panel, cfg, limit_weeks); }));
    std::vector<SubcategoryFit> fits;
    for (auto& job : jobs) fits.push_back(job.get());
    return fits;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out, Log& log) {
    const auto panels = read_input(cfg);
    std::size_t styles = 0;
    for (const auto& p : panels) styles += p.num_styles();
    out << "ok: " << panels.size() << " subcategories, " << styles << " styles, " << panels.front().num_weeks()
        << " weeks\n";
    log.info("validation passed");
    return kExitOk;
}

int cmd_fit(const RunConfig& cfg, bool limit_weeks, Log& log) {
    check_config(cfg);
    const auto panels = read_input(cfg);
    const auto dir = prepare_out_dir(cfg);
    for (const auto& fit : fit_all(panels, cfg, limit_weeks)) {
        const auto sub = file_safe(fit.model.subcategory_id);
        save_model(dir / ("model_" + sub + ".json"), fit.model);
        auto sq_out = open_out(dir / ("sq_" + sub + ".csv"));
        write_sq_table_csv(sq_out, &fit.panel, fit.model, style_quotients(fit.model));
        if (cfg.dump_features) {
            auto f_out = open_out(dir / ("features_" + sub + ".csv"));
            write_feature_csv(f_out, fit.features);
        }
        for (const auto& w : fit.model.diagnostics.rank_warnings) log.info("subcategory " + sub + ": " + w);
        log.info("subcategory " + sub + ": " + std::to_string(fit.model.gamma.size()) + " styles, " +
                 std::to_string(fit.model.diagnostics.rows) + " rows, R2 " + std::to_string(fit.model.diagnostics.r2));
    }
    return kExitOk;
}

int cmd_backtest(const RunConfig& cfg, Log& log) {
    check_config(cfg);
    const auto panels = read_input(cfg);
    for (const auto& p : panels)
        if (cfg.train_weeks >= p.num_weeks())
            throw InputError("--train-weeks must be smaller than the panel's " + std::to_string(p.num_weeks()) +
                             " weeks");
    BacktestConfig bt;
    bt.train_weeks = cfg.train_weeks;
    bt.min_live_weeks = cfg.min_live_weeks;
    bt.fit = fit_options(cfg);
    const BacktestReport report = backtest(panels, bt);

    const auto dir = prepare_out_dir(cfg);
    {
        auto out = open_out(dir / "backtest.json");
        out << report_to_json(report).dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "backtest_by_subcategory.csv");
        write_subcategory_table(out, report);
    }
    {
        auto out = open_out(dir / "backtest_by_week.csv");
        write_week_table(out, report);
    }
    {
        auto out = open_out(dir / "predictions.csv");
        write_predictions(out, report);
    }
    for (const auto& eval : report.models)
        log.info(std::string(to_string(eval.model)) + " overall wMAPE " + std::to_string(eval.wmape_overall()));
    return kExitOk;
}

int cmd_report(const RunConfig& cfg, Log& log) {
    check_config(cfg);
    const auto panels = read_input(cfg);
    std::vector<SubcategoryFit> fits;
    if (!cfg.model.empty()) {
        FittedChoiceModel model = load_model(cfg.model);
        const auto it = std::find_if(panels.begin(), panels.end(), [&](const SubcategoryPanel& p) {
            return p.subcategory_id() == model.subcategory_id;
        });
        if (it == panels.end()) throw InputError("model subcategory " + model.subcategory_id + " not in input");
        SubcategoryFit fit;
        fit.panel = filter_min_weeks(*it, cfg.min_live_weeks);
        fit.model = std::move(model);
        fits.push_back(std::move(fit));
    } else {
        fits = fit_all(panels, cfg, false);
    }

    const auto dir = prepare_out_dir(cfg);
    for (const auto& fit : fits) {
        const auto sub = file_safe(fit.model.subcategory_id);
        const auto range = fit.panel.week_range();
        if (cfg.forward_weeks >= range.size())
            throw InputError("--forward-weeks must be smaller than the panel's " + std::to_string(range.size()) +
                             " weeks");
        const WeekRange forward{range.last - cfg.forward_weeks + 1, range.last};

        const auto table = style_quotients(fit.model);
        const auto dist = sq_distribution_stats(table);
        const auto deciles = decile_performance(fit.panel, table, forward);
        const auto brands = brand_mean_sq(fit.panel, table);
        const auto classes = classify_styles(table, cfg.top_q, cfg.bottom_q);

        {
            auto out = open_out(dir / ("deciles_" + sub + ".csv"));
            write_decile_csv(out, deciles);
        }
        {
            auto out = open_out(dir / ("brands_" + sub + ".csv"));
            write_brand_csv(out, brands);
        }
        {
            auto out = open_out(dir / ("histogram_" + sub + ".csv"));
            write_histogram_csv(out, dist);
        }
        {
            auto out = open_out(dir / ("classification_" + sub + ".csv"));
            out << "style_id,class\n";
            for (const auto& id : classes.top_sellers) out << id << ",top_seller\n";
            for (const auto& id : classes.liquidation_candidates) out << id << ",liquidation\n";
        }
        {
            auto out = open_out(dir / ("report_" + sub + ".json"));
            auto doc = insights_to_json(dist, deciles, brands, classes);
            doc["subcategory_id"] = fit.model.subcategory_id;
            doc["forward_window"] = {forward.first, forward.last};
            out << doc.dump(2) << '\n';
        }
        log.info("subcategory " + sub + ": mean normalized SQ " + std::to_string(dist.mean) + ", " +
                 std::to_string(classes.top_sellers.size()) + " top sellers, " +
                 std::to_string(classes.liquidation_candidates.size()) + " liquidation candidates");
    }
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, Log& log) {
    if (cfg.subcategories < 1) throw InputError("--subcategories must be >= 1");
    std::vector<SubcategoryPanel> panels;
    GroundTruth merged;
    SynthConfig first;
    for (int s = 1; s <= cfg.subcategories; ++s) {
        SynthConfig synth = cfg.drifting ? SynthConfig::drifting() : SynthConfig{};
        synth.subcategory_id = std::to_string(s);
        synth.style_prefix = cfg.subcategories > 1 ? "C" + std::to_string(s) + "-S" : "S";
        synth.n_styles = cfg.styles;
        synth.n_weeks = cfg.weeks;
        synth.customers_per_week = cfg.customers;
        synth.noise_sd = cfg.noise;
        synth.seed = cfg.seed + static_cast<std::uint64_t>(s - 1) * 1000003ULL;
        try {
            synth.validate();
        } catch (const std::invalid_argument& e) {
            throw InputError(e.what());
        }
        auto result = generate(synth);
        merged.gamma_star.insert(result.truth.gamma_star.begin(), result.truth.gamma_star.end());
        merged.beta_star = result.truth.beta_star;
        if (s == 1) first = synth;
        panels.push_back(std::move(result.panel));
    }
    const auto dir = prepare_out_dir(cfg);
    write_panels(dir / "panel.csv", panels);
    auto doc = ground_truth_to_json(merged, first);
    doc["subcategories"] = cfg.subcategories;
    auto out = open_out(dir / "ground_truth.json");
    out << doc.dump(2) << '\n';
    log.info("wrote " + std::to_string(cfg.subcategories) + " subcategories x " + std::to_string(cfg.styles) +
             " styles x " + std::to_string(cfg.weeks) + " weeks");
    return kExitOk;
}

void add_input(CLI::App* app, RunConfig& cfg) {
    app->add_option("--input", cfg.input, "Panel CSV")->required();
    app->add_flag("--iso-weeks", cfg.iso_weeks, "Parse the week column as ISO YYYY-Www");
}

void add_model_flags(CLI::App* app, RunConfig& cfg) {
    app->add_option("--min-live-weeks", cfg.min_live_weeks, "Keep styles live at least this many weeks");
    app->add_option("--smoothing", cfg.smoothing, "Zero-sale policy")
        ->check(CLI::IsMember({"drop", "laplace"}));
    app->add_option("--alpha", cfg.alpha, "Laplace pseudo-count");
    app->add_option("--centering", cfg.centering, "Mean share used for log-centring")
        ->check(CLI::IsMember({"geometric", "arithmetic"}));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    Log log(err);
    CLI::App app{"Style quotient estimation and demand backtesting"};
    app.require_subcommand(1);

    auto* validate = app.add_subcommand("validate", "Check a panel CSV against the schema");
    add_input(validate, cfg);

    auto* fit = app.add_subcommand("fit", "Estimate style effects and write model JSON + SQ tables");
    add_input(fit, cfg);
    add_model_flags(fit, cfg);
    fit->add_option("--out-dir", cfg.out_dir, "Output directory");
    auto* fit_train = fit->add_option("--train-weeks", cfg.train_weeks, "Fit only the first N weeks");
    fit->add_flag("--dump-features", cfg.dump_features, "Also write the feature panel CSV");

    auto* bt = app.add_subcommand("backtest", "Score the four demand models on a train/test split");
    add_input(bt, cfg);
    add_model_flags(bt, cfg);
    bt->add_option("--out-dir", cfg.out_dir, "Output directory");
    bt->add_option("--train-weeks", cfg.train_weeks, "Training weeks");

    auto* report = app.add_subcommand("report", "SQ distribution, decile, brand and classification reports");
    add_input(report, cfg);
    add_model_flags(report, cfg);
    report->add_option("--out-dir", cfg.out_dir, "Output directory");
    report->add_option("--model", cfg.model, "Model JSON from `fit` (fits all subcategories when omitted)");
    report->add_option("--top-q", cfg.top_q, "Top-seller quantile");
    report->add_option("--bottom-q", cfg.bottom_q, "Liquidation quantile");
    report->add_option("--forward-weeks", cfg.forward_weeks, "Forward window length");

    auto* sim = app.add_subcommand("simulate", "Generate a synthetic panel with known parameters");
    sim->add_option("--out-dir", cfg.out_dir, "Output directory");
    sim->add_option("--seed", cfg.seed, "RNG seed");
    sim->add_option("--styles", cfg.styles, "Styles per subcategory");
    sim->add_option("--weeks", cfg.weeks, "Weeks");
    sim->add_option("--customers", cfg.customers, "Purchases per week");
    sim->add_option("--noise", cfg.noise, "Utility noise standard deviation");
    sim->add_option("--subcategories", cfg.subcategories, "Number of subcategories");
    sim->add_flag("--drifting", cfg.drifting, "Stronger merchandising random walks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        log.error(e.what());
        return kExitInput;
    }

    try {
        if (validate->parsed()) return cmd_validate(cfg, out, log);
        if (fit->parsed()) return cmd_fit(cfg, fit_train->count() > 0, log);
        if (bt->parsed()) return cmd_backtest(cfg, log);
        if (report->parsed()) return cmd_report(cfg, log);
        if (sim->parsed()) return cmd_simulate(cfg, log);
    } catch (const PanelError& e) {
        log.error(std::string(to_string(e.kind())) + ": " + e.what());
        return kExitInput;
    } catch (const InputError& e) {
        log.error(e.what());
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        log.error(e.what());
        return kExitInput;
    } catch (const std::exception& e) {
        log.error(e.what());
        return kExitRuntime;
    }
    return kExitRuntime;
}

}  // namespace sq
