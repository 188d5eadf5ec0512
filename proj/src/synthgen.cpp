#include "sq/synthgen.hpp"

#include "sq/insights.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sq {

void SynthConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("invalid synth config: ") + what);
    };
    require(n_styles >= 2, "n_styles must be >= 2");
    require(n_weeks >= 5, "n_weeks must be >= 5");
    require(n_brands >= 1, "n_brands must be >= 1");
    require(customers_per_week > 0, "customers_per_week must be > 0");
    require(gamma_sd >= 0.0 && noise_sd >= 0.0 && price_log_sd >= 0.0 && price_revision_sd >= 0.0 &&
                views_log_sd >= 0.0 && views_step_sd >= 0.0 && discount_step_sd >= 0.0,
            "standard deviations must be >= 0");
    auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
    require(probability(initial_live_fraction) && probability(exit_probability) && probability(gap_probability) &&
                probability(initial_discount_share) && probability(discount_start_probability) &&
                probability(price_revision_probability) && probability(promo_probability),
            "probabilities must lie in [0, 1]");
    require(last_entry_week >= 1, "last_entry_week must be >= 1");
    require(discount_floor > 0.0 && discount_floor <= discount_entry_min && discount_entry_min <= discount_entry_max &&
                discount_entry_max <= discount_cap && discount_cap < 1.0,
            "discount bounds must satisfy 0 < floor <= entry_min <= entry_max <= cap < 1");
    require(promo_extra_discount >= 0.0 && promo_views_multiplier >= 1.0,
            "promotions must not lower discount or views");
}

SynthConfig SynthConfig::drifting() {
    SynthConfig c;
    c.discount_step_sd = 0.08;
    c.views_step_sd = 0.35;
    c.promo_probability = 0.0;
    return c;
}

namespace {

double round_cents(double x) { return std::round(x * 100.0) / 100.0; }

std::string style_name(const SynthConfig& c, int i) {
    const int width = static_cast<int>(std::to_string(c.n_styles - 1).size());
    std::ostringstream os;
    os << c.style_prefix << std::setw(width) << std::setfill('0') << i;
    return os.str();
}

std::string brand_name(const SynthConfig& c, int b) {
    const int width = static_cast<int>(std::to_string(c.n_brands).size());
    std::ostringstream os;
    os << "B" << std::setw(width) << std::setfill('0') << (b + 1);
    return os.str();
}

// Sequential conditional binomials: exact multinomial sampling.
std::vector<long> multinomial(std::mt19937_64& rng, long trials, const std::vector<double>& probs) {
    std::vector<long> counts(probs.size(), 0);
    double remaining_mass = 1.0;
    long remaining = trials;
    for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
        if (i + 1 == probs.size()) {
            counts[i] = remaining;
            break;
        }
        const double q = remaining_mass > 0.0 ? std::clamp(probs[i] / remaining_mass, 0.0, 1.0) : 0.0;
        counts[i] = std::binomial_distribution<long>(remaining, q)(rng);
        remaining -= counts[i];
        remaining_mass -= probs[i];
    }
    return counts;
}

}  // namespace

SynthResult generate(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto bernoulli = [&](double p) { return unit(rng) < p; };

    const int n = config.n_styles;
    const int weeks = config.n_weeks;
    const int last_entry = std::clamp(config.last_entry_week, 1, weeks);

    GroundTruth truth;
    truth.beta_star = config.true_beta;

    std::vector<StyleWeekObservation> cells;
    cells.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(weeks));
    std::vector<double> ctr_logit(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        const std::string id = style_name(config, i);
        const double gamma = config.gamma_mean + config.gamma_sd * std_normal(rng);
        truth.gamma_star[id] = gamma;
        ctr_logit[static_cast<std::size_t>(i)] = config.ctr_logit_base + config.ctr_gamma_slope * gamma;
        const std::string brand =
            brand_name(config, std::uniform_int_distribution<int>(0, config.n_brands - 1)(rng));

        const int entry = (bernoulli(config.initial_live_fraction) || last_entry < 2)
                              ? 1
                              : std::uniform_int_distribution<int>(2, last_entry)(rng);
        double list_price = round_cents(std::exp(config.price_log_mean + config.price_log_sd * std_normal(rng)));
        double discount = bernoulli(config.initial_discount_share)
                              ? config.discount_entry_min +
                                    (config.discount_entry_max - config.discount_entry_min) * unit(rng)
                              : 0.0;
        double log_views = config.views_log_mean + config.views_log_sd * std_normal(rng);
        bool exited = false;
        bool flagged = false;

        for (int w = 1; w <= weeks; ++w) {
            if (w > entry) {
                if (bernoulli(config.price_revision_probability))
                    list_price = std::max(
                        1.0, round_cents(list_price * std::exp(config.price_revision_sd * std_normal(rng))));
                if (discount == 0.0) {
                    if (bernoulli(config.discount_start_probability))
                        discount = config.discount_entry_min +
                                   (config.discount_entry_max - config.discount_entry_min) * unit(rng);
                } else {
                    discount = std::clamp(discount + config.discount_drift + config.discount_step_sd * std_normal(rng),
                                          config.discount_floor, config.discount_cap);
                }
                log_views += config.views_drift + config.views_step_sd * std_normal(rng);
                if (!exited && bernoulli(config.exit_probability)) exited = true;
            }
            const bool gap = w > entry && bernoulli(config.gap_probability);
            const bool live = w >= entry && !exited && !gap;
            const bool promoted = bernoulli(config.promo_probability);
            const double week_discount =
                promoted ? std::min(config.discount_cap, discount + config.promo_extra_discount) : discount;
            const double week_log_views = promoted ? log_views + std::log(config.promo_views_multiplier) : log_views;

            StyleWeekObservation obs;
            obs.style_id = id;
            obs.subcategory_id = config.subcategory_id;
            obs.brand_id = brand;
            obs.week = w;
            obs.list_price = list_price;
            obs.selling_price = std::clamp(round_cents(list_price * (1.0 - week_discount)), 0.01, list_price);
            obs.is_live = live;
            if (live) {
                obs.days_live_in_week = 7;
                obs.list_views = std::lround(std::exp(week_log_views));
                if (!flagged && obs.selling_price < obs.list_price) {
                    obs.first_time_on_discount = true;
                    flagged = true;
                }
            }
            cells.push_back(std::move(obs));
        }
    }

    SubcategoryPanel skeleton = SubcategoryPanel::from_observations(config.subcategory_id, {1, weeks}, cells);
    const FeaturePanel features = build_feature_panel(skeleton);

    // Panel style order equals generation order: ids are zero-padded.
    std::vector<double> probs;
    std::vector<double> utilities;
    for (int w = 1; w <= weeks; ++w) {
        const auto rows = features.rows_in_week(w);
        if (rows.empty()) continue;
        utilities.clear();
        double peak = -std::numeric_limits<double>::infinity();
        for (const auto& row : rows) {
            double u = truth.gamma_star.at(skeleton.styles()[row.style]) + config.noise_sd * std_normal(rng);
            for (std::size_t k = 0; k < kNumFeatures; ++k) u += config.true_beta[k] * row.centered[k];
            utilities.push_back(u);
            peak = std::max(peak, u);
        }
        probs.assign(utilities.size(), 0.0);
        double denom = 0.0;
        for (std::size_t i = 0; i < utilities.size(); ++i) denom += probs[i] = std::exp(utilities[i] - peak);
        for (auto& p : probs) p /= denom;
        const auto counts = multinomial(rng, config.customers_per_week, probs);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto& obs = cells[rows[i].style * static_cast<std::size_t>(weeks) + static_cast<std::size_t>(w - 1)];
            obs.sales_qty = counts[i];
            if (config.emit_ctr) {
                const long impressions = obs.list_views;
                const double ctr = 1.0 / (1.0 + std::exp(-ctr_logit[rows[i].style]));
                obs.impressions = impressions;
                obs.clicks = std::binomial_distribution<long>(impressions, ctr)(rng);
            }
        }
    }

    return {SubcategoryPanel::from_observations(config.subcategory_id, {1, weeks}, std::move(cells)),
            std::move(truth)};
}

nlohmann::json config_to_json(const SynthConfig& c) {
    return {{"subcategory_id", c.subcategory_id},
            {"style_prefix", c.style_prefix},
            {"n_styles", c.n_styles},
            {"n_weeks", c.n_weeks},
            {"n_brands", c.n_brands},
            {"gamma_mean", c.gamma_mean},
            {"gamma_sd", c.gamma_sd},
            {"true_beta", c.true_beta},
            {"initial_live_fraction", c.initial_live_fraction},
            {"last_entry_week", c.last_entry_week},
            {"exit_probability", c.exit_probability},
            {"gap_probability", c.gap_probability},
            {"initial_discount_share", c.initial_discount_share},
            {"discount_start_probability", c.discount_start_probability},
            {"discount_entry_min", c.discount_entry_min},
            {"discount_entry_max", c.discount_entry_max},
            {"discount_step_sd", c.discount_step_sd},
            {"discount_drift", c.discount_drift},
            {"discount_floor", c.discount_floor},
            {"discount_cap", c.discount_cap},
            {"price_log_mean", c.price_log_mean},
            {"price_log_sd", c.price_log_sd},
            {"price_revision_probability", c.price_revision_probability},
            {"price_revision_sd", c.price_revision_sd},
            {"views_log_mean", c.views_log_mean},
            {"views_log_sd", c.views_log_sd},
            {"views_step_sd", c.views_step_sd},
            {"views_drift", c.views_drift},
            {"promo_probability", c.promo_probability},
            {"promo_extra_discount", c.promo_extra_discount},
            {"promo_views_multiplier", c.promo_views_multiplier},
            {"emit_ctr", c.emit_ctr},
            {"ctr_logit_base", c.ctr_logit_base},
            {"ctr_gamma_slope", c.ctr_gamma_slope},
            {"customers_per_week", c.customers_per_week},
            {"noise_sd", c.noise_sd},
            {"seed", c.seed}};
}

nlohmann::json ground_truth_to_json(const GroundTruth& truth, const SynthConfig& config) {
    nlohmann::json doc;
    doc["gamma_star"] = truth.gamma_star;
    doc["beta_star"] = truth.beta_star;
    doc["feature_names"] = kFeatureNames;
    doc["config"] = config_to_json(config);
    return doc;
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson needs two equal-length series");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
}

RecoveryReport evaluate_recovery(const SubcategoryPanel& panel, const GroundTruth& truth, const FitOptions& options) {
    const FeaturePanel features = build_feature_panel(panel);
    const FittedChoiceModel model = fit_choice_model(panel, features, panel.week_range(), options);

    std::vector<double> fitted;
    std::vector<double> actual;
    for (const auto& [id, g] : model.gamma) {
        const auto it = truth.gamma_star.find(id);
        if (it == truth.gamma_star.end()) continue;
        fitted.push_back(g);
        actual.push_back(it->second);
    }
    RecoveryReport report;
    report.styles_compared = fitted.size();
    if (fitted.size() < 2) throw std::invalid_argument("recovery needs at least two fitted styles with truth");
    auto demean = [](std::vector<double>& v) {
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        for (auto& x : v) x -= m;
    };
    demean(fitted);
    demean(actual);
    report.pearson_gamma = pearson_correlation(fitted, actual);
    report.rank_corr_gamma = spearman(fitted, actual);
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
        const double truth_k = truth.beta_star[k];
        const double err = std::abs(model.beta[k] - truth_k);
        report.beta_rel_error[k] = truth_k != 0.0 ? err / std::abs(truth_k) : err;
        report.max_beta_rel_error = std::max(report.max_beta_rel_error, report.beta_rel_error[k]);
    }
    return report;
}

RecoveryReport recovery_experiment(const SynthConfig& config, const FitOptions& options) {
    const SynthResult synth = generate(config);
    return evaluate_recovery(synth.panel, synth.truth, options);
}

}  // namespace sq
