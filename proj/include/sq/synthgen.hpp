#pragma once

#include "sq/choice_model.hpp"
#include "sq/features.hpp"
#include "sq/panel.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>

namespace sq {

/// Simulator settings. Utilities follow gamma* + beta* . centred features + noise,
/// and weekly purchases are a multinomial draw over the live assortment.
struct SynthConfig {
    std::string subcategory_id = "1";
    std::string style_prefix = "S";
    int n_styles = 200;
    int n_weeks = 26;
    int n_brands = 10;

    double gamma_mean = 0.0;
    double gamma_sd = 1.0;
    // Order follows kFeatureNames. Deeper-than-usual discount and extra views
    // raise utility; premium pricing, age and same-brand crowding lower it.
    FeatureArray true_beta = {2.0, -1.0, 0.8, -0.1, 0.3, -0.08};

    // Liveness: a share of styles is live from week 1, the rest enter
    // uniformly over weeks 2..last_entry_week; exits are permanent.
    double initial_live_fraction = 0.5;
    int last_entry_week = 18;
    double exit_probability = 0.01;
    double gap_probability = 0.02;

    // Discount: a style starts at full price or discounted; full-price styles
    // go on discount with a weekly probability, after which the discount
    // follows a clipped random walk.
    double initial_discount_share = 0.3;
    double discount_start_probability = 0.15;
    double discount_entry_min = 0.1;
    double discount_entry_max = 0.5;
    double discount_step_sd = 0.04;
    double discount_drift = 0.0;
    double discount_floor = 0.05;
    double discount_cap = 0.8;

    // List price: lognormal level with occasional revisions.
    double price_log_mean = 6.7;
    double price_log_sd = 0.4;
    double price_revision_probability = 0.08;
    double price_revision_sd = 0.15;

    // List views: lognormal level with a log random walk.
    double views_log_mean = 7.5;
    double views_log_sd = 0.7;
    double views_step_sd = 0.15;
    double views_drift = 0.0;

    // Promotions: one-week flash events that deepen the discount and
    // multiply list views.
    double promo_probability = 0.25;
    double promo_extra_discount = 0.2;
    double promo_views_multiplier = 4.0;

    bool emit_ctr = true;
    double ctr_logit_base = -3.0;
    double ctr_gamma_slope = 0.5;

    long customers_per_week = 50000;
    double noise_sd = 0.1;
    std::uint64_t seed = 1;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;

    /// Defaults with stronger lever random walks and no one-week promotions,
    /// so merchandising moves away from any trailing window as the horizon grows.
    static SynthConfig drifting();
};

struct GroundTruth {
    std::map<std::string, double> gamma_star;
    FeatureArray beta_star{};
};

struct SynthResult {
    SubcategoryPanel panel;
    GroundTruth truth;
};

SynthResult generate(const SynthConfig& config);

nlohmann::json config_to_json(const SynthConfig& config);
nlohmann::json ground_truth_to_json(const GroundTruth& truth, const SynthConfig& config);

struct RecoveryReport {
    double pearson_gamma = 0.0;
    double rank_corr_gamma = 0.0;
    FeatureArray beta_rel_error{};
    double max_beta_rel_error = 0.0;
    std::size_t styles_compared = 0;
};

/// Fits every week of `panel` and compares with the truth after removing
/// the mean of both gamma vectors.
RecoveryReport evaluate_recovery(const SubcategoryPanel& panel, const GroundTruth& truth,
                                 const FitOptions& options = {});

RecoveryReport recovery_experiment(const SynthConfig& config, const FitOptions& options = {});

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sq
