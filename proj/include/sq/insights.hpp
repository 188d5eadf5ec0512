#pragma once

#include "sq/choice_model.hpp"
#include "sq/panel.hpp"

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sq {

struct DecileAssignment {
    std::map<std::string, int> bin_of;  // 1 = lowest SQ
    int num_bins = 0;
    bool fewer_than_ten = false;        // fewer styles than bins; one style per bin
};

/// Sorts by normalized SQ (ties by style id) and cuts into 10 near-equal
/// bins, the first (n mod 10) bins holding one extra style.
DecileAssignment decile_bins(const StyleQuotientTable& sq);

struct SqDistribution {
    double mean = 0.0;
    double stddev = 0.0;    // population
    double skewness = 0.0;  // population moment ratio; 0 when stddev is 0
    std::vector<double> histogram;  // 20 equal bins over [0, 1], mass fractions
    double threshold = 0.4;
    double share_above = 0.0;       // fraction strictly above threshold
};

SqDistribution sq_distribution_stats(const StyleQuotientTable& sq, double threshold = 0.4);

struct DecileSummary {
    int bin = 0;
    std::size_t style_count = 0;
    double mean_normalized_sq = 0.0;
    double mean_discount_fraction = 0.0;
    double mean_ros = 0.0;
    std::optional<double> mean_ctr;  // pooled clicks / impressions
    double future_sale_rate = 0.0;
};

/// Per-bin merchandising and outcome summaries. History statistics
/// (discount, ROS, CTR) use the weeks before `forward_window`; when the
/// forward window starts at the first week the whole panel is history.
/// Styles in `sq` that the panel does not contain are ignored.
std::vector<DecileSummary> decile_performance(const SubcategoryPanel& panel, const StyleQuotientTable& sq,
                                              WeekRange forward_window);

struct BrandSummary {
    std::string brand_id;
    std::size_t style_count = 0;
    double mean_normalized_sq = 0.0;
};

/// Sorted by descending mean SQ, ties by brand id.
std::vector<BrandSummary> brand_mean_sq(const SubcategoryPanel& panel, const StyleQuotientTable& sq);

struct StyleClassification {
    std::set<std::string> top_sellers;
    std::set<std::string> liquidation_candidates;
    double top_threshold = 0.0;
    double bottom_threshold = 0.0;
};

/// Styles strictly above the top_quantile order statistic and strictly below
/// the bottom_quantile order statistic.
StyleClassification classify_styles(const StyleQuotientTable& sq, double top_quantile, double bottom_quantile);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// CSV/JSON emitters for external plotting.
void write_decile_csv(std::ostream& out, const std::vector<DecileSummary>& deciles);
void write_brand_csv(std::ostream& out, const std::vector<BrandSummary>& brands);
void write_histogram_csv(std::ostream& out, const SqDistribution& dist);
void write_sq_table_csv(std::ostream& out, const SubcategoryPanel* panel, const FittedChoiceModel& model,
                        const StyleQuotientTable& sq);
nlohmann::json insights_to_json(const SqDistribution& dist, const std::vector<DecileSummary>& deciles,
                                const std::vector<BrandSummary>& brands, const StyleClassification& classes);

}  // namespace sq
