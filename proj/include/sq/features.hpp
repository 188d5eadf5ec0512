#pragma once

#include "sq/panel.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sq {

inline constexpr std::size_t kNumFeatures = 6;

/// Column order of every feature array, design matrix and beta vector.
inline const std::array<std::string, kNumFeatures> kFeatureNames = {
    "discount_deviation", "normalized_list_price", "list_views_deviation",
    "style_age",          "first_time_on_discount", "brand_live_competition",
};

using FeatureArray = std::array<double, kNumFeatures>;

/// Merchandising levers of one live style in one week.
struct FeatureVector {
    double discount_deviation = 0.0;      // fraction of list price
    double normalized_list_price = 0.0;   // ratio to the week's live-assortment mean
    double list_views_deviation = 0.0;    // relative to the style's own history
    double style_age = 0.0;               // weeks since first live week, first = 1
    double first_time_on_discount = 0.0;  // 0 or 1
    double brand_live_competition = 0.0;  // other live styles of the same brand

    FeatureArray to_array() const;
    static FeatureVector from_array(const FeatureArray& values);
    bool operator==(const FeatureVector&) const = default;
};

// Single-cell feature definitions. Each requires the style to be live at `week`
// unless noted; history windows run from the panel's first week.

/// (list - selling) / list.
double discount_fraction(const StyleWeekObservation& obs);

/// Discount fraction minus its mean over the style's live weeks up to and including `week`.
double discount_deviation(const SubcategoryPanel& panel, std::size_t style, int week);

/// List price over the mean list price of styles live at `week`.
double normalized_list_price(const SubcategoryPanel& panel, std::size_t style, int week);

/// (views - m) / max(1, m), m the mean views over the style's live weeks up to `week`.
double list_views_deviation(const SubcategoryPanel& panel, std::size_t style, int week);

/// Calendar weeks since the first live week, counting gaps; first live week is 1.
double style_age(const SubcategoryPanel& panel, std::size_t style, int week);

/// Number of other styles of the same brand live at `week`.
double brand_live_competition(const SubcategoryPanel& panel, std::size_t style, int week);

FeatureVector compute_features(const SubcategoryPanel& panel, std::size_t style, int week);

/// Features of every live (style, week) cell plus per-week cross-sectional means.
struct FeatureRow {
    std::size_t style = 0;
    int week = 0;
    FeatureVector raw;
    FeatureArray centered{};
};

class FeaturePanel {
public:
    FeaturePanel() = default;

    const std::string& subcategory_id() const { return subcategory_id_; }
    WeekRange week_range() const { return weeks_; }
    const std::vector<std::string>& styles() const { return styles_; }

    /// Rows ordered by week, then style index.
    const std::vector<FeatureRow>& rows() const { return rows_; }

    /// Rows of one week (may be empty).
    std::span<const FeatureRow> rows_in_week(int week) const;

    /// Mean of each feature over styles live at `week`; zeros when nobody is live.
    const FeatureArray& week_means(int week) const;

    /// Row for a live cell, or nullptr when the style is not live that week.
    const FeatureRow* find(std::size_t style, int week) const;

    friend FeaturePanel build_feature_panel(const SubcategoryPanel& panel);

private:
    std::string subcategory_id_;
    WeekRange weeks_{1, 0};
    std::vector<std::string> styles_;
    std::vector<FeatureRow> rows_;
    std::vector<std::size_t> week_offsets_;
    std::vector<FeatureArray> means_;
};

FeaturePanel build_feature_panel(const SubcategoryPanel& panel);

/// Audit dump: style_id, week, six raw feature columns, six centered columns.
void write_feature_csv(std::ostream& out, const FeaturePanel& features);

}  // namespace sq
