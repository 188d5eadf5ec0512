#include "sq/features.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <stdexcept>

namespace sq {

FeatureArray FeatureVector::to_array() const {
    return {discount_deviation,     normalized_list_price, list_views_deviation,
            style_age,              first_time_on_discount, brand_live_competition};
}

FeatureVector FeatureVector::from_array(const FeatureArray& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

namespace {

void require_live(const SubcategoryPanel& panel, std::size_t style, int week) {
    if (!panel.at(style, week).is_live)
        throw std::invalid_argument("style " + panel.styles()[style] + " is not live in week " +
                                    std::to_string(week));
}

}  // namespace

double discount_fraction(const StyleWeekObservation& obs) {
    if (!(obs.list_price > 0.0)) throw std::invalid_argument("list_price must be positive");
    return (obs.list_price - obs.selling_price) / obs.list_price;
}

double discount_deviation(const SubcategoryPanel& panel, std::size_t style, int week) {
    require_live(panel, style, week);
    double sum = 0.0;
    int n = 0;
    for (int w = panel.week_range().first; w <= week; ++w) {
        const auto& obs = panel.at(style, w);
        if (!obs.is_live) continue;
        sum += discount_fraction(obs);
        ++n;
    }
    return discount_fraction(panel.at(style, week)) - sum / n;
}

double normalized_list_price(const SubcategoryPanel& panel, std::size_t style, int week) {
    require_live(panel, style, week);
    double sum = 0.0;
    int n = 0;
    for (std::size_t s = 0; s < panel.num_styles(); ++s) {
        const auto& obs = panel.at(s, week);
        if (!obs.is_live) continue;
        sum += obs.list_price;
        ++n;
    }
    return panel.at(style, week).list_price / (sum / n);
}

double list_views_deviation(const SubcategoryPanel& panel, std::size_t style, int week) {
    require_live(panel, style, week);
    double sum = 0.0;
    int n = 0;
    for (int w = panel.week_range().first; w <= week; ++w) {
        const auto& obs = panel.at(style, w);
        if (!obs.is_live) continue;
        sum += static_cast<double>(obs.list_views);
        ++n;
    }
    const double mean = sum / n;
    return (static_cast<double>(panel.at(style, week).list_views) - mean) / std::max(1.0, mean);
}

double style_age(const SubcategoryPanel& panel, std::size_t style, int week) {
    require_live(panel, style, week);
    int first = week;
    for (int w = panel.week_range().first; w <= week; ++w) {
        if (panel.at(style, w).is_live) {
            first = w;
            break;
        }
    }
    return static_cast<double>(week - first + 1);
}

double brand_live_competition(const SubcategoryPanel& panel, std::size_t style, int week) {
    require_live(panel, style, week);
    const auto& brand = panel.brand_of(style);
    int count = 0;
    for (std::size_t s = 0; s < panel.num_styles(); ++s)
        if (s != style && panel.at(s, week).is_live && panel.brand_of(s) == brand) ++count;
    return count;
}

FeatureVector compute_features(const SubcategoryPanel& panel, std::size_t style, int week) {
    FeatureVector f;
    f.discount_deviation = discount_deviation(panel, style, week);
    f.normalized_list_price = normalized_list_price(panel, style, week);
    f.list_views_deviation = list_views_deviation(panel, style, week);
    f.style_age = style_age(panel, style, week);
    f.first_time_on_discount = panel.at(style, week).first_time_on_discount ? 1.0 : 0.0;
    f.brand_live_competition = brand_live_competition(panel, style, week);
    return f;
}

std::span<const FeatureRow> FeaturePanel::rows_in_week(int week) const {
    if (!weeks_.contains(week)) return {};
    const auto w = static_cast<std::size_t>(week - weeks_.first);
    return std::span<const FeatureRow>(rows_).subspan(week_offsets_[w], week_offsets_[w + 1] - week_offsets_[w]);
}

const FeatureArray& FeaturePanel::week_means(int week) const {
    if (!weeks_.contains(week)) throw std::out_of_range("week outside feature panel range");
    return means_[static_cast<std::size_t>(week - weeks_.first)];
}

const FeatureRow* FeaturePanel::find(std::size_t style, int week) const {
    const auto rows = rows_in_week(week);
    const auto it = std::lower_bound(rows.begin(), rows.end(), style,
                                     [](const FeatureRow& r, std::size_t s) { return r.style < s; });
    if (it == rows.end() || it->style != style) return nullptr;
    return &*it;
}

// Same arithmetic as the single-cell functions, accumulated in the same order,
// so both paths agree bit for bit.
FeaturePanel build_feature_panel(const SubcategoryPanel& panel) {
    FeaturePanel fp;
    fp.subcategory_id_ = panel.subcategory_id();
    fp.weeks_ = panel.week_range();
    fp.styles_ = panel.styles();

    const std::size_t n_styles = panel.num_styles();
    const auto range = panel.week_range();

    std::vector<double> discount_sum(n_styles, 0.0);
    std::vector<double> views_sum(n_styles, 0.0);
    std::vector<int> live_count(n_styles, 0);
    std::vector<int> first_live(n_styles, 0);

    fp.week_offsets_.push_back(0);
    for (int week = range.first; week <= range.last; ++week) {
        double price_sum = 0.0;
        int n_live = 0;
        std::map<std::string, int> brand_live;
        for (std::size_t s = 0; s < n_styles; ++s) {
            const auto& obs = panel.at(s, week);
            if (!obs.is_live) continue;
            price_sum += obs.list_price;
            ++n_live;
            ++brand_live[obs.brand_id];
        }
        const double mean_price = n_live ? price_sum / n_live : 0.0;

        FeatureArray sums{};
        for (std::size_t s = 0; s < n_styles; ++s) {
            const auto& obs = panel.at(s, week);
            if (!obs.is_live) continue;
            if (live_count[s] == 0) first_live[s] = week;
            const double disc = discount_fraction(obs);
            discount_sum[s] += disc;
            views_sum[s] += static_cast<double>(obs.list_views);
            ++live_count[s];

            FeatureRow row;
            row.style = s;
            row.week = week;
            row.raw.discount_deviation = disc - discount_sum[s] / live_count[s];
            row.raw.normalized_list_price = obs.list_price / mean_price;
            const double views_mean = views_sum[s] / live_count[s];
            row.raw.list_views_deviation =
                (static_cast<double>(obs.list_views) - views_mean) / std::max(1.0, views_mean);
            row.raw.style_age = static_cast<double>(week - first_live[s] + 1);
            row.raw.first_time_on_discount = obs.first_time_on_discount ? 1.0 : 0.0;
            row.raw.brand_live_competition = brand_live[obs.brand_id] - 1;

            const auto values = row.raw.to_array();
            for (std::size_t k = 0; k < kNumFeatures; ++k) sums[k] += values[k];
            fp.rows_.push_back(row);
        }

        FeatureArray means{};
        const auto begin = fp.rows_.begin() + static_cast<std::ptrdiff_t>(fp.week_offsets_.back());
        if (n_live > 0) {
            for (std::size_t k = 0; k < kNumFeatures; ++k) means[k] = sums[k] / n_live;
            for (auto it = begin; it != fp.rows_.end(); ++it) {
                const auto values = it->raw.to_array();
                for (std::size_t k = 0; k < kNumFeatures; ++k) it->centered[k] = values[k] - means[k];
            }
        }
        fp.means_.push_back(means);
        fp.week_offsets_.push_back(fp.rows_.size());
    }
    return fp;
}

void write_feature_csv(std::ostream& out, const FeaturePanel& features) {
    out << "style_id,week";
    for (const auto& name : kFeatureNames) out << ',' << name;
    for (const auto& name : kFeatureNames) out << ",centered_" << name;
    out << '\n';
    for (const auto& row : features.rows()) {
        out << features.styles()[row.style] << ',' << row.week;
        for (const double v : row.raw.to_array()) out << ',' << detail::format_real(v);
        for (const double v : row.centered) out << ',' << detail::format_real(v);
        out << '\n';
    }
}

}  // namespace sq
