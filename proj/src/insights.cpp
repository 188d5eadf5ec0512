#include "sq/insights.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace sq {

namespace {

std::vector<std::pair<double, std::string>> sorted_by_sq(const StyleQuotientTable& sq) {
    std::vector<std::pair<double, std::string>> order;
    order.reserve(sq.normalized_sq.size());
    for (const auto& [id, v] : sq.normalized_sq) order.emplace_back(v, id);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace

DecileAssignment decile_bins(const StyleQuotientTable& sq) {
    DecileAssignment out;
    const auto order = sorted_by_sq(sq);
    const std::size_t n = order.size();
    if (n == 0) return out;
    const std::size_t bins = std::min<std::size_t>(10, n);
    out.num_bins = static_cast<int>(bins);
    out.fewer_than_ten = n < 10;
    const std::size_t base = n / bins;
    const std::size_t extra = n % bins;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t size = base + (b < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i, ++pos) out.bin_of[order[pos].second] = static_cast<int>(b + 1);
    }
    return out;
}

SqDistribution sq_distribution_stats(const StyleQuotientTable& sq, double threshold) {
    const std::size_t n = sq.normalized_sq.size();
    if (n < 2) throw std::invalid_argument("SQ distribution needs at least 2 styles");
    SqDistribution d;
    d.threshold = threshold;
    d.histogram.assign(20, 0.0);

    double sum = 0.0;
    for (const auto& [id, v] : sq.normalized_sq) sum += v;
    d.mean = sum / static_cast<double>(n);
    double m2 = 0.0;
    double m3 = 0.0;
    std::size_t above = 0;
    for (const auto& [id, v] : sq.normalized_sq) {
        const double dev = v - d.mean;
        m2 += dev * dev;
        m3 += dev * dev * dev;
        if (v > threshold) ++above;
        const auto bin = std::clamp(static_cast<long>(std::floor(v * 20.0)), 0L, 19L);
        d.histogram[static_cast<std::size_t>(bin)] += 1.0;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    d.stddev = std::sqrt(m2);
    d.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    for (auto& h : d.histogram) h /= static_cast<double>(n);
    d.share_above = static_cast<double>(above) / static_cast<double>(n);
    return d;
}

std::vector<DecileSummary> decile_performance(const SubcategoryPanel& panel, const StyleQuotientTable& sq,
                                              WeekRange forward_window) {
    const auto range = panel.week_range();
    if (forward_window.size() <= 0 || !range.contains(forward_window.first) || !range.contains(forward_window.last))
        throw std::invalid_argument("forward window outside panel range");
    const WeekRange history = forward_window.first > range.first ? WeekRange{range.first, forward_window.first - 1}
                                                                 : range;

    StyleQuotientTable present;
    for (const auto& [id, v] : sq.normalized_sq)
        if (panel.style_index(id)) present.normalized_sq.emplace(id, v);
    const DecileAssignment bins = decile_bins(present);

    struct Acc {
        std::size_t styles = 0;
        double sq = 0.0;
        double discount = 0.0;
        std::size_t discount_styles = 0;
        double ros = 0.0;
        double clicks = 0.0;
        double impressions = 0.0;
        std::size_t future_sellers = 0;
    };
    std::vector<Acc> acc(static_cast<std::size_t>(bins.num_bins));

    for (const auto& [id, bin] : bins.bin_of) {
        auto& a = acc[static_cast<std::size_t>(bin - 1)];
        const std::size_t s = *panel.style_index(id);
        ++a.styles;
        a.sq += present.normalized_sq.at(id);

        double disc = 0.0;
        int live = 0;
        double units = 0.0;
        double days = 0.0;
        for (int w = history.first; w <= history.last; ++w) {
            const auto& obs = panel.at(s, w);
            if (!obs.is_live) continue;
            disc += (obs.list_price - obs.selling_price) / obs.list_price;
            ++live;
            units += static_cast<double>(obs.sales_qty);
            days += obs.days_live_in_week;
            if (obs.clicks && obs.impressions) {
                a.clicks += static_cast<double>(*obs.clicks);
                a.impressions += static_cast<double>(*obs.impressions);
            }
        }
        if (live > 0) {
            a.discount += disc / live;
            ++a.discount_styles;
        }
        a.ros += days > 0.0 ? units / days : 0.0;

        bool sold = false;
        for (int w = forward_window.first; w <= forward_window.last && !sold; ++w) sold = panel.at(s, w).sales_qty > 0;
        if (sold) ++a.future_sellers;
    }

    std::vector<DecileSummary> out;
    for (std::size_t b = 0; b < acc.size(); ++b) {
        const auto& a = acc[b];
        DecileSummary d;
        d.bin = static_cast<int>(b + 1);
        d.style_count = a.styles;
        const double n = static_cast<double>(a.styles);
        d.mean_normalized_sq = a.sq / n;
        d.mean_discount_fraction = a.discount_styles ? a.discount / static_cast<double>(a.discount_styles) : 0.0;
        d.mean_ros = a.ros / n;
        if (a.impressions > 0.0) d.mean_ctr = a.clicks / a.impressions;
        d.future_sale_rate = static_cast<double>(a.future_sellers) / n;
        out.push_back(d);
    }
    return out;
}

std::vector<BrandSummary> brand_mean_sq(const SubcategoryPanel& panel, const StyleQuotientTable& sq) {
    std::map<std::string, std::pair<std::size_t, double>> by_brand;
    for (const auto& [id, v] : sq.normalized_sq) {
        const auto s = panel.style_index(id);
        if (!s) continue;
        auto& entry = by_brand[panel.brand_of(*s)];
        ++entry.first;
        entry.second += v;
    }
    std::vector<BrandSummary> out;
    for (const auto& [brand, entry] : by_brand)
        out.push_back({brand, entry.first, entry.second / static_cast<double>(entry.first)});
    std::stable_sort(out.begin(), out.end(), [](const BrandSummary& a, const BrandSummary& b) {
        return a.mean_normalized_sq > b.mean_normalized_sq;
    });
    return out;
}

StyleClassification classify_styles(const StyleQuotientTable& sq, double top_quantile, double bottom_quantile) {
    if (!(bottom_quantile > 0.0 && bottom_quantile < top_quantile && top_quantile < 1.0))
        throw std::invalid_argument("quantiles must satisfy 0 < bottom < top < 1");
    StyleClassification out;
    const auto order = sorted_by_sq(sq);
    const auto n = static_cast<long>(order.size());
    if (n == 0) return out;
    const double eps = 1e-9;
    const long top_idx = std::clamp(static_cast<long>(std::ceil(top_quantile * n - eps)) - 1, 0L, n - 1);
    const long bottom_idx = std::clamp(static_cast<long>(std::floor(bottom_quantile * n + eps)), 0L, n - 1);
    out.top_threshold = order[static_cast<std::size_t>(top_idx)].first;
    out.bottom_threshold = order[static_cast<std::size_t>(bottom_idx)].first;
    for (const auto& [v, id] : order) {
        if (v > out.top_threshold) out.top_sellers.insert(id);
        if (v < out.bottom_threshold) out.liquidation_candidates.insert(id);
    }
    return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
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

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman needs two equal-length series");
    return pearson(average_ranks(x), average_ranks(y));
}

void write_decile_csv(std::ostream& out, const std::vector<DecileSummary>& deciles) {
    out << "bin,style_count,mean_normalized_sq,mean_discount_fraction,mean_ros,mean_ctr,future_sale_rate\n";
    for (const auto& d : deciles) {
        out << 'D' << d.bin << ',' << d.style_count << ',' << detail::format_real(d.mean_normalized_sq) << ','
            << detail::format_real(d.mean_discount_fraction) << ',' << detail::format_real(d.mean_ros) << ','
            << (d.mean_ctr ? detail::format_real(*d.mean_ctr) : std::string()) << ','
            << detail::format_real(d.future_sale_rate) << '\n';
    }
}

void write_brand_csv(std::ostream& out, const std::vector<BrandSummary>& brands) {
    out << "brand_id,style_count,mean_normalized_sq\n";
    for (const auto& b : brands)
        out << b.brand_id << ',' << b.style_count << ',' << detail::format_real(b.mean_normalized_sq) << '\n';
}

void write_histogram_csv(std::ostream& out, const SqDistribution& dist) {
    out << "bin_lower,bin_upper,mass\n";
    const double width = 1.0 / static_cast<double>(dist.histogram.size());
    for (std::size_t b = 0; b < dist.histogram.size(); ++b)
        out << detail::format_real(static_cast<double>(b) * width) << ','
            << detail::format_real(static_cast<double>(b + 1) * width) << ','
            << detail::format_real(dist.histogram[b]) << '\n';
}

void write_sq_table_csv(std::ostream& out, const SubcategoryPanel* panel, const FittedChoiceModel& model,
                        const StyleQuotientTable& sq) {
    out << "style_id,brand_id,gamma,raw_sq,normalized_sq\n";
    for (const auto& [id, g] : model.gamma) {
        std::string brand;
        if (panel)
            if (const auto s = panel->style_index(id)) brand = panel->brand_of(*s);
        out << id << ',' << brand << ',' << detail::format_real(g) << ',' << detail::format_real(sq.raw_sq.at(id))
            << ',' << detail::format_real(sq.normalized_sq.at(id)) << '\n';
    }
}

nlohmann::json insights_to_json(const SqDistribution& dist, const std::vector<DecileSummary>& deciles,
                                const std::vector<BrandSummary>& brands, const StyleClassification& classes) {
    using nlohmann::json;
    json doc;
    doc["distribution"] = {{"mean", dist.mean},
                           {"std", dist.stddev},
                           {"skewness", dist.skewness},
                           {"histogram", dist.histogram},
                           {"threshold", dist.threshold},
                           {"share_above", dist.share_above}};
    json bins = json::array();
    for (const auto& d : deciles) {
        json b = {{"bin", "D" + std::to_string(d.bin)},
                  {"style_count", d.style_count},
                  {"mean_normalized_sq", d.mean_normalized_sq},
                  {"mean_discount_fraction", d.mean_discount_fraction},
                  {"mean_ros", d.mean_ros},
                  {"future_sale_rate", d.future_sale_rate}};
        if (d.mean_ctr) b["mean_ctr"] = *d.mean_ctr;
        bins.push_back(b);
    }
    doc["deciles"] = bins;
    json brand_rows = json::array();
    for (const auto& b : brands)
        brand_rows.push_back({{"brand_id", b.brand_id}, {"style_count", b.style_count}, {"mean_normalized_sq", b.mean_normalized_sq}});
    doc["brands"] = brand_rows;
    doc["classification"] = {{"top_threshold", classes.top_threshold},
                             {"bottom_threshold", classes.bottom_threshold},
                             {"top_sellers", classes.top_sellers},
                             {"liquidation_candidates", classes.liquidation_candidates}};
    return doc;
}

}  // namespace sq
