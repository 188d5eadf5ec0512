#include "helpers.hpp"

#include "sq/forecast.hpp"
#include "sq/insights.hpp"
#include "sq/synthgen.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace sq;
using sq::test::make_panel;
using sq::test::obs;

namespace {

StyleQuotientTable table(const std::vector<double>& values, const std::string& prefix = "s") {
    StyleQuotientTable t;
    for (std::size_t i = 0; i < values.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "%s%03zu", prefix.c_str(), i);
        t.normalized_sq[id] = values[i];
        t.raw_sq[id] = std::exp(values[i]);
    }
    return t;
}

std::vector<double> linspace(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5;
    return v;
}

std::vector<std::size_t> bin_sizes(const DecileAssignment& d) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(d.num_bins), 0);
    for (const auto& [id, b] : d.bin_of) ++sizes[static_cast<std::size_t>(b - 1)];
    return sizes;
}

}  // namespace

TEST_SUITE("insights") {

TEST_CASE("decile sizes") {
    CHECK(bin_sizes(decile_bins(table(linspace(20)))) == std::vector<std::size_t>(10, 2));
    CHECK(bin_sizes(decile_bins(table(linspace(23)))) ==
          std::vector<std::size_t>{3, 3, 3, 2, 2, 2, 2, 2, 2, 2});

    const auto flat = decile_bins(table(std::vector<double>(30, 0.4)));
    CHECK(flat.num_bins == 10);
    CHECK(flat.bin_of.at("s000") == 1);
    CHECK(flat.bin_of.at("s029") == 10);

    const auto few = decile_bins(table(linspace(4)));
    CHECK(few.fewer_than_ten);
    CHECK(few.num_bins == 4);
}

TEST_CASE("deciles order by SQ and partition the styles") {
    std::vector<double> v = {0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8, 0.0, 0.6, 0.4, 1.0, 0.55, 0.35};
    const auto t = table(v);
    const auto d = decile_bins(t);
    CHECK(d.bin_of.size() == v.size());
    for (const auto& [a, ba] : d.bin_of)
        for (const auto& [b, bb] : d.bin_of)
            if (t.normalized_sq.at(a) < t.normalized_sq.at(b)) CHECK(ba <= bb);
    CHECK(decile_bins(t).bin_of == d.bin_of);
}

TEST_CASE("distribution statistics") {
    const auto flat = sq_distribution_stats(table(std::vector<double>(5, 0.5)));
    CHECK(flat.stddev == 0.0);
    CHECK(flat.skewness == 0.0);
    CHECK(flat.share_above == 1.0);
    const auto low = sq_distribution_stats(table(std::vector<double>(5, 0.4)));
    CHECK(low.share_above == 0.0);

    const auto d = sq_distribution_stats(table({0.0, 0.1, 0.2, 0.9, 1.0}));
    CHECK(d.mean == doctest::Approx(0.44));
    CHECK(d.stddev == doctest::Approx(std::sqrt((0.44 * 0.44 + 0.34 * 0.34 + 0.24 * 0.24 + 0.46 * 0.46 +
                                                 0.56 * 0.56) / 5.0)));
    CHECK(d.share_above == doctest::Approx(0.4));
    CHECK(d.histogram.size() == 20);
    CHECK(std::accumulate(d.histogram.begin(), d.histogram.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.histogram.front() == doctest::Approx(0.2));
    CHECK(d.histogram.back() == doctest::Approx(0.2));
    CHECK_THROWS_AS(sq_distribution_stats(table({0.5})), std::invalid_argument);
}

TEST_CASE("decile performance degenerate inputs") {
    std::vector<StyleWeekObservation> rows;
    std::vector<double> v;
    for (int s = 0; s < 20; ++s) {
        char id[8];
        std::snprintf(id, sizeof id, "s%03d", s);
        for (int w = 1; w <= 6; ++w) rows.push_back(obs(id, w, w <= 4 ? s + 1 : 0, 100, 75));
        v.push_back(s / 19.0);
    }
    const auto p = make_panel(6, rows);
    const auto dec = decile_performance(p, table(v), WeekRange{5, 6});
    REQUIRE(dec.size() == 10);
    for (const auto& d : dec) {
        CHECK(d.style_count == 2);
        CHECK(d.mean_discount_fraction == doctest::Approx(0.25));
        CHECK(d.future_sale_rate == 0.0);
        CHECK_FALSE(d.mean_ctr.has_value());
    }
    for (std::size_t b = 1; b < dec.size(); ++b) CHECK(dec[b].mean_ros > dec[b - 1].mean_ros);
    CHECK_THROWS_AS(decile_performance(p, table(v), WeekRange{6, 7}), std::invalid_argument);
}

TEST_CASE("brand means") {
    std::vector<StyleWeekObservation> rows = {obs("s000", 1, 1, 100, 100, 1, "x"), obs("s001", 1, 1, 100, 100, 1, "x"),
                                              obs("s002", 1, 1, 100, 100, 1, "y"), obs("s003", 1, 1, 100, 100, 1, "z"),
                                              obs("s004", 1, 1, 100, 100, 1, "z")};
    const auto p = make_panel(1, rows);
    const auto brands = brand_mean_sq(p, table({0.2, 0.4, 0.9, 0.3, 0.3}));
    REQUIRE(brands.size() == 3);
    CHECK(brands[0].brand_id == "y");
    CHECK(brands[1].brand_id == "x");
    CHECK(brands[1].mean_normalized_sq == doctest::Approx(0.3));
    CHECK(brands[2].brand_id == "z");
    CHECK(brands[2].mean_normalized_sq == doctest::Approx(0.3));
    std::size_t total = 0;
    for (const auto& b : brands) total += b.style_count;
    CHECK(total == p.num_styles());

    const auto one = make_panel(1, {obs("s000", 1, 1), obs("s001", 1, 1), obs("s002", 1, 1)});
    const auto single = brand_mean_sq(one, table({0.1, 0.2, 0.3}));
    REQUIRE(single.size() == 1);
    CHECK(single[0].style_count == 3);
}

TEST_CASE("classification") {
    const auto c = classify_styles(table(linspace(100)), 0.9, 0.1);
    CHECK(c.top_sellers.size() == 10);
    CHECK(c.liquidation_candidates.size() == 10);
    for (const auto& id : c.top_sellers) CHECK_FALSE(c.liquidation_candidates.contains(id));
    CHECK(c.top_sellers.contains("s099"));
    CHECK(c.liquidation_candidates.contains("s000"));

    const auto flat = classify_styles(table(std::vector<double>(50, 0.3)), 0.9, 0.1);
    CHECK(flat.top_sellers.empty());
    CHECK(flat.liquidation_candidates.empty());

    CHECK_THROWS_AS(classify_styles(table(linspace(10)), 0.1, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(classify_styles(table(linspace(10)), 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("spearman") {
    CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman({1, 2, 3}, {1, 1, 2}) == doctest::Approx(std::sqrt(0.75)));
}

TEST_CASE("rate of sale rises across SQ deciles on simulated data") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        SynthConfig cfg;
        cfg.seed = seed;
        const auto panel = filter_min_weeks(generate(cfg).panel, 4);
        const auto fp = build_feature_panel(panel);
        const auto model = fit_choice_model(panel, fp, WeekRange{1, 22});
        const auto dec = decile_performance(panel, style_quotients(model), WeekRange{23, 26});
        std::vector<double> bin, ros;
        for (const auto& d : dec) {
            bin.push_back(d.bin);
            ros.push_back(d.mean_ros);
        }
        CAPTURE(seed);
        CHECK(spearman(bin, ros) >= 0.8);
        for (const auto& d : dec) REQUIRE(d.mean_ctr.has_value());
    }
}

TEST_CASE("CSV writers") {
    const auto t = table(linspace(30));
    std::ostringstream hist;
    write_histogram_csv(hist, sq_distribution_stats(t));
    std::istringstream in(hist.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "bin_lower,bin_upper,mass");
    double mass = 0.0;
    int rows = 0;
    while (std::getline(in, line)) {
        mass += std::stod(line.substr(line.rfind(',') + 1));
        ++rows;
    }
    CHECK(rows == 20);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

}  // TEST_SUITE
