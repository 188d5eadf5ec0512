#include "helpers.hpp"

#include "sq/synthgen.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace sq;

namespace {

SynthConfig symmetric_pair() {
    SynthConfig c;
    c.n_styles = 2;
    c.n_brands = 1;
    c.gamma_sd = 0.0;
    c.initial_live_fraction = 1.0;
    c.exit_probability = 0.0;
    c.gap_probability = 0.0;
    c.initial_discount_share = 0.0;
    c.discount_start_probability = 0.0;
    c.price_log_sd = 0.0;
    c.price_revision_probability = 0.0;
    c.views_log_sd = 0.0;
    c.views_step_sd = 0.0;
    c.promo_probability = 0.0;
    c.noise_sd = 0.0;
    return c;
}

// Renames every style so that the lexicographic order is reversed.
std::string relabel(const std::string& id) {
    std::string out = "R";
    for (char ch : id) out += std::isdigit(static_cast<unsigned char>(ch)) ? static_cast<char>('9' - (ch - '0')) : ch;
    return out;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("fixed seed reproduces the panel and the truth") {
    SynthConfig c;
    c.seed = 99;
    const auto a = generate(c);
    const auto b = generate(c);
    CHECK(a.panel == b.panel);
    CHECK(a.truth.gamma_star == b.truth.gamma_star);
    CHECK(a.truth.beta_star == b.truth.beta_star);
    std::ostringstream oa, ob;
    write_panels(oa, {a.panel});
    write_panels(ob, {b.panel});
    CHECK(oa.str() == ob.str());

    c.seed = 100;
    CHECK_FALSE(generate(c).panel == a.panel);
}

TEST_CASE("generated panels pass load validation") {
    SynthConfig c;
    c.seed = 4;
    const auto r = generate(c);
    CHECK(r.panel.num_styles() == 200);
    CHECK(r.panel.num_weeks() == 26);
    for (const auto& o : r.panel.observations()) CHECK_NOTHROW(check_observation(o));
    std::ostringstream out;
    write_panels(out, {r.panel});
    std::istringstream in(out.str());
    const auto back = load_panels(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == r.panel);

    // staggered entry and exits exercise the age feature and the live-week filter
    int late = 0;
    for (std::size_t s = 0; s < r.panel.num_styles(); ++s)
        if (!r.panel.at(s, 1).is_live) ++late;
    CHECK(late > 50);
    CHECK(filter_min_weeks(r.panel, 4).num_styles() < r.panel.num_styles());
}

TEST_CASE("weekly totals equal customers per week") {
    SynthConfig c;
    c.customers_per_week = 12345;
    const auto r = generate(c);
    for (int w = 1; w <= r.panel.num_weeks(); ++w) CHECK(r.panel.total_sales(w) == 12345);
}

TEST_CASE("empirical shares converge to the choice probabilities") {
    SynthConfig c;
    c.noise_sd = 0.0;
    c.customers_per_week = 1000000;
    c.seed = 17;
    const auto r = generate(c);
    const auto fp = build_feature_panel(r.panel);
    double worst = 0.0;
    for (int w = 1; w <= r.panel.num_weeks(); ++w) {
        std::vector<double> u;
        std::vector<std::size_t> styles;
        for (const auto& row : fp.rows_in_week(w)) {
            double x = r.truth.gamma_star.at(r.panel.styles()[row.style]);
            for (std::size_t k = 0; k < kNumFeatures; ++k) x += r.truth.beta_star[k] * row.centered[k];
            u.push_back(x);
            styles.push_back(row.style);
        }
        double denom = 0.0;
        for (double x : u) denom += std::exp(x);
        const double total = static_cast<double>(r.panel.total_sales(w));
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double p = std::exp(u[i]) / denom;
            const double phat = static_cast<double>(r.panel.at(styles[i], w).sales_qty) / total;
            worst = std::max(worst, std::abs(phat - p));
        }
    }
    CHECK(worst <= 1e-2);
}

TEST_CASE("identical styles split sales evenly") {
    auto c = symmetric_pair();
    c.seed = 23;
    const auto r = generate(c);
    double a = 0.0, total = 0.0;
    for (int w = 1; w <= r.panel.num_weeks(); ++w) {
        a += static_cast<double>(r.panel.at(std::size_t{0}, w).sales_qty);
        total += static_cast<double>(r.panel.total_sales(w));
    }
    const double se = 0.5 / std::sqrt(total);
    CHECK(std::abs(a / total - 0.5) <= 5.0 * se);
}

TEST_CASE("default recovery") {
    SynthConfig c;
    c.seed = 7;
    const auto rep = recovery_experiment(c);
    CHECK(rep.pearson_gamma >= 0.95);
    CHECK(rep.rank_corr_gamma >= 0.9);
    CHECK(rep.styles_compared >= 150);
}

TEST_CASE("near-noiseless recovery of beta") {
    SynthConfig c;
    c.noise_sd = 0.0;
    c.customers_per_week = 100000000;
    const auto rep = recovery_experiment(c);
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
        INFO(kFeatureNames[k] << " relative error " << rep.beta_rel_error[k]);
        CHECK(rep.beta_rel_error[k] <= 1e-2);
    }
}

TEST_CASE("relabelling styles leaves the recovery report unchanged") {
    SynthConfig c;
    c.seed = 13;
    c.n_styles = 120;
    const auto r = generate(c);
    auto rows = r.panel.observations();
    for (auto& o : rows) o.style_id = relabel(o.style_id);
    const auto renamed = SubcategoryPanel::from_observations(r.panel.subcategory_id(), r.panel.week_range(), rows);
    CHECK(renamed.styles().front() == relabel(r.panel.styles().back()));
    GroundTruth truth = r.truth;
    truth.gamma_star.clear();
    for (const auto& [id, g] : r.truth.gamma_star) truth.gamma_star[relabel(id)] = g;

    const auto a = evaluate_recovery(r.panel, r.truth);
    const auto b = evaluate_recovery(renamed, truth);
    CHECK(a.styles_compared == b.styles_compared);
    CHECK(b.pearson_gamma == doctest::Approx(a.pearson_gamma).epsilon(1e-9));
    CHECK(b.rank_corr_gamma == doctest::Approx(a.rank_corr_gamma).epsilon(1e-9));
    for (std::size_t k = 0; k < kNumFeatures; ++k)
        CHECK(b.beta_rel_error[k] == doctest::Approx(a.beta_rel_error[k]).epsilon(1e-6));
}

TEST_CASE("recovery degrades with utility noise") {
    std::array<double, 3> mean{};
    const std::array<double, 3> sigma = {0.0, 0.25, 0.5};
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            SynthConfig c;
            c.noise_sd = sigma[i];
            c.seed = seed;
            mean[i] += recovery_experiment(c).pearson_gamma / 5.0;
        }
    }
    CHECK(mean[0] >= mean[1]);
    CHECK(mean[1] >= mean[2]);
}

TEST_CASE("config validation and JSON") {
    SynthConfig c;
    CHECK_NOTHROW(c.validate());
    c.n_styles = 1;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c = SynthConfig{};
    c.exit_probability = 1.5;
    CHECK_THROWS_AS(generate(c), std::invalid_argument);
    c = SynthConfig{};
    c.discount_cap = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = SynthConfig{};
    c.n_styles = 10;
    const auto r = generate(c);
    const auto doc = ground_truth_to_json(r.truth, c);
    CHECK(doc["gamma_star"].size() == 10);
    CHECK(doc["beta_star"].size() == kNumFeatures);
    CHECK(doc["config"]["seed"] == 1);
    CHECK(config_to_json(c)["customers_per_week"] == 50000);
}

}  // TEST_SUITE
