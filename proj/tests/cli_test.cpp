#include "helpers.hpp"

#include "sq/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace sq;
using sq::test::csv_header;
using sq::test::TempDir;

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "sq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

fs::path simulate(const TempDir& dir, std::vector<std::string> extra = {}) {
    std::vector<std::string> args = {"simulate", "--out-dir", dir.path().string(), "--styles", "60",
                                     "--customers", "20000"};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = run(args);
    REQUIRE(r.code == kExitOk);
    return dir / "panel.csv";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("validate") {
    TempDir dir("validate");
    const auto clean = simulate(dir);
    CHECK(run({"validate", "--input", clean.string()}).code == kExitOk);

    spit(dir / "dup.csv", csv_header() + "A,1,b,1,1,1,7,10,10,5,0,,\nA,1,b,2,1,1,7,10,10,5,0,,\n"
                                         "A,1,b,2,1,1,7,10,10,5,0,,\n");
    auto r = run({"validate", "--input", (dir / "dup.csv").string()});
    CHECK(r.code == kExitInput);
    CHECK(r.err.find("style=A, week=2") != std::string::npos);

    std::string header = csv_header();
    header.replace(header.find("brand_id,"), 9, "");
    spit(dir / "nocol.csv", header + "A,1,1,1,1,7,10,10,5,0,,\n");
    r = run({"validate", "--input", (dir / "nocol.csv").string()});
    CHECK(r.code == kExitInput);
    CHECK(r.err.find("brand_id") != std::string::npos);

    CHECK(run({"validate", "--input", (dir / "absent.csv").string()}).code == kExitInput);
    CHECK(run({"frobnicate"}).code == kExitInput);
    CHECK(run({"fit", "--input", clean.string(), "--smoothing", "mean"}).code == kExitInput);
}

TEST_CASE("simulate writes the panel and the ground truth") {
    TempDir dir("simulate");
    simulate(dir, {"--subcategories", "3", "--weeks", "10"});
    std::ifstream in(dir / "panel.csv");
    const auto panels = load_panels(in);
    REQUIRE(panels.size() == 3);
    for (const auto& p : panels) {
        CHECK(p.num_styles() == 60);
        CHECK(p.num_weeks() == 10);
    }
    const auto truth = nlohmann::json::parse(slurp(dir / "ground_truth.json"));
    CHECK(truth.is_object());
    CHECK(truth.dump().find("beta_star") != std::string::npos);
}

TEST_CASE("fit writes one model per subcategory and is reproducible") {
    TempDir dir("fit");
    const auto panel = simulate(dir, {"--subcategories", "5"});
    const auto a = dir / "a";
    const auto b = dir / "b";
    REQUIRE(run({"fit", "--input", panel.string(), "--out-dir", a.string(), "--dump-features"}).code == kExitOk);
    REQUIRE(run({"fit", "--input", panel.string(), "--out-dir", b.string(), "--dump-features"}).code == kExitOk);

    int models = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("model_", 0) == 0) ++models;
        CHECK(slurp(entry.path()) == slurp(b / name));
    }
    CHECK(models == 5);

    const auto doc = nlohmann::json::parse(slurp(a / "model_3.json"));
    CHECK(doc["subcategory_id"] == "3");
    CHECK(doc["feature_names"].size() == 6);
    CHECK(doc["beta"].size() == 6);
    CHECK(doc["gamma"].size() > 0);
    CHECK(doc["centering"] == "geometric");
    CHECK(doc["diagnostics"]["rank_warnings"].is_array());
    CHECK(doc["diagnostics"]["r2"].is_number());

    const auto sq = lines(slurp(a / "sq_1.csv"));
    CHECK(sq.front() == "style_id,brand_id,gamma,raw_sq,normalized_sq");
    CHECK(sq.size() == doc["gamma"].size() + 1);
}

TEST_CASE("backtest outputs") {
    TempDir dir("backtest");
    const auto panel = simulate(dir, {"--subcategories", "2"});
    const auto a = dir / "a";
    const auto b = dir / "b";
    REQUIRE(run({"backtest", "--input", panel.string(), "--out-dir", a.string()}).code == kExitOk);
    REQUIRE(run({"backtest", "--input", panel.string(), "--out-dir", b.string()}).code == kExitOk);
    for (const char* name : {"backtest.json", "backtest_by_subcategory.csv", "backtest_by_week.csv", "predictions.csv"}) {
        REQUIRE(fs::exists(a / name));
        CHECK(slurp(a / name) == slurp(b / name));
    }
    const auto weeks = lines(slurp(a / "backtest_by_week.csv"));
    REQUIRE(weeks.size() == 5);
    for (int i = 1; i <= 4; ++i) CHECK(weeks[static_cast<std::size_t>(i)].rfind(std::to_string(22 + i) + ",", 0) == 0);
    const auto subs = lines(slurp(a / "backtest_by_subcategory.csv"));
    CHECK(subs.back().rfind("Overall,", 0) == 0);

    CHECK(run({"backtest", "--input", panel.string(), "--out-dir", a.string(), "--train-weeks", "26"}).code ==
          kExitInput);
}

TEST_CASE("report outputs") {
    TempDir dir("report");
    const auto panel = simulate(dir);
    const auto out = dir / "out";
    REQUIRE(run({"fit", "--input", panel.string(), "--out-dir", out.string(), "--train-weeks", "22"}).code == kExitOk);
    REQUIRE(run({"report", "--input", panel.string(), "--out-dir", out.string(), "--model",
                 (out / "model_1.json").string()})
                .code == kExitOk);

    const auto deciles = lines(slurp(out / "deciles_1.csv"));
    CHECK(deciles.size() == 11);
    CHECK(deciles[1].rfind("D1,", 0) == 0);

    const auto brands = lines(slurp(out / "brands_1.csv"));
    std::vector<double> means;
    for (std::size_t i = 1; i < brands.size(); ++i) means.push_back(std::stod(brands[i].substr(brands[i].rfind(',') + 1)));
    CHECK(means.size() >= 2);
    CHECK(std::is_sorted(means.rbegin(), means.rend()));

    double mass = 0.0;
    const auto hist = lines(slurp(out / "histogram_1.csv"));
    for (std::size_t i = 1; i < hist.size(); ++i) mass += std::stod(hist[i].substr(hist[i].rfind(',') + 1));
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));

    const auto report = nlohmann::json::parse(slurp(out / "report_1.json"));
    CHECK(report.is_object());
    CHECK(fs::exists(out / "classification_1.csv"));
}

}  // TEST_SUITE
