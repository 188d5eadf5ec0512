#include "helpers.hpp"

#include <doctest.h>

#include <sstream>

using namespace sq;
using sq::test::csv_header;
using sq::test::make_panel;
using sq::test::obs;
using sq::test::off;

namespace {

PanelError load_error(const std::string& text) {
    std::istringstream in(text);
    try {
        load_panels(in);
    } catch (const PanelError& e) {
        return e;
    }
    FAIL("expected PanelError");
    return PanelError(PanelErrorKind::Io, "unreachable");
}

}  // namespace

TEST_SUITE("panel") {

TEST_CASE("three well-formed rows load into one single-week panel") {
    std::istringstream in(csv_header() +
                          "A,7,b1,1,3,1,7,100,80,50,1,,\n"
                          "B,7,b1,1,0,1,7,120,120,40,0,4,40\n"
                          "C,7,b2,1,0,0,0,90,90,0,0,,\n");
    const auto panels = load_panels(in);
    REQUIRE(panels.size() == 1);
    const auto& p = panels[0];
    CHECK(p.subcategory_id() == "7");
    CHECK(p.week_range() == WeekRange{1, 1});
    CHECK(p.size() == 3);
    CHECK(p.styles() == std::vector<std::string>{"A", "B", "C"});
    CHECK(p.at("A", 1).selling_price == 80.0);
    CHECK(p.at("A", 1).first_time_on_discount);
    CHECK_FALSE(p.at("A", 1).clicks.has_value());
    CHECK(p.at("B", 1).clicks == 4);
    CHECK(p.at("B", 1).impressions == 40);
    CHECK_FALSE(p.at("C", 1).is_live);
}

TEST_CASE("duplicate key names style, week and both lines") {
    const auto e = load_error(csv_header() +
                              "A,1,b1,1,1,1,7,10,10,5,0,,\n"
                              "A,1,b1,2,1,1,7,10,10,5,0,,\n"
                              "B,1,b1,2,1,1,7,10,10,5,0,,\n"
                              "A,1,b1,2,2,1,7,10,10,5,0,,\n");
    CHECK(e.kind() == PanelErrorKind::DuplicateKey);
    const std::string msg = e.what();
    CHECK(msg.find("style=A") != std::string::npos);
    CHECK(msg.find("week=2") != std::string::npos);
    CHECK(msg.find("lines 3 and 5") != std::string::npos);
}

TEST_CASE("non-live row with sales is rejected") {
    const auto e = load_error(csv_header() + "A,1,b1,1,5,0,0,10,10,0,0,,\n");
    CHECK(e.kind() == PanelErrorKind::InvariantViolation);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
}

TEST_CASE("row-level invariants") {
    auto base = obs("A", 1, 3, 100, 80);
    CHECK_NOTHROW(check_observation(base));

    auto o = base;
    o.selling_price = 120;
    CHECK_THROWS_AS(check_observation(o), PanelError);
    o = base;
    o.list_price = 0;
    CHECK_THROWS_AS(check_observation(o), PanelError);
    o = base;
    o.days_live_in_week = 8;
    CHECK_THROWS_AS(check_observation(o), PanelError);
    o = base;
    o.sales_qty = -1;
    CHECK_THROWS_AS(check_observation(o), PanelError);
    o = base;
    o.clicks = -2;
    CHECK_THROWS_AS(check_observation(o), PanelError);
}

TEST_CASE("missing header column is named") {
    std::string header = csv_header();
    header.replace(header.find("list_views,"), 11, "");
    const auto e = load_error(header + "A,1,b1,1,1,1,7,10,10,0,,\n");
    CHECK(e.kind() == PanelErrorKind::MissingColumn);
    CHECK(std::string(e.what()).find("list_views") != std::string::npos);
}

TEST_CASE("malformed field reports line and column") {
    const auto e = load_error(csv_header() + "A,1,b1,1,1,1,7,10,10,5,0,,\nA,1,b1,2,x,1,7,10,10,5,0,,\n");
    CHECK(e.kind() == PanelErrorKind::MalformedRow);
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("sales_qty") != std::string::npos);
}

TEST_CASE("columns are matched by name and quoted fields are accepted") {
    std::istringstream in(
        "impressions,clicks,first_time_on_discount,list_views,selling_price,list_price,days_live_in_week,"
        "is_live,sales_qty,week,brand_id,subcategory_id,style_id\n"
        ",,0,12,9.5,10,7,1,2,4,\"brand, x\",1,A\n");
    const auto panels = load_panels(in);
    REQUIRE(panels.size() == 1);
    CHECK(panels[0].week_range() == WeekRange{1, 1});
    CHECK(panels[0].at("A", 1).brand_id == "brand, x");
    CHECK(panels[0].at("A", 1).sales_qty == 2);
}

TEST_CASE("weeks are re-indexed from the earliest week and gaps are synthesized") {
    std::istringstream in(csv_header() +
                          "A,1,b1,10,1,1,7,10,10,5,0,,\n"
                          "A,1,b1,12,2,1,7,10,10,5,0,,\n"
                          "B,2,b2,11,3,1,7,20,20,5,0,,\n");
    const auto panels = load_panels(in);
    REQUIRE(panels.size() == 2);
    const auto& a = panels[0];
    CHECK(a.week_range() == WeekRange{1, 3});
    CHECK(a.size() == 3);
    CHECK(a.at("A", 3).sales_qty == 2);
    CHECK_FALSE(a.at("A", 2).is_live);
    CHECK(a.at("A", 2).list_price == 10.0);
    CHECK(panels[1].at("B", 2).sales_qty == 3);
    CHECK_FALSE(panels[1].at("B", 1).is_live);
}

TEST_CASE("iso weeks") {
    CHECK(iso_week_ordinal("2021-W01") + 1 == iso_week_ordinal("2021-W02"));
    CHECK(iso_week_ordinal("2020-W53") + 1 == iso_week_ordinal("2021-W01"));
    CHECK(iso_week_ordinal("2021-W52") + 1 == iso_week_ordinal("2022-W01"));
    CHECK_THROWS_AS(iso_week_ordinal("2021-W53"), std::invalid_argument);
    CHECK_THROWS_AS(iso_week_ordinal("2021-13"), std::invalid_argument);

    std::istringstream in(csv_header() + "A,1,b1,2020-W53,1,1,7,10,10,5,0,,\nA,1,b1,2021-W02,1,1,7,10,10,5,0,,\n");
    const auto panels = load_panels(in, LoadOptions{WeekFormat::IsoWeek});
    CHECK(panels[0].week_range() == WeekRange{1, 3});
}

TEST_CASE("a style may not change subcategory or brand") {
    auto e = load_error(csv_header() + "A,1,b1,1,1,1,7,10,10,5,0,,\nA,2,b1,2,1,1,7,10,10,5,0,,\n");
    CHECK(e.kind() == PanelErrorKind::InvariantViolation);
    CHECK_THROWS_AS(make_panel(2, {obs("A", 1, 1, 100, 100, 1, "b1"), obs("A", 2, 1, 100, 100, 1, "b2")}),
                    PanelError);
}

TEST_CASE("write then load is the identity") {
    std::vector<StyleWeekObservation> rows;
    for (int w = 1; w <= 4; ++w) {
        rows.push_back(obs("A", w, w, 199.99, 149.5, 1000 + w, "x"));
        if (w != 2) rows.push_back(obs("B", w, 2 * w, 0.1 + 0.2, 0.1, 7, "y"));
    }
    rows[0].clicks = 3;
    rows[0].impressions = 90;
    rows[0].first_time_on_discount = true;
    const auto p = make_panel(4, rows);
    std::ostringstream out;
    write_panels(out, {p});
    std::istringstream in(out.str());
    const auto back = load_panels(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0] == p);

    std::ostringstream again;
    write_panels(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("filter_min_weeks") {
    std::vector<StyleWeekObservation> rows;
    for (int w = 1; w <= 26; ++w) {
        rows.push_back(w <= 3 ? obs("short", w, 1) : off("short", w));
        rows.push_back(w <= 4 ? obs("four", w, 1) : off("four", w));
        rows.push_back(obs("full", w, 1));
    }
    const auto p = make_panel(26, rows);
    const auto kept = filter_min_weeks(p, 4);
    CHECK(kept.styles() == std::vector<std::string>{"four", "full"});
    CHECK(filter_min_weeks(p, 1) == p);
    CHECK(filter_min_weeks(kept, 4) == kept);
    CHECK_THROWS_AS(filter_min_weeks(p, 0), std::invalid_argument);
}

TEST_CASE("split_train_test") {
    std::vector<StyleWeekObservation> rows;
    for (int w = 1; w <= 26; ++w) rows.push_back(obs("A", w, w));
    const auto p = make_panel(26, rows);
    const auto s = split_train_test(p, 22);
    CHECK(s.train.week_range() == WeekRange{1, 22});
    CHECK(s.test.week_range() == WeekRange{23, 26});
    CHECK(s.test.at("A", 23).sales_qty == 23);
    CHECK(s.train.size() + s.test.size() == p.size());
    CHECK_THROWS_AS(split_train_test(p, 26), PanelError);
    CHECK_THROWS_AS(split_train_test(p, 0), PanelError);

    const auto small = make_panel(2, {obs("A", 1, 1), obs("A", 2, 2)});
    const auto t = split_train_test(small, 1);
    CHECK(t.test.week_range() == WeekRange{2, 2});
}

TEST_CASE("assortment_at") {
    const auto p = make_panel(2, {obs("A", 1, 1), obs("B", 1, 0), off("C", 1), off("A", 2), off("B", 2),
                                  off("C", 2)});
    CHECK(assortment_at(p, 1).live_styles == std::vector<std::size_t>{0, 1});
    CHECK(assortment_at(p, 2).live_styles.empty());
    CHECK_THROWS_AS(assortment_at(p, 3), PanelError);
    CHECK_THROWS_AS(assortment_at(p, 0), PanelError);
}

}  // TEST_SUITE
