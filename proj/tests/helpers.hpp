#pragma once

#include "sq/panel.hpp"

#include <unistd.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace sq::test {

inline StyleWeekObservation obs(const std::string& style, int week, long sales, double list = 100.0,
                                double selling = 100.0, long views = 100, const std::string& brand = "b1",
                                bool live = true, const std::string& sub = "1") {
    StyleWeekObservation o;
    o.style_id = style;
    o.subcategory_id = sub;
    o.brand_id = brand;
    o.week = week;
    o.sales_qty = live ? sales : 0;
    o.is_live = live;
    o.days_live_in_week = live ? 7 : 0;
    o.list_price = list;
    o.selling_price = selling;
    o.list_views = live ? views : 0;
    return o;
}

inline StyleWeekObservation off(const std::string& style, int week, double list = 100.0,
                                const std::string& brand = "b1") {
    return obs(style, week, 0, list, list, 0, brand, false);
}

inline SubcategoryPanel make_panel(int weeks, std::vector<StyleWeekObservation> rows) {
    return SubcategoryPanel::from_observations("1", WeekRange{1, weeks}, std::move(rows));
}

inline std::string csv_header() {
    return "style_id,subcategory_id,brand_id,week,sales_qty,is_live,days_live_in_week,list_price,"
           "selling_price,list_views,first_time_on_discount,clicks,impressions\n";
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("sq_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace sq::test
