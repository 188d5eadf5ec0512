#include "sq/panel.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <chrono>
#include <fstream>
#include <map>
#include <sstream>

namespace sq {

const std::vector<std::string> kPanelColumns = {
    "style_id",   "subcategory_id", "brand_id",      "week",
    "sales_qty",  "is_live",        "days_live_in_week", "list_price",
    "selling_price", "list_views",  "first_time_on_discount", "clicks",
    "impressions",
};

const char* to_string(PanelErrorKind kind) {
    switch (kind) {
    case PanelErrorKind::MissingColumn: return "missing-column";
    case PanelErrorKind::MalformedRow: return "malformed-row";
    case PanelErrorKind::DuplicateKey: return "duplicate-key";
    case PanelErrorKind::InvariantViolation: return "invariant-violation";
    case PanelErrorKind::OutOfRange: return "out-of-range";
    case PanelErrorKind::Io: return "io";
    }
    return "unknown";
}

namespace {

std::string describe(const StyleWeekObservation& obs) {
    return "(style=" + obs.style_id + ", week=" + std::to_string(obs.week) + ")";
}

[[noreturn]] void violation(const std::string& message) {
    throw PanelError(PanelErrorKind::InvariantViolation, message);
}

}  // namespace

void check_observation(const StyleWeekObservation& obs) {
    if (obs.style_id.empty()) violation("empty style_id");
    if (obs.sales_qty < 0) violation(describe(obs) + ": sales_qty must be non-negative");
    if (obs.list_views < 0) violation(describe(obs) + ": list_views must be non-negative");
    if (obs.days_live_in_week < 0 || obs.days_live_in_week > 7)
        violation(describe(obs) + ": days_live_in_week must lie in 0..7");
    if (!obs.is_live && (obs.sales_qty != 0 || obs.days_live_in_week != 0))
        violation(describe(obs) + ": non-live row must have sales_qty=0 and days_live_in_week=0");
    if (!(obs.list_price > 0.0)) violation(describe(obs) + ": list_price must be positive");
    if (!(obs.selling_price > 0.0)) violation(describe(obs) + ": selling_price must be positive");
    if (obs.selling_price > obs.list_price)
        violation(describe(obs) + ": selling_price exceeds list_price");
    if (obs.clicks && *obs.clicks < 0) violation(describe(obs) + ": clicks must be non-negative");
    if (obs.impressions && *obs.impressions < 0)
        violation(describe(obs) + ": impressions must be non-negative");
    if (obs.clicks && obs.impressions && *obs.clicks > *obs.impressions)
        violation(describe(obs) + ": clicks exceed impressions");
}

SubcategoryPanel SubcategoryPanel::from_observations(std::string subcategory_id, WeekRange weeks,
                                                     std::vector<StyleWeekObservation> observations) {
    if (weeks.size() <= 0)
        throw PanelError(PanelErrorKind::OutOfRange, "panel week range is empty");

    SubcategoryPanel panel;
    panel.subcategory_id_ = std::move(subcategory_id);
    panel.weeks_ = weeks;

    for (const auto& obs : observations) {
        if (obs.subcategory_id != panel.subcategory_id_)
            violation(describe(obs) + ": subcategory " + obs.subcategory_id + " does not match panel " +
                      panel.subcategory_id_);
        if (!weeks.contains(obs.week))
            throw PanelError(PanelErrorKind::OutOfRange,
                             describe(obs) + ": week outside panel range");
        panel.styles_.push_back(obs.style_id);
    }
    std::sort(panel.styles_.begin(), panel.styles_.end());
    panel.styles_.erase(std::unique(panel.styles_.begin(), panel.styles_.end()), panel.styles_.end());
    for (std::size_t i = 0; i < panel.styles_.size(); ++i) panel.index_.emplace(panel.styles_[i], i);

    const auto n_weeks = static_cast<std::size_t>(weeks.size());
    std::vector<char> filled(panel.styles_.size() * n_weeks, 0);
    panel.cells_.resize(panel.styles_.size() * n_weeks);
    for (auto& obs : observations) {
        const std::size_t slot = panel.index_.at(obs.style_id) * n_weeks +
                                 static_cast<std::size_t>(obs.week - weeks.first);
        if (filled[slot])
            throw PanelError(PanelErrorKind::DuplicateKey, "duplicate key " + describe(obs));
        filled[slot] = 1;
        panel.cells_[slot] = std::move(obs);
    }

    for (std::size_t s = 0; s < panel.styles_.size(); ++s) {
        const StyleWeekObservation* proto = nullptr;
        for (std::size_t w = 0; w < n_weeks && !proto; ++w)
            if (filled[s * n_weeks + w]) proto = &panel.cells_[s * n_weeks + w];
        for (std::size_t w = 0; w < n_weeks; ++w) {
            auto& cell = panel.cells_[s * n_weeks + w];
            if (filled[s * n_weeks + w]) {
                if (cell.brand_id != proto->brand_id)
                    violation(describe(cell) + ": brand " + cell.brand_id + " conflicts with " +
                              proto->brand_id);
                continue;
            }
            StyleWeekObservation gap;
            gap.style_id = proto->style_id;
            gap.subcategory_id = proto->subcategory_id;
            gap.brand_id = proto->brand_id;
            gap.week = weeks.first + static_cast<int>(w);
            gap.list_price = proto->list_price;
            gap.selling_price = proto->list_price;
            cell = std::move(gap);
        }
    }
    return panel;
}

std::optional<std::size_t> SubcategoryPanel::style_index(const std::string& style_id) const {
    const auto it = index_.find(style_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const StyleWeekObservation& SubcategoryPanel::at(std::size_t style, int week) const {
    if (style >= styles_.size() || !weeks_.contains(week))
        throw PanelError(PanelErrorKind::OutOfRange,
                         "cell (" + std::to_string(style) + ", " + std::to_string(week) + ") out of range");
    return cells_[style * static_cast<std::size_t>(weeks_.size()) +
                  static_cast<std::size_t>(week - weeks_.first)];
}

const StyleWeekObservation& SubcategoryPanel::at(const std::string& style_id, int week) const {
    const auto idx = style_index(style_id);
    if (!idx) throw PanelError(PanelErrorKind::OutOfRange, "unknown style " + style_id);
    return at(*idx, week);
}

int SubcategoryPanel::live_week_count(std::size_t style) const {
    int count = 0;
    for (int w = weeks_.first; w <= weeks_.last; ++w) count += at(style, w).is_live ? 1 : 0;
    return count;
}

long SubcategoryPanel::total_sales(int week) const {
    long total = 0;
    for (std::size_t s = 0; s < styles_.size(); ++s) total += at(s, week).sales_qty;
    return total;
}

// ---------------------------------------------------------------------------
// CSV ingestion

long iso_week_ordinal(const std::string& token) {
    using namespace std::chrono;
    int year = 0;
    int week = 0;
    if (token.size() != 8 || token[4] != '-' || (token[5] != 'W' && token[5] != 'w'))
        throw std::invalid_argument("expected YYYY-Www, got '" + token + "'");
    const auto* b = token.data();
    if (std::from_chars(b, b + 4, year).ptr != b + 4 || std::from_chars(b + 6, b + 8, week).ptr != b + 8)
        throw std::invalid_argument("expected YYYY-Www, got '" + token + "'");

    auto week1_monday = [](int y) {
        const sys_days jan4{std::chrono::year{y} / January / 4};
        const auto offset = weekday{jan4}.iso_encoding() - 1;
        return jan4 - days{offset};
    };
    const sys_days first = week1_monday(year);
    const sys_days dec28{std::chrono::year{year} / December / 28};
    const auto last_monday = dec28 - days{weekday{dec28}.iso_encoding() - 1};
    const long weeks_in_year = (last_monday - first).count() / 7 + 1;
    if (week < 1 || week > weeks_in_year)
        throw std::invalid_argument("ISO week " + std::to_string(week) + " out of range for " +
                                    std::to_string(year));
    const auto monday = first + days{7L * (week - 1)};
    // 1970-01-05 was a Monday; shift so Mondays divide evenly.
    return (monday.time_since_epoch().count() + 3) / 7;
}

namespace {

struct RawRow {
    StyleWeekObservation obs;
    long week_key = 0;
    std::size_t line = 0;
};

[[noreturn]] void malformed(std::size_t line, const std::string& column, const std::string& what) {
    throw PanelError(PanelErrorKind::MalformedRow,
                     "line " + std::to_string(line) + ", column " + column + ": " + what);
}

template <typename Int>
Int parse_int(const std::string& field, std::size_t line, const std::string& column) {
    Int value{};
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, value);
    if (field.empty() || res.ec != std::errc{} || res.ptr != end)
        malformed(line, column, "expected integer, got '" + field + "'");
    return value;
}

double parse_real(const std::string& field, std::size_t line, const std::string& column) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    const auto res = std::from_chars(field.data(), end, value);
    if (field.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(value))
        malformed(line, column, "expected number, got '" + field + "'");
    return value;
}

bool parse_bool(const std::string& field, std::size_t line, const std::string& column) {
    if (field == "0") return false;
    if (field == "1") return true;
    malformed(line, column, "expected 0 or 1, got '" + field + "'");
}

std::optional<long> parse_optional(const std::string& field, std::size_t line,
                                   const std::string& column) {
    if (field.empty()) return std::nullopt;
    return parse_int<long>(field, line, column);
}

}  // namespace

std::vector<SubcategoryPanel> load_panels(std::istream& in, const LoadOptions& options) {
    std::string line;
    std::size_t line_no = 0;

    std::array<std::size_t, 13> col{};
    if (!std::getline(in, line))
        throw PanelError(PanelErrorKind::MissingColumn, "empty input: header row required");
    ++line_no;
    {
        const auto header = detail::split_csv_line(line);
        for (std::size_t c = 0; c < kPanelColumns.size(); ++c) {
            const auto it = std::find(header.begin(), header.end(), kPanelColumns[c]);
            if (it == header.end())
                throw PanelError(PanelErrorKind::MissingColumn,
                                 "header is missing column " + kPanelColumns[c]);
            col[c] = static_cast<std::size_t>(it - header.begin());
        }
    }
    const std::size_t n_fields = *std::max_element(col.begin(), col.end()) + 1;

    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() < n_fields)
            malformed(line_no, kPanelColumns[0],
                      "expected at least " + std::to_string(n_fields) + " fields, got " +
                          std::to_string(f.size()));
        auto field = [&](std::size_t c) -> const std::string& { return f[col[c]]; };
        const auto& name = kPanelColumns;

        RawRow row;
        row.line = line_no;
        auto& o = row.obs;
        o.style_id = field(0);
        o.subcategory_id = field(1);
        o.brand_id = field(2);
        if (o.style_id.empty()) malformed(line_no, name[0], "empty identifier");
        if (o.subcategory_id.empty()) malformed(line_no, name[1], "empty identifier");
        if (options.week_format == WeekFormat::Integer) {
            row.week_key = parse_int<long>(field(3), line_no, name[3]);
        } else {
            try {
                row.week_key = iso_week_ordinal(field(3));
            } catch (const std::invalid_argument& e) {
                malformed(line_no, name[3], e.what());
            }
        }
        o.sales_qty = parse_int<long>(field(4), line_no, name[4]);
        o.is_live = parse_bool(field(5), line_no, name[5]);
        o.days_live_in_week = parse_int<int>(field(6), line_no, name[6]);
        o.list_price = parse_real(field(7), line_no, name[7]);
        o.selling_price = parse_real(field(8), line_no, name[8]);
        o.list_views = parse_int<long>(field(9), line_no, name[9]);
        o.first_time_on_discount = parse_bool(field(10), line_no, name[10]);
        o.clicks = parse_optional(field(11), line_no, name[11]);
        o.impressions = parse_optional(field(12), line_no, name[12]);
        try {
            check_observation(o);
        } catch (const PanelError& e) {
            throw PanelError(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return {};

    const auto [min_it, max_it] = std::minmax_element(
        rows.begin(), rows.end(), [](const RawRow& a, const RawRow& b) { return a.week_key < b.week_key; });
    const long base = min_it->week_key;
    const WeekRange weeks{1, static_cast<int>(max_it->week_key - base + 1)};

    // Keys are checked here so both offending lines can be named.
    std::map<std::pair<std::string, long>, std::size_t> seen;
    std::map<std::string, std::pair<std::string, std::size_t>> style_home;
    std::map<std::string, std::vector<StyleWeekObservation>> by_subcategory;
    for (auto& row : rows) {
        const auto [it, inserted] = seen.emplace(std::make_pair(row.obs.style_id, row.week_key), row.line);
        if (!inserted)
            throw PanelError(PanelErrorKind::DuplicateKey,
                             "duplicate key (style=" + row.obs.style_id + ", week=" +
                                 std::to_string(row.week_key - base + 1) + ") on lines " +
                                 std::to_string(it->second) + " and " + std::to_string(row.line));
        const auto [home, fresh] =
            style_home.emplace(row.obs.style_id, std::make_pair(row.obs.subcategory_id, row.line));
        if (!fresh && home->second.first != row.obs.subcategory_id)
            throw PanelError(PanelErrorKind::InvariantViolation,
                             "line " + std::to_string(row.line) + ": style " + row.obs.style_id +
                                 " appears in subcategories " + home->second.first + " and " +
                                 row.obs.subcategory_id);
        row.obs.week = static_cast<int>(row.week_key - base + 1);
        by_subcategory[row.obs.subcategory_id].push_back(std::move(row.obs));
    }

    std::vector<SubcategoryPanel> panels;
    for (auto& [sub, obs] : by_subcategory)
        panels.push_back(SubcategoryPanel::from_observations(sub, weeks, std::move(obs)));
    return panels;
}

std::vector<SubcategoryPanel> load_panels(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw PanelError(PanelErrorKind::Io, "cannot open " + path.string());
    return load_panels(in, options);
}

void write_panels(std::ostream& out, const std::vector<SubcategoryPanel>& panels) {
    for (std::size_t c = 0; c < kPanelColumns.size(); ++c) out << (c ? "," : "") << kPanelColumns[c];
    out << '\n';
    for (const auto& panel : panels) {
        for (const auto& o : panel.observations()) {
            out << o.style_id << ',' << o.subcategory_id << ',' << o.brand_id << ',' << o.week << ','
                << o.sales_qty << ',' << (o.is_live ? 1 : 0) << ',' << o.days_live_in_week << ','
                << detail::format_real(o.list_price) << ',' << detail::format_real(o.selling_price) << ','
                << o.list_views << ',' << (o.first_time_on_discount ? 1 : 0) << ',';
            if (o.clicks) out << *o.clicks;
            out << ',';
            if (o.impressions) out << *o.impressions;
            out << '\n';
        }
    }
}

void write_panels(const std::filesystem::path& path, const std::vector<SubcategoryPanel>& panels) {
    std::ofstream out(path);
    if (!out) throw PanelError(PanelErrorKind::Io, "cannot write " + path.string());
    write_panels(out, panels);
}

// ---------------------------------------------------------------------------
// Panel transforms

namespace {

SubcategoryPanel rebuild(const SubcategoryPanel& panel, WeekRange weeks,
                         const std::vector<std::size_t>& keep) {
    std::vector<StyleWeekObservation> obs;
    obs.reserve(keep.size() * static_cast<std::size_t>(weeks.size()));
    for (const auto s : keep)
        for (int w = weeks.first; w <= weeks.last; ++w) obs.push_back(panel.at(s, w));
    return SubcategoryPanel::from_observations(panel.subcategory_id(), weeks, std::move(obs));
}

std::vector<std::size_t> all_styles(const SubcategoryPanel& panel) {
    std::vector<std::size_t> idx(panel.num_styles());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

}  // namespace

SubcategoryPanel filter_min_weeks(const SubcategoryPanel& panel, int min_weeks) {
    if (min_weeks < 1) throw std::invalid_argument("min_weeks must be >= 1");
    std::vector<std::size_t> keep;
    for (std::size_t s = 0; s < panel.num_styles(); ++s)
        if (panel.live_week_count(s) >= min_weeks) keep.push_back(s);
    if (keep.empty()) {
        SubcategoryPanel empty = SubcategoryPanel::from_observations(panel.subcategory_id(),
                                                                     panel.week_range(), {});
        return empty;
    }
    return rebuild(panel, panel.week_range(), keep);
}

TrainTestSplit split_train_test(const SubcategoryPanel& panel, int train_weeks) {
    const auto range = panel.week_range();
    if (train_weeks < 1 || train_weeks >= range.size())
        throw PanelError(PanelErrorKind::OutOfRange,
                         "train_weeks must lie in [1, " + std::to_string(range.size() - 1) + "], got " +
                             std::to_string(train_weeks));
    const int cut = range.first + train_weeks - 1;
    return {slice_weeks(panel, {range.first, cut}), slice_weeks(panel, {cut + 1, range.last})};
}

SubcategoryPanel slice_weeks(const SubcategoryPanel& panel, WeekRange weeks) {
    const auto range = panel.week_range();
    if (weeks.size() <= 0 || !range.contains(weeks.first) || !range.contains(weeks.last))
        throw PanelError(PanelErrorKind::OutOfRange, "week slice outside panel range");
    return rebuild(panel, weeks, all_styles(panel));
}

Assortment assortment_at(const SubcategoryPanel& panel, int week) {
    if (!panel.week_range().contains(week))
        throw PanelError(PanelErrorKind::OutOfRange, "week " + std::to_string(week) + " outside panel range");
    Assortment a{week, {}};
    for (std::size_t s = 0; s < panel.num_styles(); ++s)
        if (panel.at(s, week).is_live) a.live_styles.push_back(s);
    return a;
}

}  // namespace sq
