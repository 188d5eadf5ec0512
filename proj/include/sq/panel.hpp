#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sq {

/// One style x week row of a weekly sales panel.
struct StyleWeekObservation {
    std::string style_id;
    std::string subcategory_id;
    std::string brand_id;
    int week = 0;
    long sales_qty = 0;
    bool is_live = false;
    int days_live_in_week = 0;
    double list_price = 0.0;
    double selling_price = 0.0;
    long list_views = 0;
    bool first_time_on_discount = false;
    std::optional<long> clicks;
    std::optional<long> impressions;

    bool operator==(const StyleWeekObservation&) const = default;
};

/// Inclusive range of week indices.
struct WeekRange {
    int first = 1;
    int last = 0;

    int size() const { return last >= first ? last - first + 1 : 0; }
    bool contains(int week) const { return week >= first && week <= last; }
    bool operator==(const WeekRange&) const = default;
};

enum class PanelErrorKind {
    MissingColumn,
    MalformedRow,
    DuplicateKey,
    InvariantViolation,
    OutOfRange,
    Io,
};

const char* to_string(PanelErrorKind kind);

class PanelError : public std::runtime_error {
public:
    PanelError(PanelErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    PanelErrorKind kind() const { return kind_; }

private:
    PanelErrorKind kind_;
};

/// Throws PanelError(InvariantViolation) when a single observation breaks a row-level rule.
void check_observation(const StyleWeekObservation& obs);

/// All observations of one subcategory over a contiguous week range.
///
/// Storage is dense: every style in the universal set has exactly one
/// observation per week of the range. Weeks where a style was absent from the
/// source are synthesized as non-live rows with zero activity. Panels are
/// immutable once built.
class SubcategoryPanel {
public:
    SubcategoryPanel() = default;

    /// Builds a panel from sparse observations. All rows must share one
    /// subcategory, lie inside `weeks`, and have unique (style, week) keys.
    /// Missing (style, week) cells are synthesized as non-live.
    static SubcategoryPanel from_observations(std::string subcategory_id, WeekRange weeks,
                                              std::vector<StyleWeekObservation> observations);

    const std::string& subcategory_id() const { return subcategory_id_; }
    WeekRange week_range() const { return weeks_; }
    int num_weeks() const { return weeks_.size(); }

    /// Style ids in ascending lexicographic order.
    const std::vector<std::string>& styles() const { return styles_; }
    std::size_t num_styles() const { return styles_.size(); }
    const std::string& brand_of(std::size_t style) const { return at(style, weeks_.first).brand_id; }

    std::optional<std::size_t> style_index(const std::string& style_id) const;

    const StyleWeekObservation& at(std::size_t style, int week) const;
    const StyleWeekObservation& at(const std::string& style_id, int week) const;

    /// Row-major (style, week) storage.
    const std::vector<StyleWeekObservation>& observations() const { return cells_; }
    std::size_t size() const { return cells_.size(); }

    int live_week_count(std::size_t style) const;
    long total_sales(int week) const;

    bool operator==(const SubcategoryPanel& other) const {
        return subcategory_id_ == other.subcategory_id_ && weeks_ == other.weeks_ &&
               styles_ == other.styles_ && cells_ == other.cells_;
    }

private:
    std::string subcategory_id_;
    WeekRange weeks_{1, 0};
    std::vector<std::string> styles_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<StyleWeekObservation> cells_;
};

/// Set of styles live in one week (style indices into the panel).
struct Assortment {
    int week = 0;
    std::vector<std::size_t> live_styles;
};

enum class WeekFormat { Integer, IsoWeek };

struct LoadOptions {
    WeekFormat week_format = WeekFormat::Integer;
};

/// Parses an ISO `YYYY-Www` token into a monotone ordinal week count.
/// Throws std::invalid_argument on malformed tokens or week numbers past the year's last ISO week.
long iso_week_ordinal(const std::string& token);

/// Reads the canonical CSV schema. Returns one panel per subcategory,
/// ordered by subcategory id, with weeks re-indexed so the earliest week in
/// the file is 1.
std::vector<SubcategoryPanel> load_panels(std::istream& in, const LoadOptions& options = {});
std::vector<SubcategoryPanel> load_panels(const std::filesystem::path& path,
                                          const LoadOptions& options = {});

/// Writes panels in the canonical CSV schema with integer weeks. All
/// rows, including synthesized non-live rows, are emitted.
void write_panels(std::ostream& out, const std::vector<SubcategoryPanel>& panels);
void write_panels(const std::filesystem::path& path, const std::vector<SubcategoryPanel>& panels);

extern const std::vector<std::string> kPanelColumns;

/// Keeps styles with at least `min_weeks` live weeks.
SubcategoryPanel filter_min_weeks(const SubcategoryPanel& panel, int min_weeks);

struct TrainTestSplit {
    SubcategoryPanel train;
    SubcategoryPanel test;
};

/// Weeks first..first+train_weeks-1 become train; the remainder becomes test.
/// Week numbers are preserved in both halves.
TrainTestSplit split_train_test(const SubcategoryPanel& panel, int train_weeks);

/// Restricts a panel to a sub-range of its weeks, keeping every style.
SubcategoryPanel slice_weeks(const SubcategoryPanel& panel, WeekRange weeks);

Assortment assortment_at(const SubcategoryPanel& panel, int week);

}  // namespace sq
