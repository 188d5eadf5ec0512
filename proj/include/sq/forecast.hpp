#pragma once

#include "sq/choice_model.hpp"
#include "sq/features.hpp"
#include "sq/panel.hpp"

#include <json.hpp>

#include <array>
#include <compare>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace sq {

enum class ForecastModel { SimpleROS = 0, NormalizedROS = 1, MeanIntercept = 2, SQModel = 3 };

inline constexpr std::array<ForecastModel, 4> kForecastModels = {
    ForecastModel::SimpleROS, ForecastModel::NormalizedROS, ForecastModel::MeanIntercept, ForecastModel::SQModel};

/// snake_case name, e.g. "normalized_ros".
const char* to_string(ForecastModel model);
/// Report column label, e.g. "(b) normalized_ros".
std::string column_label(ForecastModel model);

struct StyleWeek {
    std::string style_id;
    int week = 0;
    auto operator<=>(const StyleWeek&) const = default;
};

using CellValues = std::map<StyleWeek, double>;

struct SalesForecast {
    ForecastModel model = ForecastModel::SimpleROS;
    CellValues predictions;            // keys form the coverage set
    std::vector<StyleWeek> uncovered;  // live cells the model could not price
    std::vector<int> skipped_weeks;
};

/// Total units over `window` divided by total days live; 0 when never live.
double ros(const SubcategoryPanel& panel, std::size_t style, WeekRange window);

/// D_t: realised sales per week of `test`.
std::map<int, double> actual_totals(const SubcategoryPanel& test);

/// Live cells of `test` with their realised sales.
CellValues actual_sales(const SubcategoryPanel& test);

/// ROS over the last `lookback` training weeks times days live in each test week.
SalesForecast predict_simple_ros(const SubcategoryPanel& train, const SubcategoryPanel& test, int lookback = 4);

/// Splits D_t across live styles in proportion to trailing ROS; uniform if all ROS are zero.
SalesForecast predict_normalized_ros(const SubcategoryPanel& train, const SubcategoryPanel& test,
                                     const std::map<int, double>& totals, int lookback = 4);

/// Shared-intercept regression on the training weeks. The intercept is
/// assigned as gamma to every style of `train`.
FittedChoiceModel fit_mean_intercept(const SubcategoryPanel& train, const FeaturePanel& features,
                                     const FitOptions& options = {});

/// Softmax of gamma + beta . centred features over live styles with a gamma,
/// scaled to D_t. `features` must be built on a panel covering the test weeks
/// with the same style set as `test`.
SalesForecast predict_choice_model(const FittedChoiceModel& model, const SubcategoryPanel& test,
                                   const FeaturePanel& features, const std::map<int, double>& totals);

/// 100 * sum|A - F| / sum A. Throws std::invalid_argument if the key sets
/// differ or sum A is zero.
double wmape(const CellValues& actual, const CellValues& predicted);

/// Pooled wMAPE numerator and denominator.
struct WmapeAccumulator {
    double abs_error = 0.0;
    double actual = 0.0;

    void add(double a, double f) {
        abs_error += a > f ? a - f : f - a;
        actual += a;
    }
    void merge(const WmapeAccumulator& o) {
        abs_error += o.abs_error;
        actual += o.actual;
    }
    /// NaN when no actual sales were pooled.
    double percent() const;
};

struct EvaluationReport {
    ForecastModel model = ForecastModel::SimpleROS;
    WmapeAccumulator overall;
    std::map<int, WmapeAccumulator> by_week;
    std::map<std::string, WmapeAccumulator> by_subcategory;

    double wmape_overall() const { return overall.percent(); }
};

struct BacktestConfig {
    int train_weeks = 22;
    int min_live_weeks = 4;
    int ros_lookback = 4;
    FitOptions fit;
};

struct SubcategoryBacktest {
    std::string subcategory_id;
    CellValues actual;
    std::map<int, double> totals;
    std::array<SalesForecast, 4> forecasts;
    FittedChoiceModel sq_model;
    FittedChoiceModel mean_intercept_model;
};

struct BacktestReport {
    BacktestConfig config;
    std::array<EvaluationReport, 4> models;
    std::vector<SubcategoryBacktest> subcategories;

    const EvaluationReport& report(ForecastModel m) const { return models[static_cast<std::size_t>(m)]; }
};

/// Filters each panel to styles with `min_live_weeks` live weeks, splits
/// train/test, runs all four models and scores them.
SubcategoryBacktest backtest_subcategory(const SubcategoryPanel& panel, const BacktestConfig& config);
BacktestReport backtest(const std::vector<SubcategoryPanel>& panels, const BacktestConfig& config);

nlohmann::json report_to_json(const BacktestReport& report);
/// Rows per subcategory plus an Overall row; columns (a)-(d), d_vs_b, d_vs_c.
void write_subcategory_table(std::ostream& out, const BacktestReport& report);
/// Rows per test week.
void write_week_table(std::ostream& out, const BacktestReport& report);
/// Long-format predictions: subcategory_id,style_id,week,actual,<four model columns>.
void write_predictions(std::ostream& out, const BacktestReport& report);

}  // namespace sq
