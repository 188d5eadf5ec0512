#pragma once

#include "sq/features.hpp"
#include "sq/panel.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sq {

enum class SmoothingKind { DropZeros, Laplace };

/// How live styles with zero sales enter the share computation.
struct SmoothingPolicy {
    SmoothingKind kind = SmoothingKind::DropZeros;
    double alpha = 0.5;

    static SmoothingPolicy drop_zeros() { return {SmoothingKind::DropZeros, 0.5}; }
    static SmoothingPolicy laplace(double alpha = 0.5) { return {SmoothingKind::Laplace, alpha}; }
    bool operator==(const SmoothingPolicy&) const = default;
};

/// Which per-week mean share the log-ratio response is taken against.
enum class Centering { Geometric, Arithmetic };

const char* to_string(Centering centering);
Centering centering_from_string(const std::string& name);

struct StyleShare {
    std::size_t style = 0;
    double p = 0.0;
};

/// Empirical choice shares of one week, ordered by style index.
struct ChoiceProbabilities {
    int week = 0;
    std::vector<StyleShare> shares;
};

/// Shares of week `week`. Returns nullopt for an empty week: nobody live, or
/// zero total sales under DropZeros.
std::optional<ChoiceProbabilities> empirical_choice_probabilities(const SubcategoryPanel& panel, int week,
                                                                  const SmoothingPolicy& smoothing);

/// ln(p / mean p) per share, in the same order as `probs.shares`.
/// Throws std::domain_error if any share is not strictly positive.
std::vector<double> log_center_response(const ChoiceProbabilities& probs,
                                        Centering centering = Centering::Geometric);

struct ResponseRow {
    std::size_t style = 0;  // index into the source panel
    int week = 0;
    double response = 0.0;
};

struct ResponseSet {
    std::vector<ResponseRow> rows;
    std::vector<int> skipped_weeks;
};

/// Log-centred responses for every included (style, week) cell in `weeks`.
ResponseSet build_responses(const SubcategoryPanel& panel, WeekRange weeks, const SmoothingPolicy& smoothing,
                            Centering centering);

/// Regression system: one indicator column per style followed by the
/// centred feature columns. Stored as (indicator index, dense feature row),
/// which is exactly the sparsity of the full matrix.
struct DesignSystem {
    std::vector<std::string> style_ids;      // indicator columns
    std::vector<std::string> feature_names;  // feature columns
    std::vector<std::size_t> row_style;      // indicator column of each row
    std::vector<int> row_week;
    Eigen::MatrixXd features;                // rows x K
    Eigen::VectorXd response;
    std::vector<std::string> excluded_styles;

    std::size_t num_rows() const { return row_style.size(); }
    std::size_t num_styles() const { return style_ids.size(); }
    std::size_t num_features() const { return feature_names.size(); }

    /// The full rows x (N + K) matrix in compressed sparse form.
    Eigen::SparseMatrix<double> to_sparse() const;
};

/// Pairs responses with centred features. Styles of the feature panel that
/// contribute no rows are listed in `excluded_styles`.
DesignSystem build_design_matrix(const std::vector<ResponseRow>& responses, const FeaturePanel& features);

enum class SolverKind {
    Auto,             // block elimination up to the threshold, iterative above
    BlockElimination,
    Iterative,
};

struct SolverOptions {
    SolverKind kind = SolverKind::Auto;
    std::size_t iterative_threshold = 20000;  // styles
    double rank_tolerance = 1e-10;           // relative to the largest singular value
    double iterative_tolerance = 1e-13;
    int max_iterations = 20000;
};

struct FitDiagnostics {
    std::size_t rows = 0;
    double r2 = 0.0;
    double rmse = 0.0;
    double rss = 0.0;
    double condition = 0.0;  // 2-norm estimate, +inf when rank deficient
    std::size_t feature_rank = 0;
    double gauge_mean = 0.0;  // mean of the style effects
    std::string solver;
    int iterations = 0;
    std::vector<std::string> rank_warnings;
    std::vector<std::string> excluded_styles;
    std::vector<int> skipped_weeks;
};

enum class ModelKind { FixedEffects, MeanIntercept };

struct Residual {
    std::string style_id;
    int week = 0;
    double value = 0.0;
};

struct FittedChoiceModel {
    std::string subcategory_id;
    ModelKind kind = ModelKind::FixedEffects;
    std::vector<std::string> feature_names;
    std::vector<double> beta;
    std::map<std::string, double> gamma;
    SmoothingPolicy smoothing;
    Centering centering = Centering::Geometric;
    FitDiagnostics diagnostics;
    std::vector<Residual> residuals;  // in-memory only

    /// Utility gamma_i + beta . centred features, or nullopt for unknown styles.
    std::optional<double> utility(const std::string& style_id, const FeatureArray& centered) const;
};

/// Minimum-norm least squares for the style-indicator + feature system.
FittedChoiceModel fit_least_squares(const DesignSystem& system, const SolverOptions& options = {});

/// Same rows regressed on one shared intercept plus the features. Every
/// style that has rows receives the intercept as its gamma.
FittedChoiceModel fit_pooled_intercept(const DesignSystem& system, const SolverOptions& options = {});

struct FitOptions {
    SmoothingPolicy smoothing;
    Centering centering = Centering::Geometric;
    SolverOptions solver;
};

/// Responses over `weeks` of `panel`, features from `features` (built on a
/// panel that contains those weeks), then fit_least_squares.
FittedChoiceModel fit_choice_model(const SubcategoryPanel& panel, const FeaturePanel& features, WeekRange weeks,
                                   const FitOptions& options = {});

struct StyleQuotientTable {
    std::map<std::string, double> raw_sq;
    std::map<std::string, double> normalized_sq;
};

/// exp(gamma) and its min-max normalization; all-equal inputs normalize to 0.5.
StyleQuotientTable style_quotients(const FittedChoiceModel& model);

}  // namespace sq
