#include "sq/choice_model.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sq {

const char* to_string(Centering centering) {
    return centering == Centering::Geometric ? "geometric" : "arithmetic";
}

Centering centering_from_string(const std::string& name) {
    if (name == "geometric") return Centering::Geometric;
    if (name == "arithmetic") return Centering::Arithmetic;
    throw std::invalid_argument("unknown centering '" + name + "'");
}

std::optional<ChoiceProbabilities> empirical_choice_probabilities(const SubcategoryPanel& panel, int week,
                                                                  const SmoothingPolicy& smoothing) {
    if (!panel.week_range().contains(week))
        throw PanelError(PanelErrorKind::OutOfRange, "week " + std::to_string(week) + " outside panel range");
    if (smoothing.kind == SmoothingKind::Laplace && !(smoothing.alpha > 0.0))
        throw std::invalid_argument("Laplace smoothing needs alpha > 0");

    ChoiceProbabilities probs;
    probs.week = week;
    double total = 0.0;
    for (std::size_t s = 0; s < panel.num_styles(); ++s) {
        const auto& obs = panel.at(s, week);
        if (!obs.is_live) continue;
        double mass = static_cast<double>(obs.sales_qty);
        if (smoothing.kind == SmoothingKind::Laplace)
            mass += smoothing.alpha;
        else if (obs.sales_qty == 0)
            continue;
        probs.shares.push_back({s, mass});
        total += mass;
    }
    if (probs.shares.empty() || !(total > 0.0)) return std::nullopt;
    for (auto& share : probs.shares) share.p /= total;
    return probs;
}

std::vector<double> log_center_response(const ChoiceProbabilities& probs, Centering centering) {
    std::vector<double> logs;
    logs.reserve(probs.shares.size());
    double log_sum = 0.0;
    double p_sum = 0.0;
    for (const auto& share : probs.shares) {
        if (!(share.p > 0.0))
            throw std::domain_error("choice probability must be positive for log-centring (week " +
                                    std::to_string(probs.week) + ")");
        logs.push_back(std::log(share.p));
        log_sum += logs.back();
        p_sum += share.p;
    }
    if (logs.empty()) return logs;
    const double n = static_cast<double>(logs.size());
    const double log_mean = centering == Centering::Geometric ? log_sum / n : std::log(p_sum / n);
    for (auto& v : logs) v -= log_mean;
    return logs;
}

ResponseSet build_responses(const SubcategoryPanel& panel, WeekRange weeks, const SmoothingPolicy& smoothing,
                            Centering centering) {
    ResponseSet out;
    for (int week = weeks.first; week <= weeks.last; ++week) {
        const auto probs = empirical_choice_probabilities(panel, week, smoothing);
        if (!probs) {
            out.skipped_weeks.push_back(week);
            continue;
        }
        const auto responses = log_center_response(*probs, centering);
        for (std::size_t i = 0; i < responses.size(); ++i)
            out.rows.push_back({probs->shares[i].style, week, responses[i]});
    }
    return out;
}

Eigen::SparseMatrix<double> DesignSystem::to_sparse() const {
    const auto n = static_cast<Eigen::Index>(num_rows());
    const auto n_styles = static_cast<Eigen::Index>(num_styles());
    const auto k = static_cast<Eigen::Index>(num_features());
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(n * (1 + k)));
    for (Eigen::Index r = 0; r < n; ++r) {
        entries.emplace_back(r, static_cast<Eigen::Index>(row_style[static_cast<std::size_t>(r)]), 1.0);
        for (Eigen::Index c = 0; c < k; ++c) entries.emplace_back(r, n_styles + c, features(r, c));
    }
    Eigen::SparseMatrix<double> x(n, n_styles + k);
    x.setFromTriplets(entries.begin(), entries.end());
    x.makeCompressed();
    return x;
}

DesignSystem build_design_matrix(const std::vector<ResponseRow>& responses, const FeaturePanel& features) {
    DesignSystem sys;
    sys.feature_names.assign(kFeatureNames.begin(), kFeatureNames.end());

    const auto& styles = features.styles();
    std::vector<std::size_t> column(styles.size(), std::numeric_limits<std::size_t>::max());
    for (const auto& row : responses) {
        if (row.style >= styles.size()) throw std::out_of_range("response row references unknown style");
        column[row.style] = 0;
    }
    for (std::size_t s = 0; s < styles.size(); ++s) {
        if (column[s] == 0) {
            column[s] = sys.style_ids.size();
            sys.style_ids.push_back(styles[s]);
        } else {
            sys.excluded_styles.push_back(styles[s]);
        }
    }

    const auto n = static_cast<Eigen::Index>(responses.size());
    sys.features.resize(n, static_cast<Eigen::Index>(kNumFeatures));
    sys.response.resize(n);
    sys.row_style.reserve(responses.size());
    sys.row_week.reserve(responses.size());
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = responses[static_cast<std::size_t>(r)];
        const FeatureRow* f = features.find(row.style, row.week);
        if (!f)
            throw std::invalid_argument("no features for style " + styles[row.style] + " in week " +
                                        std::to_string(row.week));
        sys.row_style.push_back(column[row.style]);
        sys.row_week.push_back(row.week);
        for (std::size_t k = 0; k < kNumFeatures; ++k)
            sys.features(r, static_cast<Eigen::Index>(k)) = f->centered[k];
        sys.response(r) = row.response;
    }
    return sys;
}

// ---------------------------------------------------------------------------
// Grouped least squares
//
// The system [G F] with G a 0/1 group-indicator matrix is solved by absorbing
// the groups: for a fixed beta the optimal gamma_g is the group mean of
// y - F beta, so beta solves the within-group problem min |F_w beta - y_w|,
// with F_w, y_w the group-demeaned data. Every least-squares solution has that
// form, which makes the minimum-norm solution a small dense problem over the
// null space of F_w.

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GroupedProblem {
    const std::vector<std::size_t>& group;
    std::size_t n_groups;
    const MatrixXd& features;
    const VectorXd& response;
};

struct GroupedSolution {
    VectorXd gamma;
    VectorXd beta;
    std::size_t feature_rank = 0;
    double condition = 0.0;
    int iterations = 0;
    std::string solver;
    std::vector<std::string> warnings;
};

struct WithinFactor {
    VectorXd counts;
    VectorXd group_mean_y;
    MatrixXd group_sum_f;  // G x K
    MatrixXd group_mean_f;
    MatrixXd r;            // upper-triangular factor of F_w
    VectorXd qty;          // Q^T y_w (leading part)
    Eigen::JacobiSVD<MatrixXd> svd;
    std::size_t rank = 0;
};

WithinFactor factor_within(const GroupedProblem& p, double rank_tolerance) {
    const Index n = p.features.rows();
    const Index k = p.features.cols();
    const auto g_count = static_cast<Index>(p.n_groups);

    WithinFactor w;
    w.counts = VectorXd::Zero(g_count);
    VectorXd sum_y = VectorXd::Zero(g_count);
    w.group_sum_f = MatrixXd::Zero(g_count, k);
    for (Index r = 0; r < n; ++r) {
        const auto g = static_cast<Index>(p.group[static_cast<std::size_t>(r)]);
        w.counts(g) += 1.0;
        sum_y(g) += p.response(r);
        w.group_sum_f.row(g) += p.features.row(r);
    }
    for (Index g = 0; g < g_count; ++g)
        if (w.counts(g) == 0.0) throw std::invalid_argument("every style column needs at least one row");
    w.group_mean_y = sum_y.cwiseQuotient(w.counts);
    w.group_mean_f = w.group_sum_f.array().colwise() / w.counts.array();

    if (k == 0) return w;

    MatrixXd fw(n, k);
    VectorXd yw(n);
    for (Index r = 0; r < n; ++r) {
        const auto g = static_cast<Index>(p.group[static_cast<std::size_t>(r)]);
        fw.row(r) = p.features.row(r) - w.group_mean_f.row(g);
        yw(r) = p.response(r) - w.group_mean_y(g);
    }
    Eigen::HouseholderQR<MatrixXd> qr(fw);
    const Index m = std::min(n, k);
    w.r = qr.matrixQR().topRows(m).triangularView<Eigen::Upper>();
    const VectorXd qty_full = qr.householderQ().adjoint() * yw;
    w.qty = qty_full.head(m);

    w.svd.compute(w.r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sigma = w.svd.singularValues();
    if (sigma.size() > 0 && sigma(0) > 0.0)
        for (Index i = 0; i < sigma.size(); ++i)
            if (sigma(i) > rank_tolerance * sigma(0)) ++w.rank;
    return w;
}

// Estimates cond_2([G F]) from the extreme eigenvalues of the normal matrix:
// power iteration for the largest, inverse iteration (block-eliminated solves)
// for the smallest.
double condition_estimate(const GroupedProblem& p, const WithinFactor& w) {
    const Index k = p.features.cols();
    const Index g_count = static_cast<Index>(p.n_groups);
    if (w.rank < static_cast<std::size_t>(k)) return std::numeric_limits<double>::infinity();
    if (k == 0) return std::sqrt(w.counts.maxCoeff() / w.counts.minCoeff());

    const Index dim = g_count + k;
    const Index n = p.features.rows();

    auto normal_product = [&](const VectorXd& v) {
        VectorXd xv = p.features * v.tail(k);
        for (Index r = 0; r < n; ++r) xv(r) += v(static_cast<Index>(p.group[static_cast<std::size_t>(r)]));
        VectorXd out(dim);
        out.head(g_count).setZero();
        for (Index r = 0; r < n; ++r) out(static_cast<Index>(p.group[static_cast<std::size_t>(r)])) += xv(r);
        out.tail(k) = p.features.transpose() * xv;
        return out;
    };
    const auto r_tri = w.r.topLeftCorner(k, k).triangularView<Eigen::Upper>();
    auto normal_solve = [&](const VectorXd& rhs) {
        VectorXd out(dim);
        VectorXd schur_rhs = rhs.tail(k) - w.group_sum_f.transpose() * rhs.head(g_count).cwiseQuotient(w.counts);
        VectorXd tmp = r_tri.transpose().solve(schur_rhs);
        out.tail(k) = r_tri.solve(tmp);
        out.head(g_count) = (rhs.head(g_count) - w.group_sum_f * out.tail(k)).cwiseQuotient(w.counts);
        return out;
    };
    auto dominant = [&](auto&& apply) {
        VectorXd v(dim);
        for (Index i = 0; i < dim; ++i) v(i) = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
        v.normalize();
        double lambda = 0.0;
        for (int it = 0; it < 500; ++it) {
            VectorXd next = apply(v);
            const double estimate = v.dot(next);
            const double norm = next.norm();
            if (!(norm > 0.0)) return 0.0;
            v = next / norm;
            if (it > 0 && std::abs(estimate - lambda) <= 1e-12 * std::abs(estimate)) return estimate;
            lambda = estimate;
        }
        return lambda;
    };
    const double largest = dominant(normal_product);
    const double inverse_largest = dominant(normal_solve);
    return std::sqrt(largest * inverse_largest);
}

GroupedSolution solve_block(const GroupedProblem& p, const WithinFactor& w) {
    const Index k = p.features.cols();
    GroupedSolution sol;
    sol.solver = "block-elimination";
    sol.feature_rank = w.rank;
    if (k == 0) {
        sol.beta = VectorXd::Zero(0);
        sol.gamma = w.group_mean_y;
        return sol;
    }

    const auto rank = static_cast<Index>(w.rank);
    const auto& u = w.svd.matrixU();
    const auto& v = w.svd.matrixV();
    const auto& sigma = w.svd.singularValues();
    VectorXd beta0 = VectorXd::Zero(k);
    for (Index i = 0; i < rank; ++i) beta0 += v.col(i) * (u.col(i).dot(w.qty) / sigma(i));

    const Index nullity = k - rank;
    if (nullity == 0) {
        sol.beta = beta0;
        sol.gamma = w.group_mean_y - w.group_mean_f * beta0;
        return sol;
    }

    // Minimise |gamma|^2 + |beta|^2 over beta = beta0 + N z, gamma = a - (Fbar N) z.
    const MatrixXd null_basis = v.rightCols(nullity);
    const VectorXd a = w.group_mean_y - w.group_mean_f * beta0;
    const MatrixXd b = w.group_mean_f * null_basis;
    const Index g_count = a.size();
    MatrixXd stacked(g_count + k, nullity);
    stacked << b, -null_basis;
    VectorXd rhs(g_count + k);
    rhs << a, beta0;
    const VectorXd z = stacked.householderQr().solve(rhs);
    sol.beta = beta0 + null_basis * z;
    sol.gamma = a - b * z;
    return sol;
}

GroupedSolution solve_iterative(const GroupedProblem& p, const WithinFactor& w, const SolverOptions& options) {
    const Index n = p.features.rows();
    const Index k = p.features.cols();
    const auto g_count = static_cast<Index>(p.n_groups);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(n * (k + 1)));
    for (Index r = 0; r < n; ++r) {
        entries.emplace_back(r, static_cast<Index>(p.group[static_cast<std::size_t>(r)]), 1.0);
        for (Index c = 0; c < k; ++c) entries.emplace_back(r, g_count + c, p.features(r, c));
    }
    Eigen::SparseMatrix<double> x(n, g_count + k);
    x.setFromTriplets(entries.begin(), entries.end());
    x.makeCompressed();

    // Identity preconditioning keeps the iterates in range(X^T), so a zero
    // start converges to the minimum-norm solution.
    Eigen::LeastSquaresConjugateGradient<Eigen::SparseMatrix<double>, Eigen::IdentityPreconditioner> cg;
    cg.setTolerance(options.iterative_tolerance);
    cg.setMaxIterations(options.max_iterations);
    cg.compute(x);
    const VectorXd solution = cg.solve(p.response);

    GroupedSolution sol;
    sol.solver = "iterative-cgls";
    sol.feature_rank = w.rank;
    sol.iterations = static_cast<int>(cg.iterations());
    sol.gamma = solution.head(g_count);
    sol.beta = solution.tail(k);
    if (cg.info() != Eigen::Success)
        sol.warnings.push_back("iterative solver stopped after " + std::to_string(cg.iterations()) +
                               " iterations with relative error " + std::to_string(cg.error()));
    return sol;
}

GroupedSolution solve_grouped(const GroupedProblem& p, const SolverOptions& options, bool allow_iterative) {
    if (p.features.rows() == 0) throw std::invalid_argument("regression system has no rows");
    const WithinFactor w = factor_within(p, options.rank_tolerance);

    const bool iterative = allow_iterative &&
                           (options.kind == SolverKind::Iterative ||
                            (options.kind == SolverKind::Auto && p.n_groups > options.iterative_threshold));
    GroupedSolution sol = iterative ? solve_iterative(p, w, options) : solve_block(p, w);
    sol.condition = condition_estimate(p, w);

    const auto k = static_cast<std::size_t>(p.features.cols());
    if (w.rank < k)
        sol.warnings.insert(sol.warnings.begin(),
                            "feature block has rank " + std::to_string(w.rank) + " of " + std::to_string(k) +
                                " after absorbing style effects; minimum-norm solution returned");
    return sol;
}

void fill_fit_statistics(const DesignSystem& sys, const std::vector<std::size_t>& group,
                         const GroupedSolution& sol, FittedChoiceModel& model) {
    const Index n = sys.features.rows();
    VectorXd fitted = sys.features * sol.beta;
    for (Index r = 0; r < n; ++r) fitted(r) += sol.gamma(static_cast<Index>(group[static_cast<std::size_t>(r)]));
    const VectorXd resid = sys.response - fitted;

    auto& d = model.diagnostics;
    d.rows = static_cast<std::size_t>(n);
    d.rss = resid.squaredNorm();
    d.rmse = std::sqrt(d.rss / static_cast<double>(n));
    const double mean = sys.response.mean();
    const double tss = (sys.response.array() - mean).square().sum();
    d.r2 = tss > 0.0 ? 1.0 - d.rss / tss : (d.rss == 0.0 ? 1.0 : 0.0);
    d.condition = sol.condition;
    d.feature_rank = sol.feature_rank;
    d.solver = sol.solver;
    d.iterations = sol.iterations;
    d.rank_warnings = sol.warnings;
    d.excluded_styles = sys.excluded_styles;

    model.residuals.reserve(static_cast<std::size_t>(n));
    for (Index r = 0; r < n; ++r)
        model.residuals.push_back({sys.style_ids[sys.row_style[static_cast<std::size_t>(r)]],
                                   sys.row_week[static_cast<std::size_t>(r)], resid(r)});
}

}  // namespace

FittedChoiceModel fit_least_squares(const DesignSystem& system, const SolverOptions& options) {
    const GroupedProblem problem{system.row_style, system.num_styles(), system.features, system.response};
    const GroupedSolution sol = solve_grouped(problem, options, true);

    FittedChoiceModel model;
    model.kind = ModelKind::FixedEffects;
    model.feature_names = system.feature_names;
    model.beta.assign(sol.beta.data(), sol.beta.data() + sol.beta.size());
    for (std::size_t s = 0; s < system.num_styles(); ++s)
        model.gamma.emplace(system.style_ids[s], sol.gamma(static_cast<Index>(s)));
    fill_fit_statistics(system, system.row_style, sol, model);
    model.diagnostics.gauge_mean = sol.gamma.size() ? sol.gamma.mean() : 0.0;
    return model;
}

FittedChoiceModel fit_pooled_intercept(const DesignSystem& system, const SolverOptions& options) {
    const std::vector<std::size_t> single(system.num_rows(), 0);
    const GroupedProblem problem{single, 1, system.features, system.response};
    const GroupedSolution sol = solve_grouped(problem, options, false);

    FittedChoiceModel model;
    model.kind = ModelKind::MeanIntercept;
    model.feature_names = system.feature_names;
    model.beta.assign(sol.beta.data(), sol.beta.data() + sol.beta.size());
    for (const auto& id : system.style_ids) model.gamma.emplace(id, sol.gamma(0));
    fill_fit_statistics(system, single, sol, model);
    model.diagnostics.gauge_mean = sol.gamma(0);
    return model;
}

std::optional<double> FittedChoiceModel::utility(const std::string& style_id, const FeatureArray& centered) const {
    const auto it = gamma.find(style_id);
    if (it == gamma.end()) return std::nullopt;
    double u = it->second;
    for (std::size_t k = 0; k < beta.size() && k < centered.size(); ++k) u += beta[k] * centered[k];
    return u;
}

FittedChoiceModel fit_choice_model(const SubcategoryPanel& panel, const FeaturePanel& features, WeekRange weeks,
                                   const FitOptions& options) {
    if (features.styles() != panel.styles())
        throw std::invalid_argument("feature panel was built from a different style set");
    const ResponseSet responses = build_responses(panel, weeks, options.smoothing, options.centering);
    const DesignSystem system = build_design_matrix(responses.rows, features);
    FittedChoiceModel model = fit_least_squares(system, options.solver);
    model.subcategory_id = panel.subcategory_id();
    model.smoothing = options.smoothing;
    model.centering = options.centering;
    model.diagnostics.skipped_weeks = responses.skipped_weeks;
    return model;
}

StyleQuotientTable style_quotients(const FittedChoiceModel& model) {
    StyleQuotientTable table;
    if (model.gamma.empty()) return table;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [id, g] : model.gamma) {
        const double raw = std::exp(g);
        table.raw_sq.emplace(id, raw);
        lo = std::min(lo, raw);
        hi = std::max(hi, raw);
    }
    for (const auto& [id, raw] : table.raw_sq)
        table.normalized_sq.emplace(id, hi > lo ? (raw - lo) / (hi - lo) : 0.5);
    return table;
}

}  // namespace sq
