#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/lasso.hpp"
#include "loadcast/lasso_path.hpp"
#include "loadcast/ols.hpp"
#include "loadcast/series.hpp"

namespace loadcast {

/**
 * Residual regression instance for the pairing test: one user's forecast
 * residuals against every other user's lag-1 history. Columns are centered
 * and unit-normed; the target's own column is never present. No intercept:
 * the residuals already have mean zero because the underlying fit carried an
 * unpenalized intercept.
 */
struct ResidualProblem {
    VectorXd residuals;
    MatrixXd design;
    std::vector<std::string> candidate_ids;
    std::string target_id;
    bool pool_truncated = false;  // candidate pool was cut to keep rows > columns

    Eigen::Index rows() const { return design.rows(); }
    Eigen::Index cols() const { return design.cols(); }
};

struct CovTestResult {
    std::string target_id;
    std::string selected_candidate;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double sigma2_hat = 0.0;
    double t1 = 0.0;
    double f1 = 0.0;
    double p_exp = 1.0;
    double p_f = 1.0;
    bool accepted = false;
    bool sigma_known = false;
    bool degenerate_sigma = false;  // residual explained exactly, p forced to 0
    bool pool_truncated = false;
    Eigen::Index n_rows = 0;
    Eigen::Index n_candidates = 0;
};

/**
 * Assemble the residual problem for a fitted window.
 *
 * `problem`/`fit` are the training problem (standardized) and its solution
 * on rows t in [win_begin + max_lag, win_end); the residual is recomputed on
 * those rows. Each candidate series contributes its value at t-1 over the
 * same rows, centered then unit-normed. All series must share the target's
 * start hour and cover the window.
 *
 * When candidates would reach rows <= columns, the pool is cut to the
 * floor(rows/2) columns with the largest absolute residual correlation
 * (original order preserved) and the cut is recorded; with truncation
 * disabled that situation throws instead.
 */
inline ResidualProblem build_residual_problem(const ConsumptionSeries& target,
                                              const RegressionProblem& problem,
                                              const LassoFit& fit,
                                              const std::vector<ConsumptionSeries>& others,
                                              std::size_t win_begin, std::size_t win_end,
                                              bool truncate_pool = true) {
    const Eigen::Index n = problem.rows();
    const std::size_t window_len = win_end - win_begin;
    if (static_cast<std::size_t>(n) >= window_len)
        throw DimensionMismatch("problem rows exceed window");
    const std::size_t max_lag = window_len - static_cast<std::size_t>(n);

    ResidualProblem rp;
    rp.target_id = target.user_id;
    rp.residuals = problem.response - problem.design.rightCols(problem.num_features()) *
                                          fit.coefficients;
    if (problem.has_intercept) rp.residuals.array() -= fit.intercept;

    std::vector<VectorXd> cols;
    std::vector<std::string> ids;
    cols.reserve(others.size());
    for (const auto& u : others) {
        if (u.user_id == target.user_id) continue;
        if (u.start != target.start || u.size() < win_end)
            throw MisalignedSeries("candidate '" + u.user_id + "' does not cover the window");
        VectorXd col(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            std::size_t t = win_begin + max_lag + static_cast<std::size_t>(r);
            col(r) = u.values[t - 1];
        }
        col.array() -= col.mean();
        double norm = col.norm();
        if (norm <= 1e-12)
            throw ZeroColumn("candidate '" + u.user_id + "' is flat over the window");
        cols.push_back(col / norm);
        ids.push_back(u.user_id);
    }
    if (cols.empty()) throw EmptyInput("no pairing candidates");

    std::vector<std::size_t> keep(cols.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = i;
    if (static_cast<Eigen::Index>(cols.size()) >= n) {
        std::size_t cap = static_cast<std::size_t>(n) / 2;
        if (!truncate_pool || cap < 1)
            throw TooManyCandidates(std::to_string(cols.size()) + " candidates for " +
                                    std::to_string(n) + " rows");
        std::vector<std::pair<double, std::size_t>> scored(cols.size());
        for (std::size_t i = 0; i < cols.size(); ++i)
            scored[i] = {std::abs(cols[i].dot(rp.residuals)), i};
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        scored.resize(cap);
        keep.clear();
        for (const auto& sc : scored) keep.push_back(sc.second);
        std::sort(keep.begin(), keep.end());
        rp.pool_truncated = true;
    }

    rp.design.resize(n, static_cast<Eigen::Index>(keep.size()));
    rp.candidate_ids.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        rp.design.col(static_cast<Eigen::Index>(i)) = cols[keep[i]];
        rp.candidate_ids.push_back(ids[keep[i]]);
    }
    return rp;
}

/// Noise variance from the residual-on-candidates least squares fit:
/// ||e - xi*alpha||^2 / (rows - cols).
inline double estimate_sigma2(const ResidualProblem& rp) {
    if (rp.rows() <= rp.cols())
        throw Underdetermined("need more rows than candidates to estimate noise");
    RegressionProblem p;
    p.response = rp.residuals;
    p.design = rp.design;
    p.has_intercept = false;
    p.column_scales = VectorXd::Ones(rp.cols());
    p.column_labels.assign(static_cast<std::size_t>(rp.cols()), ColumnLabel{1, ""});
    OlsFit ols = fit_ols(p);
    return ols.rss / static_cast<double>(ols.dof);
}

/// T1 = lambda1*(lambda1 - lambda2)/sigma2.
inline double covariance_statistic(double lambda1, double lambda2, double sigma2) {
    if (!(sigma2 > 0.0)) throw NonPositiveSigma("sigma2 = " + std::to_string(sigma2));
    return lambda1 * (lambda1 - lambda2) / sigma2;
}

/// Survival function of the F distribution with (2, m) degrees of freedom:
/// Pr{F > x} = (1 + 2x/m)^(-m/2). Exact, not an approximation.
inline double f2_survival(double x, double m) {
    if (m <= 0.0) throw BadDof("denominator dof must be positive");
    if (x <= 0.0) return 1.0;
    return std::pow(1.0 + 2.0 * x / m, -m / 2.0);
}

struct FPvalues {
    double f1 = 0.0;
    double p_f = 1.0;
    double p_exp = 1.0;
};

/// F1 is the covariance statistic with the estimated noise variance; p_f is
/// its F(2, N-P) survival and p_exp its Exp(1) survival.
inline FPvalues f_statistic_pvalues(double lambda1, double lambda2, double sigma2_hat,
                                    Eigen::Index n, Eigen::Index p) {
    if (n <= p) throw BadDof("rows must exceed candidates");
    FPvalues out;
    out.f1 = covariance_statistic(lambda1, lambda2, sigma2_hat);
    out.p_f = f2_survival(out.f1, static_cast<double>(n - p));
    out.p_exp = std::exp(-out.f1);
    return out;
}

/**
 * The pairing decision for one residual problem. The first two path knots of
 * the residual regression give the statistic; with one candidate the second
 * knot is taken as zero. With a caller-supplied noise variance the Exp(1)
 * reference decides acceptance, otherwise the F reference with the estimated
 * variance. A residual explained to machine precision short-circuits to an
 * accepted pairing with p = 0, flagged as degenerate.
 */
inline CovTestResult run_pair_test(const ResidualProblem& rp, double alpha = 0.05,
                                   std::optional<double> sigma2_known = std::nullopt) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw SchemaError("alpha must lie in (0,1)");
    CovTestResult res;
    res.target_id = rp.target_id;
    res.pool_truncated = rp.pool_truncated;
    res.n_rows = rp.rows();
    res.n_candidates = rp.cols();

    RegressionProblem path_problem;
    path_problem.response = rp.residuals;
    path_problem.design = rp.design;
    path_problem.has_intercept = false;
    path_problem.column_scales = VectorXd::Ones(rp.cols());
    path_problem.column_labels.assign(static_cast<std::size_t>(rp.cols()), ColumnLabel{1, ""});

    LassoPathPrefix path = lasso_path_prefix(path_problem, 2);
    res.lambda1 = path.knots.empty() ? 0.0 : path.knots[0];
    res.lambda2 = path.knots.size() > 1 ? path.knots[1] : 0.0;
    if (!path.entering_index.empty())
        res.selected_candidate = rp.candidate_ids[static_cast<std::size_t>(path.entering_index[0])];

    if (sigma2_known) {
        if (!(*sigma2_known > 0.0)) throw NonPositiveSigma("known sigma2 must be positive");
        res.sigma_known = true;
        res.sigma2_hat = *sigma2_known;
        res.t1 = covariance_statistic(res.lambda1, res.lambda2, res.sigma2_hat);
        res.f1 = res.t1;
        res.p_exp = std::exp(-res.t1);
        res.p_f = f2_survival(res.f1, static_cast<double>(res.n_rows - res.n_candidates));
        res.accepted = res.p_exp < alpha;
        return res;
    }

    res.sigma2_hat = estimate_sigma2(rp);
    if (res.sigma2_hat < 1e-12) {
        res.degenerate_sigma = true;
        double inf = std::numeric_limits<double>::infinity();
        res.t1 = res.lambda1 > 0.0 ? inf : 0.0;
        res.f1 = res.t1;
        res.p_exp = 0.0;
        res.p_f = 0.0;
        res.accepted = true;
        return res;
    }
    FPvalues pv = f_statistic_pvalues(res.lambda1, res.lambda2, res.sigma2_hat, res.n_rows,
                                      res.n_candidates);
    res.t1 = pv.f1;
    res.f1 = pv.f1;
    res.p_exp = pv.p_exp;
    res.p_f = pv.p_f;
    res.accepted = res.p_f < alpha;
    return res;
}

inline CovTestResult run_pair_test(const ConsumptionSeries& target,
                                   const RegressionProblem& problem, const LassoFit& fit,
                                   const std::vector<ConsumptionSeries>& others,
                                   std::size_t win_begin, std::size_t win_end,
                                   double alpha = 0.05,
                                   std::optional<double> sigma2_known = std::nullopt) {
    ResidualProblem rp =
        build_residual_problem(target, problem, fit, others, win_begin, win_end);
    return run_pair_test(rp, alpha, sigma2_known);
}

/// A fitted forecast model in portable form: an intercept plus weighted
/// lagged readings, each lag tagged with its owner (empty = the target).
struct LinearModel {
    double intercept = 0.0;
    std::vector<ColumnLabel> terms;
    VectorXd weights;
    bool fallback = false;  // pairing was degenerate, model is the unpaired fit
};

inline LinearModel to_linear_model(const RegressionProblem& problem, const LassoFit& fit) {
    LinearModel m;
    m.intercept = fit.intercept;
    for (int j : fit.active_set) {
        m.terms.push_back(problem.column_labels[static_cast<std::size_t>(j)]);
    }
    m.weights.resize(static_cast<Eigen::Index>(m.terms.size()));
    Eigen::Index k = 0;
    for (int j : fit.active_set)
        m.weights(k++) = fit.coefficients(j) / problem.column_scales(j);
    return m;
}

/**
 * Combined model after an accepted pairing: the target's selected own lags
 * keep their structure, the paired user contributes its lag-1 reading, and
 * all weights are re-estimated by least squares on the window (raw scale, so
 * the shrinkage bias of the selection step is removed). A paired column that
 * is flat over the window falls back to the unpaired fit, flagged.
 */
inline LinearModel paired_forecast_model(const ConsumptionSeries& target,
                                         const RegressionProblem& problem, const LassoFit& fit,
                                         const ConsumptionSeries& paired,
                                         std::size_t win_begin, std::size_t win_end) {
    const Eigen::Index n = problem.rows();
    const std::size_t window_len = win_end - win_begin;
    if (static_cast<std::size_t>(n) >= window_len)
        throw DimensionMismatch("problem rows exceed window");
    const std::size_t max_lag = window_len - static_cast<std::size_t>(n);
    if (paired.start != target.start || paired.size() < win_end)
        throw MisalignedSeries("paired series does not cover the window");

    VectorXd paired_col(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        std::size_t t = win_begin + max_lag + static_cast<std::size_t>(r);
        paired_col(r) = paired.values[t - 1];
    }
    double centered_norm = (paired_col.array() - paired_col.mean()).matrix().norm();
    if (centered_norm <= 1e-12) {
        LinearModel m = to_linear_model(problem, fit);
        m.fallback = true;
        return m;
    }

    const std::size_t own = fit.active_set.size();
    RegressionProblem refit;
    refit.has_intercept = true;
    refit.response = problem.response;
    refit.design.resize(n, static_cast<Eigen::Index>(own) + 2);
    refit.design.col(0) = VectorXd::Ones(n);
    for (std::size_t i = 0; i < own; ++i) {
        Eigen::Index src = problem.first_feature() + fit.active_set[i];
        refit.design.col(static_cast<Eigen::Index>(i) + 1) =
            problem.design.col(src) * problem.column_scales(fit.active_set[i]);
    }
    refit.design.col(static_cast<Eigen::Index>(own) + 1) = paired_col;
    OlsFit ols = fit_ols(refit);

    LinearModel m;
    m.intercept = ols.coefficients(0);
    m.weights.resize(static_cast<Eigen::Index>(own) + 1);
    for (std::size_t i = 0; i < own; ++i) {
        m.terms.push_back(problem.column_labels[static_cast<std::size_t>(fit.active_set[i])]);
        m.weights(static_cast<Eigen::Index>(i)) = ols.coefficients(static_cast<Eigen::Index>(i) + 1);
    }
    m.terms.push_back(ColumnLabel{1, paired.user_id});
    m.weights(static_cast<Eigen::Index>(own)) = ols.coefficients(static_cast<Eigen::Index>(own) + 1);
    return m;
}

/// Evaluate a LinearModel at position t of the target. Terms owned by
/// another user read the paired series, which must be aligned to the target.
inline double predict_linear_model(const LinearModel& m, const ConsumptionSeries& target,
                                   const ConsumptionSeries* paired, std::size_t t) {
    double yhat = m.intercept;
    for (std::size_t i = 0; i < m.terms.size(); ++i) {
        const ColumnLabel& lbl = m.terms[i];
        const ConsumptionSeries* src = &target;
        if (!lbl.owner.empty()) {
            if (!paired || paired->user_id != lbl.owner)
                throw MisalignedSeries("model needs series '" + lbl.owner + "'");
            src = paired;
        }
        if (t < static_cast<std::size_t>(lbl.lag) || t >= src->size())
            throw InsufficientHistory("position " + std::to_string(t));
        yhat += m.weights(static_cast<Eigen::Index>(i)) * src->values[t - static_cast<std::size_t>(lbl.lag)];
    }
    return yhat;
}

}  // namespace loadcast
