#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/ols.hpp"

namespace loadcast {

inline double soft_threshold(double z, double gamma) {
    if (z > gamma) return z - gamma;
    if (z < -gamma) return z + gamma;
    return 0.0;
}

struct LassoFit {
    double intercept = 0.0;
    VectorXd coefficients;  // feature columns only, on the scale the problem was given in
    double lambda = 0.0;
    std::vector<int> active_set;
    double objective = 0.0;
    int iterations = 0;  // coordinate sweeps
    bool converged = true;
};

namespace detail {

// Feature block with the intercept partialled out by centering. The
// unpenalized intercept is recovered afterwards from the column means, which
// keeps the residual exactly orthogonal to the constant column.
struct CenteredView {
    MatrixXd x;
    VectorXd y;
    VectorXd col_means;
    VectorXd col_sq;  // squared norms of the centered columns
    double y_mean = 0.0;
};

inline CenteredView center_features(const RegressionProblem& p) {
    CenteredView v;
    Eigen::Index m = p.num_features();
    v.x = p.design.rightCols(m);
    v.y = p.response;
    v.col_means = VectorXd::Zero(m);
    if (p.has_intercept) {
        v.y_mean = v.y.mean();
        v.y.array() -= v.y_mean;
        v.col_means = v.x.colwise().mean();
        v.x.rowwise() -= v.col_means.transpose();
    }
    v.col_sq.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) v.col_sq(j) = v.x.col(j).squaredNorm();
    return v;
}

}  // namespace detail

/// Smallest penalty at which every feature coefficient is zero.
inline double lambda_max(const RegressionProblem& p) {
    detail::CenteredView v = detail::center_features(p);
    double m = 0.0;
    for (Eigen::Index j = 0; j < v.x.cols(); ++j) m = std::max(m, std::abs(v.x.col(j).dot(v.y)));
    return m;
}

/// 0.5*||y - b0 - X*b||^2 + lambda*||b||_1 on the problem's own scale.
inline double lasso_objective(const RegressionProblem& p, double intercept, const VectorXd& beta,
                              double lambda) {
    VectorXd yhat = p.design.rightCols(p.num_features()) * beta;
    if (p.has_intercept) yhat.array() += intercept;
    return 0.5 * (p.response - yhat).squaredNorm() + lambda * beta.lpNorm<1>();
}

/**
 * Coordinate descent for the L1-penalized least squares objective
 * 0.5*||y - b0 - X*b||^2 + lambda*||b||_1 with an unpenalized intercept.
 *
 * Works on columns of any norm (cross-validation folds are not re-scaled),
 * though unit-norm input is the usual case. Sweeps alternate between the
 * current active set and full passes; the solver only reports convergence
 * once a full pass moves no coefficient by more than tol and the stationarity
 * conditions hold within kkt_tol. On hitting max_iter the best iterate is
 * returned with converged = false.
 */
inline LassoFit fit_lasso_cd(const RegressionProblem& p, double lambda, double tol = 1e-7,
                             int max_iter = 10000, const VectorXd* warm_start = nullptr,
                             double kkt_tol = 1e-6) {
    if (lambda < 0.0) throw SchemaError("negative penalty");
    detail::CenteredView v = detail::center_features(p);
    Eigen::Index m = v.x.cols();

    VectorXd beta = VectorXd::Zero(m);
    if (warm_start) {
        if (warm_start->size() != m) throw DimensionMismatch("warm start size");
        beta = *warm_start;
        for (Eigen::Index j = 0; j < m; ++j)
            if (v.col_sq(j) <= 0.0) beta(j) = 0.0;
    }
    VectorXd residual = v.y - v.x * beta;

    auto sweep = [&](const std::vector<Eigen::Index>& cols) {
        double max_delta = 0.0;
        for (Eigen::Index j : cols) {
            if (v.col_sq(j) <= 0.0) continue;
            double old = beta(j);
            double rho = v.x.col(j).dot(residual) + v.col_sq(j) * old;
            double next = soft_threshold(rho, lambda) / v.col_sq(j);
            if (next != old) {
                residual += v.x.col(j) * (old - next);
                beta(j) = next;
                max_delta = std::max(max_delta, std::abs(next - old));
            }
        }
        return max_delta;
    };

    std::vector<Eigen::Index> all(m);
    for (Eigen::Index j = 0; j < m; ++j) all[j] = j;

    int iters = 0;
    bool converged = false;
    while (iters < max_iter) {
        double delta = sweep(all);
        ++iters;

        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < m; ++j)
            if (beta(j) != 0.0) active.push_back(j);
        while (!active.empty() && iters < max_iter) {
            double d = sweep(active);
            ++iters;
            if (d < tol) break;
        }
        if (delta >= tol && iters < max_iter) continue;

        // full-pass stationarity certificate
        VectorXd grad = v.x.transpose() * residual;
        double worst = 0.0;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (beta(j) != 0.0)
                worst = std::max(worst, std::abs(grad(j) - lambda * (beta(j) > 0 ? 1.0 : -1.0)));
            else
                worst = std::max(worst, std::abs(grad(j)) - lambda);
        }
        if (worst <= kkt_tol) {
            converged = true;
            break;
        }
    }

    LassoFit fit;
    fit.coefficients = beta;
    fit.lambda = lambda;
    fit.iterations = iters;
    fit.converged = converged;
    fit.intercept = p.has_intercept ? v.y_mean - v.col_means.dot(beta) : 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
        if (beta(j) != 0.0) fit.active_set.push_back(static_cast<int>(j));
    fit.objective = lasso_objective(p, fit.intercept, beta, lambda);
    return fit;
}

/// Worst violation of the stationarity conditions at a fit, measured with
/// the problem's own columns. Zero at an exact optimum.
inline double kkt_violation(const RegressionProblem& p, const LassoFit& fit) {
    Eigen::Index m = p.num_features();
    if (fit.coefficients.size() != m) throw DimensionMismatch("fit does not match problem");
    VectorXd yhat = p.design.rightCols(m) * fit.coefficients;
    if (p.has_intercept) yhat.array() += fit.intercept;
    VectorXd r = p.response - yhat;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
        double g = p.design.col(p.first_feature() + j).dot(r);
        if (fit.coefficients(j) != 0.0)
            worst = std::max(worst, std::abs(g - fit.lambda * (fit.coefficients(j) > 0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::abs(g) - fit.lambda);
    }
    return worst;
}

/// Conventional grid for penalty search: num points log-spaced from
/// lambda_max down to lambda_max*min_ratio, descending.
inline std::vector<double> default_lambda_grid(double lam_max, int num = 100,
                                               double min_ratio = 1e-4) {
    if (num < 1) throw SchemaError("grid needs at least one point");
    std::vector<double> grid(num);
    if (num == 1 || lam_max <= 0.0) {
        for (auto& g : grid) g = lam_max;
        return grid;
    }
    double step = std::log(min_ratio) / static_cast<double>(num - 1);
    for (int i = 0; i < num; ++i) grid[i] = lam_max * std::exp(step * i);
    return grid;
}

struct CvResult {
    double best_lambda = 0.0;
    std::vector<double> cv_error;  // aligned to the grid
};

/**
 * k-fold cross-validation over a descending penalty grid. Folds are
 * contiguous row blocks: rows are time-ordered and shuffled folds would put
 * a point's neighbours into its own training set. Each fold's fits are
 * warm-started down the grid. Ties prefer the larger penalty.
 */
inline CvResult cross_validate_lambda(const RegressionProblem& p, int k,
                                      const std::vector<double>& grid) {
    Eigen::Index n = p.rows();
    if (k < 2) throw TooFewRows("need at least 2 folds");
    if (n < 2 * k) throw TooFewRows("need at least 2 rows per fold");
    if (grid.empty()) throw SchemaError("empty penalty grid");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] > grid[i - 1]) throw SchemaError("penalty grid must be descending");

    std::vector<double> sse(grid.size(), 0.0);
    for (int fold = 0; fold < k; ++fold) {
        Eigen::Index lo = n * fold / k;
        Eigen::Index hi = n * (fold + 1) / k;
        Eigen::Index held = hi - lo;
        Eigen::Index train = n - held;

        RegressionProblem sub;
        sub.has_intercept = p.has_intercept;
        sub.column_labels = p.column_labels;
        sub.column_scales = p.column_scales;
        sub.design.resize(train, p.cols());
        sub.response.resize(train);
        sub.design.topRows(lo) = p.design.topRows(lo);
        sub.response.head(lo) = p.response.head(lo);
        sub.design.bottomRows(n - hi) = p.design.bottomRows(n - hi);
        sub.response.tail(n - hi) = p.response.tail(n - hi);

        VectorXd warm = VectorXd::Zero(p.num_features());
        for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            LassoFit fit = fit_lasso_cd(sub, grid[gi], 1e-7, 10000, &warm);
            warm = fit.coefficients;
            VectorXd pred = p.design.block(lo, p.first_feature(), held, p.num_features()) *
                            fit.coefficients;
            if (p.has_intercept) pred.array() += fit.intercept;
            sse[gi] += (p.response.segment(lo, held) - pred).squaredNorm();
        }
    }

    CvResult res;
    res.cv_error.resize(grid.size());
    std::size_t best = 0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        res.cv_error[gi] = sse[gi] / static_cast<double>(n);
        if (res.cv_error[gi] < res.cv_error[best]) best = gi;
    }
    res.best_lambda = grid[best];
    return res;
}

/// Prediction from a penalized fit: features are on the raw scale and are
/// divided by the stored column scales.
inline double predict_linear(const LassoFit& fit, const VectorXd& features,
                             const VectorXd& column_scales) {
    if (features.size() != fit.coefficients.size() || column_scales.size() != features.size())
        throw DimensionMismatch("feature vector does not match fit");
    double yhat = fit.intercept;
    for (Eigen::Index j = 0; j < features.size(); ++j)
        yhat += fit.coefficients(j) * (features(j) / column_scales(j));
    return yhat;
}

/// Prediction from a least-squares fit whose coefficient vector includes the
/// intercept position when has_intercept is set.
inline double predict_linear(const OlsFit& fit, const VectorXd& features, bool has_intercept) {
    Eigen::Index m = fit.coefficients.size() - (has_intercept ? 1 : 0);
    if (features.size() != m) throw DimensionMismatch("feature vector does not match fit");
    double yhat = has_intercept ? fit.coefficients(0) : 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
        yhat += fit.coefficients(j + (has_intercept ? 1 : 0)) * features(j);
    return yhat;
}

}  // namespace loadcast
