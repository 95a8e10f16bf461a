#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "loadcast/errors.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/series.hpp"

namespace loadcast {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Identifies one regressor: a lag of the target itself (owner empty) or of
/// another user's series.
struct ColumnLabel {
    int lag = 0;
    std::string owner;

    bool operator==(const ColumnLabel& o) const { return lag == o.lag && owner == o.owner; }
};

/**
 * A regression instance y ~ X. When has_intercept is set, column 0 of the
 * design is all ones; column_labels and column_scales describe the remaining
 * columns in order. Scales are the divisors applied by standardize_columns
 * (all ones until then).
 */
struct RegressionProblem {
    VectorXd response;
    MatrixXd design;
    std::vector<ColumnLabel> column_labels;
    VectorXd column_scales;
    bool has_intercept = true;

    Eigen::Index rows() const { return design.rows(); }
    Eigen::Index cols() const { return design.cols(); }
    Eigen::Index first_feature() const { return has_intercept ? 1 : 0; }
    Eigen::Index num_features() const { return design.cols() - first_feature(); }
};

/**
 * Autoregressive design over one window. Produces a row for every t in
 * [begin + max_lag, end): response y_t, features [1, y_{t-1}, ..., y_{t-I}].
 * Lags never reach outside the window, so a window is self-contained and
 * sliding windows can be fit independently.
 */
inline RegressionProblem build_lag_matrix(const ConsumptionSeries& s, const PreprocessConfig& cfg,
                                          std::size_t begin, std::size_t end) {
    if (cfg.max_lag < 1) throw WindowTooShort("max_lag must be at least 1");
    std::size_t lag = static_cast<std::size_t>(cfg.max_lag);
    if (end > s.size() || begin >= end)
        throw WindowTooShort("bad window bounds");
    if (end - begin <= lag)
        throw WindowTooShort("window of " + std::to_string(end - begin) +
                             " hours cannot support lag order " + std::to_string(cfg.max_lag));

    std::size_t rows = end - begin - lag;
    RegressionProblem p;
    p.has_intercept = true;
    p.response.resize(rows);
    p.design.resize(rows, static_cast<Eigen::Index>(lag) + 1);
    p.column_labels.resize(lag);
    p.column_scales = VectorXd::Ones(static_cast<Eigen::Index>(lag));
    for (std::size_t i = 0; i < lag; ++i) p.column_labels[i] = {static_cast<int>(i) + 1, ""};

    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t t = begin + lag + r;
        p.response(r) = s.values[t];
        p.design(r, 0) = 1.0;
        for (std::size_t i = 1; i <= lag; ++i) p.design(r, static_cast<Eigen::Index>(i)) = s.values[t - i];
    }
    return p;
}

/**
 * Divide each non-intercept column by its Euclidean norm and record the
 * norms in column_scales. Inverse of the transform is multiplication by the
 * stored scales, so fitted values are preserved exactly.
 */
inline RegressionProblem standardize_columns(const RegressionProblem& p) {
    RegressionProblem out = p;
    Eigen::Index f = p.first_feature();
    for (Eigen::Index j = f; j < p.cols(); ++j) {
        double norm = p.design.col(j).norm();
        if (norm <= 0.0) {
            const auto& lbl = p.column_labels[static_cast<std::size_t>(j - f)];
            throw ZeroColumn("column lag=" + std::to_string(lbl.lag) +
                             (lbl.owner.empty() ? "" : " owner=" + lbl.owner) +
                             " is identically zero");
        }
        out.design.col(j) /= norm;
        out.column_scales(j - f) = p.column_scales(j - f) * norm;
    }
    return out;
}

/// One backtest position: fit on [train_begin, train_end), predict test_index.
struct Window {
    std::size_t train_begin = 0;
    std::size_t train_end = 0;
    std::size_t test_index = 0;
};

/**
 * Enumerate every position where a full training window is followed by a
 * test point `horizon` hours after its end. Stride is one hour. An empty
 * result just means the series is too short.
 */
inline std::vector<Window> sliding_windows(std::size_t series_length, std::size_t window,
                                           std::size_t horizon = 1) {
    if (horizon < 1) throw WindowTooShort("horizon must be at least 1");
    std::vector<Window> out;
    if (window == 0 || window >= series_length) return out;
    for (std::size_t s = 0;; ++s) {
        std::size_t test = s + window + horizon - 1;
        if (test >= series_length) break;
        out.push_back({s, s + window, test});
    }
    return out;
}

/**
 * Feature vector for predicting position t: [y_{t-1}, ..., y_{t-max_lag}],
 * aligned to build_lag_matrix's labels. Raw scale; the predictor applies
 * column scales itself.
 */
inline VectorXd lag_features(const ConsumptionSeries& s, std::size_t t, int max_lag) {
    if (max_lag < 1) throw InsufficientHistory("max_lag must be at least 1");
    if (t < static_cast<std::size_t>(max_lag) || t >= s.size())
        throw InsufficientHistory("position " + std::to_string(t) + " lacks " +
                                  std::to_string(max_lag) + " hours of history");
    VectorXd x(max_lag);
    for (int i = 1; i <= max_lag; ++i) x(i - 1) = s.values[t - static_cast<std::size_t>(i)];
    return x;
}

}  // namespace loadcast
