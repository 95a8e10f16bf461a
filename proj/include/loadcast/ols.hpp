#pragma once

#include <Eigen/Dense>

#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"

namespace loadcast {

struct OlsFit {
    VectorXd coefficients;  // aligned to design columns, intercept included if present
    double rss = 0.0;
    Eigen::Index dof = 0;  // rows minus columns
};

/**
 * Least squares via column-pivoted QR. Requires more rows than columns and
 * full column rank; an underdetermined system is reported as such rather
 * than silently returning a minimum-norm solution.
 */
inline OlsFit fit_ols(const RegressionProblem& p) {
    Eigen::Index n = p.rows();
    Eigen::Index k = p.cols();
    if (n < k)
        throw Underdetermined("rows " + std::to_string(n) + " < columns " + std::to_string(k));

    Eigen::ColPivHouseholderQR<MatrixXd> qr(p.design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k)
        throw RankDeficient("design rank " + std::to_string(qr.rank()) + " of " +
                            std::to_string(k));

    OlsFit fit;
    fit.coefficients = qr.solve(p.response);
    fit.rss = (p.response - p.design * fit.coefficients).squaredNorm();
    fit.dof = n - k;
    return fit;
}

}  // namespace loadcast
