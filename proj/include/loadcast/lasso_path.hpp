#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/lasso.hpp"

namespace loadcast {

struct PathEvent {
    double lambda = 0.0;
    int column = -1;
    bool entry = true;  // false marks a coefficient dropped back to zero
};

/**
 * The first entry events of the L1 solution path, found by homotopy
 * continuation from infinite penalty downward. knots[k] is the penalty at
 * which the (k+1)-th distinct entry happens; events also logs sign-change
 * drops so the active set at any penalty can be replayed.
 */
struct LassoPathPrefix {
    std::vector<double> knots;
    std::vector<int> entering_index;
    std::vector<PathEvent> events;
    bool degenerate = false;  // an event had to be tie-broken by column index

    /// Active features strictly below penalty `lambda`, ascending. A column
    /// entering exactly at `lambda` still has coefficient zero there and is
    /// not counted.
    std::vector<int> active_at(double lambda) const {
        std::vector<int> act;
        for (const auto& ev : events) {
            if (ev.lambda <= lambda) break;
            if (ev.entry) {
                act.push_back(ev.column);
            } else {
                act.erase(std::remove(act.begin(), act.end(), ev.column), act.end());
            }
        }
        std::sort(act.begin(), act.end());
        return act;
    }
};

/**
 * Compute the first num_knots entry knots. The response is centered
 * internally when the problem carries an intercept; columns are used as
 * given and should be standardized. Between events the active coefficients
 * are affine in the penalty, so each next event is the largest penalty at
 * which either an inactive correlation catches up or an active coefficient
 * crosses zero; drops are handled and do not count as knots.
 *
 * Ties within 1e-12 are broken toward the lowest column index and flagged.
 * A zero response yields an empty prefix.
 */
inline LassoPathPrefix lasso_path_prefix(const RegressionProblem& p, int num_knots) {
    if (num_knots < 1) throw SchemaError("need at least one knot");
    detail::CenteredView v = detail::center_features(p);
    const Eigen::Index m = v.x.cols();

    LassoPathPrefix path;

    std::vector<char> usable(m, 1);
    for (Eigen::Index j = 0; j < m; ++j)
        if (v.col_sq(j) <= 0.0) usable[j] = 0;

    const double tie_tol = 1e-12;
    VectorXd c0 = v.x.transpose() * v.y;

    double lam = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
        if (usable[j]) lam = std::max(lam, std::abs(c0(j)));
    if (lam <= 0.0) return path;
    int first = -1;
    for (Eigen::Index j = 0; j < m; ++j) {
        if (!usable[j] || std::abs(c0(j)) < lam - tie_tol) continue;
        if (first < 0)
            first = static_cast<int>(j);
        else
            path.degenerate = true;
    }

    std::vector<int> active{first};
    std::vector<double> sign{c0(first) > 0 ? 1.0 : -1.0};
    path.knots.push_back(lam);
    path.entering_index.push_back(first);
    path.events.push_back({lam, first, true});

    while (static_cast<int>(path.knots.size()) < num_knots) {
        const Eigen::Index a = static_cast<Eigen::Index>(active.size());
        MatrixXd xa(v.x.rows(), a);
        VectorXd s(a);
        for (Eigen::Index i = 0; i < a; ++i) {
            xa.col(i) = v.x.col(active[static_cast<std::size_t>(i)]);
            s(i) = sign[static_cast<std::size_t>(i)];
        }
        Eigen::LDLT<MatrixXd> gram(xa.transpose() * xa);
        if (gram.info() != Eigen::Success) {
            path.degenerate = true;
            break;
        }
        VectorXd ca = gram.solve(xa.transpose() * v.y);
        VectorXd wa = gram.solve(s);
        if (!ca.allFinite() || !wa.allFinite()) {
            path.degenerate = true;
            break;
        }

        // active coefficients follow ca - lambda*wa; residual correlations of
        // inactive columns follow aa + lambda*bb
        VectorXd fit_dir = xa * wa;
        VectorXd fit_ols = xa * ca;

        const double upper = lam * (1.0 - 1e-12);
        double best = 0.0;
        int best_col = -1;
        bool best_entry = true;
        bool tie = false;

        auto consider = [&](double cand, int col, bool entry) {
            if (!(cand > 0.0) || cand > upper) return;
            if (cand > best + tie_tol) {
                best = cand;
                best_col = col;
                best_entry = entry;
                tie = false;
            } else if (best_col >= 0 && cand > best - tie_tol) {
                tie = true;
                if (col < best_col) {
                    best_col = col;
                    best_entry = entry;
                    if (cand > best) best = cand;
                }
            }
        };

        for (Eigen::Index j = 0; j < m; ++j) {
            if (!usable[j]) continue;
            if (std::find(active.begin(), active.end(), static_cast<int>(j)) != active.end())
                continue;
            double aa = c0(j) - v.x.col(j).dot(fit_ols);
            double bb = v.x.col(j).dot(fit_dir);
            if (std::abs(1.0 - bb) > 1e-14) consider(aa / (1.0 - bb), static_cast<int>(j), true);
            if (std::abs(1.0 + bb) > 1e-14) consider(-aa / (1.0 + bb), static_cast<int>(j), true);
        }
        for (Eigen::Index i = 0; i < a; ++i) {
            if (std::abs(wa(i)) < 1e-14) continue;
            consider(ca(i) / wa(i), active[static_cast<std::size_t>(i)], false);
        }

        if (best_col < 0) break;  // path exhausted, remaining knots do not exist
        if (tie) path.degenerate = true;

        lam = best;
        if (best_entry) {
            double corr = 0.0;
            {
                Eigen::Index j = best_col;
                double aa = c0(j) - v.x.col(j).dot(fit_ols);
                double bb = v.x.col(j).dot(fit_dir);
                corr = aa + lam * bb;
            }
            active.push_back(best_col);
            sign.push_back(corr >= 0 ? 1.0 : -1.0);
            path.knots.push_back(lam);
            path.entering_index.push_back(best_col);
            path.events.push_back({lam, best_col, true});
        } else {
            auto it = std::find(active.begin(), active.end(), best_col);
            sign.erase(sign.begin() + (it - active.begin()));
            active.erase(it);
            path.events.push_back({lam, best_col, false});
        }
    }
    return path;
}

}  // namespace loadcast
