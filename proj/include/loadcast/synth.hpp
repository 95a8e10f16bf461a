#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/lasso.hpp"
#include "loadcast/ols.hpp"
#include "loadcast/rng.hpp"
#include "loadcast/series.hpp"

namespace loadcast {

/**
 * Ground truth for a sparse autoregression. The l1 bound on the
 * coefficients is a sufficient stationarity condition; specs violating it
 * are rejected rather than root-checked.
 */
struct SparseArSpec {
    std::vector<int> support;
    std::vector<double> coefficients;
    double intercept = 0.0;
    double noise_sd = 1.0;
    std::size_t length = 0;
    std::uint64_t seed = 0;
    std::optional<std::array<double, 24>> daily_profile;
};

inline void validate_spec(const SparseArSpec& spec) {
    if (spec.support.size() != spec.coefficients.size())
        throw SchemaError("support and coefficients differ in length");
    if (spec.length < 1) throw SchemaError("length must be positive");
    if (spec.noise_sd < 0.0) throw SchemaError("negative noise sd");
    double l1 = 0.0;
    for (std::size_t i = 0; i < spec.support.size(); ++i) {
        if (spec.support[i] < 1 || spec.support[i] > 240)
            throw SchemaError("lag orders must lie in [1, 240]");
        l1 += std::abs(spec.coefficients[i]);
    }
    if (l1 >= 1.0)
        throw UnstableSpec("absolute coefficients sum to " + std::to_string(l1) +
                           ", need < 1 for stationarity");
}

/**
 * Simulate y_t = b0 + sum_i b_i * y_{t-lag_i} + noise. History starts at
 * zero and ten times the largest lag is discarded as burn-in, so the
 * returned block is effectively stationary. Deterministic per seed.
 */
inline ConsumptionSeries generate_sparse_ar(const SparseArSpec& spec,
                                            const std::string& user_id = "synth",
                                            HourIndex start = 0) {
    validate_spec(spec);
    int max_lag = 0;
    for (int lag : spec.support) max_lag = std::max(max_lag, lag);
    std::size_t burn = 10 * static_cast<std::size_t>(max_lag);

    Rng rng(spec.seed);
    std::vector<double> buf(burn + spec.length);
    for (std::size_t t = 0; t < buf.size(); ++t) {
        double y = spec.intercept + spec.noise_sd * rng.normal();
        for (std::size_t i = 0; i < spec.support.size(); ++i) {
            std::size_t lag = static_cast<std::size_t>(spec.support[i]);
            if (t >= lag) y += spec.coefficients[i] * buf[t - lag];
        }
        buf[t] = y;
    }

    ConsumptionSeries s;
    s.user_id = user_id;
    s.start = start;
    s.values.assign(buf.begin() + static_cast<std::ptrdiff_t>(burn), buf.end());
    s.gap_mask.assign(s.values.size(), false);
    if (spec.daily_profile) {
        for (std::size_t t = 0; t < s.values.size(); ++t)
            s.values[t] += (*spec.daily_profile)[static_cast<std::size_t>(hour_of_day(s.hour_at(t)))];
    }
    return s;
}

/// Mutually independent white-noise users, for calibration under the
/// hypothesis that nobody helps predict anybody.
inline std::vector<ConsumptionSeries> generate_null_panel(std::size_t num_users,
                                                          std::size_t length, double sd,
                                                          std::uint64_t seed) {
    if (num_users < 2) throw SchemaError("a panel needs at least 2 users");
    std::vector<ConsumptionSeries> panel(num_users);
    for (std::size_t u = 0; u < num_users; ++u) {
        Rng rng = Rng::for_stream(seed, u);
        char id[32];
        std::snprintf(id, sizeof(id), "u%03zu", u);
        panel[u].user_id = id;
        panel[u].start = 0;
        panel[u].values.resize(length);
        panel[u].gap_mask.assign(length, false);
        for (std::size_t t = 0; t < length; ++t) panel[u].values[t] = sd * rng.normal();
    }
    return panel;
}

/**
 * The default demonstration pattern: dominant lags at one hour and one day,
 * a thin spread of small coefficients at longer lags up to ten days.
 */
inline SparseArSpec demo_spec(std::size_t length, double noise_sd, std::uint64_t seed) {
    SparseArSpec spec;
    spec.support = {1, 2, 5, 6, 16, 22, 23, 24, 48, 143, 144, 160, 191, 216, 238, 240};
    spec.coefficients.assign(spec.support.size(), 0.0);
    const double minor[4] = {0.01, 0.02, 0.03, 0.04};
    std::size_t cycle = 0;
    for (std::size_t i = 0; i < spec.support.size(); ++i) {
        if (spec.support[i] == 1)
            spec.coefficients[i] = 0.259;
        else if (spec.support[i] == 24)
            spec.coefficients[i] = 0.187;
        else
            spec.coefficients[i] = minor[cycle++ % 4];
    }
    spec.intercept = 0.0;
    spec.noise_sd = noise_sd;
    spec.length = length;
    spec.seed = seed;
    return spec;
}

struct PairedPanel {
    std::vector<ConsumptionSeries> series;
    std::vector<std::pair<std::string, std::string>> expected;  // follower -> driver
};

/**
 * Driver/follower pairs: each driver is a sparse autoregression on its own,
 * each follower mixes its own short lags with the driver's previous hour.
 * The follower list is the planted ground truth for the pairing test.
 */
inline PairedPanel generate_paired_panel(std::size_t num_pairs, std::size_t length,
                                         double noise_sd, double cross_coef,
                                         std::uint64_t seed) {
    if (num_pairs < 1) throw SchemaError("need at least one pair");
    if (std::abs(cross_coef) + 0.40 >= 1.0)
        throw UnstableSpec("cross coefficient too large for a stable follower");

    const std::size_t burn = 240;
    PairedPanel panel;
    for (std::size_t k = 0; k < num_pairs; ++k) {
        SparseArSpec dspec;
        dspec.support = {1, 24};
        dspec.coefficients = {0.30, 0.25};
        dspec.noise_sd = noise_sd;
        dspec.length = length + burn;
        dspec.seed = Rng::splitmix64(seed ^ Rng::splitmix64(2 * k));
        char did[32], fid[32];
        std::snprintf(did, sizeof(did), "d%03zu", k);
        std::snprintf(fid, sizeof(fid), "f%03zu", k);
        ConsumptionSeries driver = generate_sparse_ar(dspec, did);

        Rng rng = Rng::for_stream(seed, 2 * k + 1);
        std::vector<double> fbuf(length + burn);
        for (std::size_t t = 0; t < fbuf.size(); ++t) {
            double y = noise_sd * rng.normal();
            if (t >= 1) y += 0.25 * fbuf[t - 1] + cross_coef * driver.values[t - 1];
            if (t >= 24) y += 0.15 * fbuf[t - 24];
            fbuf[t] = y;
        }

        ConsumptionSeries follower;
        follower.user_id = fid;
        follower.start = 0;
        follower.values.assign(fbuf.begin() + static_cast<std::ptrdiff_t>(burn), fbuf.end());
        follower.gap_mask.assign(length, false);
        driver.values.erase(driver.values.begin(),
                            driver.values.begin() + static_cast<std::ptrdiff_t>(burn));
        driver.gap_mask.assign(length, false);

        panel.expected.emplace_back(follower.user_id, driver.user_id);
        panel.series.push_back(std::move(driver));
        panel.series.push_back(std::move(follower));
    }
    return panel;
}

/**
 * Brute-force minimizer of the penalized objective, independent of the
 * coordinate-descent code path. Splits the coefficients into positive and
 * negative parts and runs projected gradient descent with a 1/L step from
 * several starts, keeping the best objective. Intentionally slow and only
 * admitted on small problems; the iteration cap is generous and the loop
 * exits early once the iterate stops moving.
 */
inline VectorXd oracle_lasso_grid(const RegressionProblem& p, double lambda,
                                  std::uint64_t seed = 12345) {
    if (p.num_features() > 8 || p.rows() > 200)
        throw TooLarge("oracle admits at most 8 features over 200 rows");
    if (lambda < 0.0) throw SchemaError("negative penalty");

    detail::CenteredView v = detail::center_features(p);
    const Eigen::Index m = v.x.cols();
    const MatrixXd gram = v.x.transpose() * v.x;
    const VectorXd q = v.x.transpose() * v.y;

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
    double lip = eig.eigenvalues().maxCoeff();
    if (!(lip > 0.0)) return VectorXd::Zero(m);
    const double step = 1.0 / lip;

    auto penalized = [&](const VectorXd& beta) {
        return 0.5 * beta.dot(gram * beta) - q.dot(beta) + lambda * beta.lpNorm<1>();
    };

    Rng rng(seed);
    VectorXd best_beta = VectorXd::Zero(m);
    double best_obj = penalized(best_beta);
    const double start_scale = q.cwiseAbs().maxCoeff() / lip;

    for (int attempt = 0; attempt < 6; ++attempt) {
        VectorXd u = VectorXd::Zero(m);
        VectorXd w = VectorXd::Zero(m);
        if (attempt > 0) {
            for (Eigen::Index j = 0; j < m; ++j) {
                u(j) = rng.uniform() * start_scale;
                w(j) = rng.uniform() * start_scale;
            }
        }
        for (long iter = 0; iter < 1000000; ++iter) {
            VectorXd g = gram * (u - w) - q;
            double moved = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                double nu = std::max(0.0, u(j) - step * (g(j) + lambda));
                double nw = std::max(0.0, w(j) - step * (-g(j) + lambda));
                moved = std::max(moved, std::abs(nu - u(j)));
                moved = std::max(moved, std::abs(nw - w(j)));
                u(j) = nu;
                w(j) = nw;
            }
            if (moved < 1e-13 * std::max(1.0, start_scale)) break;
        }
        VectorXd beta = u - w;
        double obj = penalized(beta);
        if (obj < best_obj) {
            best_obj = obj;
            best_beta = beta;
        }
    }
    return best_beta;
}

struct OracleKnots {
    std::vector<double> knots;
    std::vector<int> entering;
};

namespace detail {

inline std::vector<int> oracle_active(const RegressionProblem& p, double lambda, double thresh,
                                      std::uint64_t seed) {
    VectorXd beta = oracle_lasso_grid(p, lambda, seed);
    std::vector<int> act;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
        if (std::abs(beta(j)) > thresh) act.push_back(static_cast<int>(j));
    return act;
}

}  // namespace detail

/**
 * Entry knots located without the homotopy algorithm: scan a penalty grid
 * downward with the brute-force solver, bracket each point where a new
 * coefficient first leaves zero, and sharpen the bracket by bisection. The
 * cumulative count of columns ever seen active defines the k-th entry, so a
 * coefficient that later drops out does not disturb earlier knots.
 */
inline OracleKnots oracle_path_knots(const RegressionProblem& p, int num_knots,
                                     std::uint64_t seed = 12345) {
    detail::CenteredView v = detail::center_features(p);
    double corr_max = 0.0;
    for (Eigen::Index j = 0; j < v.x.cols(); ++j)
        corr_max = std::max(corr_max, std::abs(v.x.col(j).dot(v.y)));
    OracleKnots out;
    if (corr_max <= 0.0) return out;

    const double thresh = 1e-10 * std::max(1.0, corr_max);
    const int grid_pts = 240;
    const double lo_ratio = 1e-6;
    std::vector<double> grid(grid_pts);
    for (int i = 0; i < grid_pts; ++i)
        grid[i] = 1.02 * corr_max * std::exp(std::log(lo_ratio) * i / (grid_pts - 1));

    std::vector<int> entered;
    std::vector<std::pair<double, int>> found;
    double above = grid[0];
    for (int i = 0; i < grid_pts && static_cast<int>(found.size()) < num_knots; ++i) {
        std::vector<int> act = detail::oracle_active(p, grid[i], thresh, seed);
        std::vector<int> fresh;
        for (int j : act)
            if (std::find(entered.begin(), entered.end(), j) == entered.end())
                fresh.push_back(j);
        if (fresh.empty()) {
            above = grid[i];
            continue;
        }
        // one or more entries inside (grid[i], above]: bisect each in turn
        std::vector<std::pair<double, int>> segment;
        for (int j : fresh) {
            double lo = grid[i], hi = above;
            while (hi - lo > 1e-9 * corr_max) {
                double mid = 0.5 * (lo + hi);
                std::vector<int> mid_act = detail::oracle_active(p, mid, thresh, seed);
                bool on = std::find(mid_act.begin(), mid_act.end(), j) != mid_act.end();
                if (on)
                    lo = mid;
                else
                    hi = mid;
            }
            segment.emplace_back(0.5 * (lo + hi), j);
            entered.push_back(j);
        }
        std::sort(segment.rbegin(), segment.rend());
        found.insert(found.end(), segment.begin(), segment.end());
        above = grid[i];
    }
    if (static_cast<int>(found.size()) > num_knots) found.resize(static_cast<std::size_t>(num_knots));
    for (const auto& kn : found) {
        out.knots.push_back(kn.first);
        out.entering.push_back(kn.second);
    }
    return out;
}

struct SubsetFit {
    std::size_t k = 0;
    std::vector<int> support;
    double rss = 0.0;
};

struct BestSubsets {
    std::vector<SubsetFit> by_size;  // index k = best support of size k
    std::size_t evaluated = 0;       // non-empty supports scored
};

/**
 * Exhaustive least squares over every support up to max_k, the NP-hard
 * baseline the l1 penalty relaxes. Masks are scanned in ascending order so
 * ties resolve to the lexicographically first support.
 */
inline BestSubsets oracle_best_subset(const RegressionProblem& p, std::size_t max_k) {
    const Eigen::Index m = p.num_features();
    if (m > 12) throw TooLarge("exhaustive search admits at most 12 features");
    if (max_k > static_cast<std::size_t>(m)) max_k = static_cast<std::size_t>(m);

    BestSubsets out;
    out.by_size.resize(max_k + 1);

    VectorXd yc = p.response;
    if (p.has_intercept) yc.array() -= yc.mean();
    out.by_size[0].k = 0;
    out.by_size[0].rss = yc.squaredNorm();

    std::vector<char> seen(max_k + 1, 0);
    seen[0] = 1;
    const unsigned top = 1u << m;
    for (unsigned mask = 1; mask < top; ++mask) {
        std::size_t k = static_cast<std::size_t>(__builtin_popcount(mask));
        if (k > max_k) continue;

        RegressionProblem sub;
        sub.has_intercept = p.has_intercept;
        sub.response = p.response;
        Eigen::Index extra = p.has_intercept ? 1 : 0;
        sub.design.resize(p.rows(), static_cast<Eigen::Index>(k) + extra);
        if (p.has_intercept) sub.design.col(0) = p.design.col(0);
        std::vector<int> support;
        Eigen::Index c = extra;
        for (Eigen::Index j = 0; j < m; ++j) {
            if (mask & (1u << j)) {
                sub.design.col(c++) = p.design.col(p.first_feature() + j);
                support.push_back(static_cast<int>(j));
            }
        }
        double rss;
        try {
            rss = fit_ols(sub).rss;
        } catch (const Error&) {
            continue;  // collinear support, not a candidate
        }
        ++out.evaluated;
        if (!seen[k] || rss < out.by_size[k].rss) {
            out.by_size[k] = SubsetFit{k, support, rss};
            seen[k] = 1;
        }
    }
    return out;
}

}  // namespace loadcast
