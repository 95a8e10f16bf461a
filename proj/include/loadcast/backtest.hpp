#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loadcast/baselines.hpp"
#include "loadcast/covtest.hpp"
#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/lasso.hpp"
#include "loadcast/metrics.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/series.hpp"

namespace loadcast {

enum class Method { Averaging10, LastWeek, Ar1, ExpSmoothing, Lasso, LassoPair };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::Averaging10: return "averaging";
        case Method::LastWeek: return "lw";
        case Method::Ar1: return "ar1";
        case Method::ExpSmoothing: return "es";
        case Method::Lasso: return "lasso";
        case Method::LassoPair: return "lasso+pair";
    }
    throw SchemaError("unknown method");
}

inline Method method_from_name(const std::string& name) {
    if (name == "averaging") return Method::Averaging10;
    if (name == "lw") return Method::LastWeek;
    if (name == "ar1") return Method::Ar1;
    if (name == "es") return Method::ExpSmoothing;
    if (name == "lasso") return Method::Lasso;
    if (name == "lasso+pair") return Method::LassoPair;
    throw SchemaError("unknown method '" + name + "'");
}

struct BacktestOptions {
    std::vector<std::size_t> window_sizes = {720, 960, 1200};
    std::size_t horizon = 1;
    int max_lag = 240;
    int cv_folds = 5;
    int cv_grid_size = 100;
    double alpha = 0.05;
    std::vector<Method> methods;
    std::uint64_t seed = 0;
    bool detrend = true;
    bool weekday_only = false;
    bool lw_weekday_offset = false;
    int threads = 1;
};

struct WindowRecord {
    std::string user;
    Method method = Method::Ar1;
    std::size_t window_size = 0;
    std::size_t window_start = 0;
    double actual = 0.0;
    double predicted = 0.0;
    double abs_err = 0.0;
    double sq_err = 0.0;
    double pct_err = 0.0;
    bool pct_valid = true;  // false when the actual was too close to zero
};

struct FailureRecord {
    std::string user;
    Method method = Method::Ar1;
    std::size_t window_size = 0;
    std::string message;
};

struct PairingRecord {
    std::size_t window_size = 0;
    CovTestResult result;
};

/// The fitted sparse model of the last window per (user, window size), in
/// raw-scale weights, kept so a run can persist its models.
struct ModelSnapshot {
    std::string user;
    std::size_t window_size = 0;
    std::size_t train_begin = 0;
    std::size_t train_end = 0;
    double lambda = 0.0;
    double intercept = 0.0;
    std::vector<ColumnLabel> terms;
    std::vector<double> weights;
    std::vector<double> scales;
    std::optional<DailyProfile> profile;
};

/// Per (user, method, window size): medians over the sliding windows, plus
/// the root of the median squared error normalized by the mean training
/// level.
struct UserMethodSummary {
    std::string user;
    Method method = Method::Ar1;
    std::size_t window_size = 0;
    double med_ape = 0.0;
    double med_abs = 0.0;
    double med_sq = 0.0;
    double nrmsd = 0.0;
    std::size_t windows = 0;
    std::size_t pct_skipped = 0;
};

/// Per (method, window size): mean and spread across users of the per-user
/// median errors.
struct MethodSummary {
    Method method = Method::Ar1;
    std::size_t window_size = 0;
    double mape_mean = 0.0;
    double mape_sd = 0.0;
    double mae_mean = 0.0;
    double mse_mean = 0.0;
    double nrmsd_mean = 0.0;
    std::size_t users = 0;
};

struct BacktestReport {
    std::vector<WindowRecord> rows;
    std::vector<UserMethodSummary> per_user;
    std::vector<MethodSummary> summaries;
    std::vector<PairingRecord> pairings;
    std::vector<ModelSnapshot> models;
    std::vector<FailureRecord> failures;
    std::uint64_t seed = 0;
    // wall-clock only; kept out of the deterministic report files
    std::map<std::string, double> runtime_sec;
};

namespace detail {

struct UserOutput {
    std::vector<WindowRecord> rows;
    std::vector<UserMethodSummary> per_user;
    std::vector<PairingRecord> pairings;
    std::vector<ModelSnapshot> models;
    std::vector<FailureRecord> failures;
    std::map<std::string, double> runtime_sec;
};

inline WindowRecord make_record(const std::string& user, Method method, std::size_t w,
                                std::size_t start, double actual, double predicted) {
    WindowRecord r;
    r.user = user;
    r.method = method;
    r.window_size = w;
    r.window_start = start;
    r.actual = actual;
    r.predicted = predicted;
    r.abs_err = std::abs(actual - predicted);
    r.sq_err = (actual - predicted) * (actual - predicted);
    r.pct_valid = std::abs(actual) >= 1e-9;
    r.pct_err = r.pct_valid ? std::abs((actual - predicted) / actual) : 0.0;
    return r;
}

inline UserMethodSummary summarize_user(const std::vector<WindowRecord>& rows,
                                        const std::vector<double>& train_means,
                                        const std::string& user, Method method,
                                        std::size_t w) {
    UserMethodSummary s;
    s.user = user;
    s.method = method;
    s.window_size = w;
    s.windows = rows.size();
    std::vector<double> ape, abs_err, sq_err;
    for (const auto& r : rows) {
        abs_err.push_back(r.abs_err);
        sq_err.push_back(r.sq_err);
        if (r.pct_valid)
            ape.push_back(r.pct_err);
        else
            ++s.pct_skipped;
    }
    s.med_abs = aggregate(abs_err, AggregateMode::Median);
    s.med_sq = aggregate(sq_err, AggregateMode::Median);
    s.med_ape = ape.empty() ? 0.0 : aggregate(ape, AggregateMode::Median);
    double ybar = aggregate(train_means, AggregateMode::Median);
    s.nrmsd = std::abs(ybar) >= 1e-12 ? std::sqrt(s.med_sq) / std::abs(ybar) : 0.0;
    return s;
}

inline double elapsed_sec(std::chrono::steady_clock::time_point from) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - from).count();
}

/// Everything one user contributes, computed independently of other users
/// except for the read-only candidate pool.
inline UserOutput backtest_user(const ConsumptionSeries& raw_target,
                                const std::vector<ConsumptionSeries>& raw_panel,
                                const BacktestOptions& opt) {
    UserOutput out;
    const ConsumptionSeries target = opt.weekday_only ? weekday_filter(raw_target) : raw_target;

    std::vector<ConsumptionSeries> panel;
    const bool want_lasso = std::find(opt.methods.begin(), opt.methods.end(), Method::Lasso) !=
                            opt.methods.end();
    const bool want_pair = std::find(opt.methods.begin(), opt.methods.end(),
                                     Method::LassoPair) != opt.methods.end();
    if (want_pair) {
        for (const auto& s : raw_panel) {
            if (s.user_id == raw_target.user_id) continue;
            panel.push_back(opt.weekday_only ? weekday_filter(s) : s);
        }
    }

    PreprocessConfig cfg;
    cfg.max_lag = opt.max_lag;
    cfg.detrend = opt.detrend;
    cfg.weekday_only = opt.weekday_only;

    for (std::size_t w : opt.window_sizes) {
        std::vector<Window> wins = sliding_windows(target.size(), w, opt.horizon);
        if (wins.empty()) {
            for (Method m : opt.methods)
                out.failures.push_back({target.user_id, m, w,
                                        "series of " + std::to_string(target.size()) +
                                            " hours has no full window"});
            continue;
        }

        std::vector<double> train_means(wins.size());
        for (std::size_t i = 0; i < wins.size(); ++i) {
            double sum = 0.0;
            for (std::size_t t = wins[i].train_begin; t < wins[i].train_end; ++t)
                sum += target.values[t];
            train_means[i] = sum / static_cast<double>(w);
        }

        // calendar baselines read the raw series; removing and re-adding the
        // daily profile cancels exactly for same-hour offsets
        for (Method m : {Method::Averaging10, Method::LastWeek}) {
            if (std::find(opt.methods.begin(), opt.methods.end(), m) == opt.methods.end())
                continue;
            auto t0 = std::chrono::steady_clock::now();
            std::vector<WindowRecord> rows;
            try {
                for (const auto& win : wins) {
                    double pred = m == Method::Averaging10
                                      ? predict_averaging10(target, win.test_index)
                                      : predict_last_week(target, win.test_index,
                                                          opt.lw_weekday_offset);
                    rows.push_back(make_record(target.user_id, m, w, win.train_begin,
                                               target.values[win.test_index], pred));
                }
                out.per_user.push_back(summarize_user(rows, train_means, target.user_id, m, w));
                out.rows.insert(out.rows.end(), rows.begin(), rows.end());
            } catch (const Error& e) {
                out.failures.push_back({target.user_id, m, w, e.what()});
            }
            out.runtime_sec[method_name(m)] += elapsed_sec(t0);
        }

        for (Method m : {Method::Ar1, Method::ExpSmoothing}) {
            if (std::find(opt.methods.begin(), opt.methods.end(), m) == opt.methods.end())
                continue;
            auto t0 = std::chrono::steady_clock::now();
            std::vector<WindowRecord> rows;
            try {
                for (const auto& win : wins) {
                    ConsumptionSeries det = target;
                    DailyProfile profile;
                    if (opt.detrend)
                        std::tie(det, profile) =
                            detrend_daily(target, win.train_begin, win.train_end);
                    double pred;
                    if (m == Method::Ar1) {
                        BaselineModel mdl = fit_ar1(det, win.train_begin, win.train_end);
                        pred = predict_ar1(mdl, det.values[win.test_index - 1]);
                    } else {
                        BaselineModel mdl = fit_exp_smoothing(det, win.train_begin, win.train_end);
                        pred = predict_exp_smoothing(mdl);
                    }
                    if (opt.detrend) pred += profile.at_hour(det.hour_at(win.test_index));
                    rows.push_back(make_record(target.user_id, m, w, win.train_begin,
                                               target.values[win.test_index], pred));
                }
                out.per_user.push_back(summarize_user(rows, train_means, target.user_id, m, w));
                out.rows.insert(out.rows.end(), rows.begin(), rows.end());
            } catch (const Error& e) {
                out.failures.push_back({target.user_id, m, w, e.what()});
            }
            out.runtime_sec[method_name(m)] += elapsed_sec(t0);
        }

        if (!want_lasso && !want_pair) continue;

        std::vector<WindowRecord> lasso_rows, pair_rows;
        bool have_pairing = false;
        std::string paired_id;
        try {
            VectorXd warm;
            for (const auto& win : wins) {
                auto t0 = std::chrono::steady_clock::now();
                ConsumptionSeries det = target;
                DailyProfile profile;
                if (opt.detrend)
                    std::tie(det, profile) = detrend_daily(target, win.train_begin, win.train_end);

                RegressionProblem problem =
                    standardize_columns(build_lag_matrix(det, cfg, win.train_begin, win.train_end));
                std::vector<double> grid =
                    default_lambda_grid(lambda_max(problem), opt.cv_grid_size);
                CvResult cv = cross_validate_lambda(problem, opt.cv_folds, grid);
                const VectorXd* ws = warm.size() == problem.num_features() ? &warm : nullptr;
                LassoFit fit = fit_lasso_cd(problem, cv.best_lambda, 1e-7, 10000, ws);
                warm = fit.coefficients;

                VectorXd feats = lag_features(det, win.test_index, opt.max_lag);
                double base = predict_linear(fit, feats, problem.column_scales);
                double trend =
                    opt.detrend ? profile.at_hour(det.hour_at(win.test_index)) : 0.0;

                if (&win == &wins.back()) {
                    ModelSnapshot snap;
                    snap.user = target.user_id;
                    snap.window_size = w;
                    snap.train_begin = win.train_begin;
                    snap.train_end = win.train_end;
                    snap.lambda = fit.lambda;
                    snap.intercept = fit.intercept;
                    for (int jx : fit.active_set) {
                        snap.terms.push_back(problem.column_labels[static_cast<std::size_t>(jx)]);
                        snap.weights.push_back(fit.coefficients(jx) / problem.column_scales(jx));
                        snap.scales.push_back(problem.column_scales(jx));
                    }
                    if (opt.detrend) snap.profile = profile;
                    out.models.push_back(std::move(snap));
                }
                if (want_lasso)
                    lasso_rows.push_back(make_record(target.user_id, Method::Lasso, w,
                                                     win.train_begin,
                                                     target.values[win.test_index],
                                                     base + trend));
                out.runtime_sec[method_name(Method::Lasso)] += elapsed_sec(t0);

                if (!want_pair) continue;
                auto t1 = std::chrono::steady_clock::now();

                // the pairing choice is made once per window size, on the
                // first window, and reused while the window slides
                if (&win == &wins.front()) {
                    std::vector<ConsumptionSeries> candidates;
                    for (const auto& u : panel) {
                        if (u.size() < win.train_end) continue;
                        if (opt.detrend) {
                            auto [ud, up] = detrend_daily(u, win.train_begin, win.train_end);
                            (void)up;
                            candidates.push_back(std::move(ud));
                        } else {
                            candidates.push_back(u);
                        }
                    }
                    if (!candidates.empty()) {
                        CovTestResult test =
                            run_pair_test(det, problem, fit, candidates, win.train_begin,
                                          win.train_end, opt.alpha);
                        out.pairings.push_back({w, test});
                        // a degenerate zero-residual test can accept without
                        // naming anyone; there is nothing to pair with then
                        if (test.accepted && !test.selected_candidate.empty()) {
                            have_pairing = true;
                            paired_id = test.selected_candidate;
                        }
                    }
                }

                double pair_pred = base + trend;
                if (have_pairing) {
                    const ConsumptionSeries* praw = nullptr;
                    for (const auto& u : panel)
                        if (u.user_id == paired_id) praw = &u;
                    if (!praw) throw MisalignedSeries("paired series disappeared");
                    ConsumptionSeries pdet = *praw;
                    if (opt.detrend) {
                        auto [pd, pp] = detrend_daily(*praw, win.train_begin, win.train_end);
                        (void)pp;
                        pdet = std::move(pd);
                    }
                    LinearModel mdl = paired_forecast_model(det, problem, fit, pdet,
                                                            win.train_begin, win.train_end);
                    pair_pred = predict_linear_model(mdl, det, &pdet, win.test_index) + trend;
                }
                pair_rows.push_back(make_record(target.user_id, Method::LassoPair, w,
                                                win.train_begin,
                                                target.values[win.test_index], pair_pred));
                out.runtime_sec[method_name(Method::LassoPair)] += elapsed_sec(t1);
            }
            if (want_lasso) {
                out.per_user.push_back(
                    summarize_user(lasso_rows, train_means, target.user_id, Method::Lasso, w));
                out.rows.insert(out.rows.end(), lasso_rows.begin(), lasso_rows.end());
            }
            if (want_pair) {
                out.per_user.push_back(summarize_user(pair_rows, train_means, target.user_id,
                                                      Method::LassoPair, w));
                out.rows.insert(out.rows.end(), pair_rows.begin(), pair_rows.end());
            }
        } catch (const Error& e) {
            if (want_lasso)
                out.failures.push_back({target.user_id, Method::Lasso, w, e.what()});
            if (want_pair)
                out.failures.push_back({target.user_id, Method::LassoPair, w, e.what()});
        }
    }
    return out;
}

}  // namespace detail

/**
 * Slide a training window over every user, fit each requested method per
 * window, and predict one step past the window's end. The penalty for the
 * sparse method is re-selected by cross-validation in every window. Output
 * is a flat record list plus per-user and per-method aggregates; one user's
 * failure is recorded and skipped, never fatal. Runs are deterministic for
 * a given seed and identical at any thread count, because users are
 * independent and results are merged in panel order.
 */
inline BacktestReport run_backtest(const std::vector<ConsumptionSeries>& panel,
                                   const BacktestOptions& opt) {
    if (panel.empty()) throw EmptyInput("empty panel");
    if (opt.methods.empty()) throw SchemaError("no methods requested");
    if (opt.cv_folds != 5 && opt.cv_folds != 10)
        throw SchemaError("cv_folds must be 5 or 10");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw SchemaError("alpha must lie in (0,1)");
    if (opt.horizon < 1) throw SchemaError("horizon must be at least 1");
    for (std::size_t i = 0; i < panel.size(); ++i)
        for (std::size_t j = i + 1; j < panel.size(); ++j)
            if (panel[i].user_id == panel[j].user_id)
                throw DuplicateTimestamp("duplicate user id '" + panel[i].user_id + "'");

    std::vector<detail::UserOutput> outputs(panel.size());
    if (opt.threads > 1) {
        std::vector<std::future<detail::UserOutput>> futs;
        futs.reserve(panel.size());
        for (std::size_t u = 0; u < panel.size(); ++u)
            futs.push_back(std::async(std::launch::async, [&, u] {
                return detail::backtest_user(panel[u], panel, opt);
            }));
        for (std::size_t u = 0; u < panel.size(); ++u) outputs[u] = futs[u].get();
    } else {
        for (std::size_t u = 0; u < panel.size(); ++u)
            outputs[u] = detail::backtest_user(panel[u], panel, opt);
    }

    BacktestReport report;
    report.seed = opt.seed;
    for (auto& o : outputs) {
        report.rows.insert(report.rows.end(), o.rows.begin(), o.rows.end());
        report.per_user.insert(report.per_user.end(), o.per_user.begin(), o.per_user.end());
        for (auto& pr : o.pairings) report.pairings.push_back(std::move(pr));
        for (auto& ms : o.models) report.models.push_back(std::move(ms));
        report.failures.insert(report.failures.end(), o.failures.begin(), o.failures.end());
        for (const auto& [k, v] : o.runtime_sec) report.runtime_sec[k] += v;
    }

    for (std::size_t w : opt.window_sizes) {
        for (Method m : opt.methods) {
            std::vector<double> ape, abs_err, sq_err, nrmsd;
            for (const auto& s : report.per_user) {
                if (s.method != m || s.window_size != w) continue;
                ape.push_back(s.med_ape);
                abs_err.push_back(s.med_abs);
                sq_err.push_back(s.med_sq);
                nrmsd.push_back(s.nrmsd);
            }
            if (ape.empty()) continue;
            MethodSummary ms;
            ms.method = m;
            ms.window_size = w;
            ms.users = ape.size();
            double n = static_cast<double>(ape.size());
            for (double x : ape) ms.mape_mean += x;
            ms.mape_mean /= n;
            if (ape.size() > 1) {
                double ss = 0.0;
                for (double x : ape) ss += (x - ms.mape_mean) * (x - ms.mape_mean);
                ms.mape_sd = std::sqrt(ss / (n - 1.0));
            }
            for (double x : abs_err) ms.mae_mean += x;
            ms.mae_mean /= n;
            for (double x : sq_err) ms.mse_mean += x;
            ms.mse_mean /= n;
            for (double x : nrmsd) ms.nrmsd_mean += x;
            ms.nrmsd_mean /= n;
            report.summaries.push_back(ms);
        }
    }
    return report;
}

}  // namespace loadcast
