#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "loadcast/backtest.hpp"
#include "loadcast/io.hpp"
#include "loadcast/synth.hpp"

namespace loadcast {

struct RunConfig {
    std::filesystem::path dataset_dir;
    std::filesystem::path output_dir;
    BacktestOptions options;
};

/**
 * Ingest a raw readings CSV into the per-meter dataset store. Meters whose
 * data cannot be made contiguous are listed under "failed" and skipped; the
 * rest are written. Returns the printed summary.
 */
inline json cmd_ingest(const std::filesystem::path& csv_path,
                       const std::filesystem::path& dataset_dir, int max_gap_fill = 3) {
    auto by_meter = read_readings_csv(csv_path);
    std::size_t meters = 0, hours = 0, gaps = 0;
    json failed = json::array();
    for (auto& [id, rows] : by_meter) {
        try {
            ConsumptionSeries s = ingest_series(id, rows, max_gap_fill);
            write_dataset(dataset_dir, s);
            ++meters;
            hours += s.size();
            for (bool g : s.gap_mask) gaps += g ? 1 : 0;
        } catch (const Error& e) {
            json f;
            f["meter"] = id;
            f["message"] = e.what();
            failed.push_back(f);
        }
    }
    json summary;
    summary["meters"] = meters;
    summary["hours"] = hours;
    summary["gaps_filled"] = gaps;
    summary["failed"] = failed;
    return summary;
}

/**
 * The full experiment: read the dataset, backtest every requested method,
 * and persist report, summary, pairing table, model documents, and timings
 * under the output directory. Timings go to their own file; everything else
 * is a pure function of dataset and config.
 */
inline BacktestReport cmd_run(const RunConfig& cfg) {
    std::vector<ConsumptionSeries> panel = read_dataset(cfg.dataset_dir);
    BacktestReport report = run_backtest(panel, cfg.options);
    write_report_csv(cfg.output_dir / "report.csv", report);
    write_json(cfg.output_dir / "summary.json", summary_to_json(report));
    write_pairing_csv(cfg.output_dir / "pairing.csv", report.pairings);
    write_models(cfg.output_dir / "models", report.models);
    write_timings(cfg.output_dir / "timings.json", report.runtime_sec);
    return report;
}

/// Re-derive the per-user and per-method aggregates from a report file.
/// The training means are not part of the report, so the normalized error
/// is not recomputable here and is omitted.
inline json recompute_summary(const std::vector<ReportRow>& rows) {
    std::map<std::tuple<std::string, std::string, std::size_t>, std::vector<ReportRow>> groups;
    for (const auto& r : rows)
        groups[{r.user, method_name(r.method), r.window_size}].push_back(r);

    json per_user = json::array();
    std::map<std::pair<std::string, std::size_t>, std::vector<double>> ape_by_method;
    std::map<std::pair<std::string, std::size_t>, std::pair<std::vector<double>, std::vector<double>>>
        err_by_method;
    for (const auto& [key, grp] : groups) {
        std::vector<double> ape, abs_err, sq_err;
        std::size_t skipped = 0;
        for (const auto& r : grp) {
            abs_err.push_back(r.abs_err);
            sq_err.push_back(r.sq_err);
            if (r.pct_valid)
                ape.push_back(r.pct_err);
            else
                ++skipped;
        }
        json row;
        row["user"] = std::get<0>(key);
        row["method"] = std::get<1>(key);
        row["window"] = std::get<2>(key);
        double med_ape = ape.empty() ? 0.0 : aggregate(ape, AggregateMode::Median);
        double med_abs = aggregate(abs_err, AggregateMode::Median);
        double med_sq = aggregate(sq_err, AggregateMode::Median);
        row["median_ape"] = med_ape;
        row["median_abs_err"] = med_abs;
        row["median_sq_err"] = med_sq;
        row["windows"] = grp.size();
        row["pct_skipped"] = skipped;
        per_user.push_back(row);
        ape_by_method[{std::get<1>(key), std::get<2>(key)}].push_back(med_ape);
        auto& eb = err_by_method[{std::get<1>(key), std::get<2>(key)}];
        eb.first.push_back(med_abs);
        eb.second.push_back(med_sq);
    }

    json summaries = json::array();
    for (const auto& [key, apes] : ape_by_method) {
        double n = static_cast<double>(apes.size());
        double mean = 0.0;
        for (double x : apes) mean += x;
        mean /= n;
        double sd = 0.0;
        if (apes.size() > 1) {
            for (double x : apes) sd += (x - mean) * (x - mean);
            sd = std::sqrt(sd / (n - 1.0));
        }
        const auto& eb = err_by_method[key];
        double mae = 0.0, mse = 0.0;
        for (double x : eb.first) mae += x;
        for (double x : eb.second) mse += x;
        json row;
        row["method"] = key.first;
        row["window"] = key.second;
        row["users"] = apes.size();
        row["mape_mean"] = mean;
        row["mape_sd"] = sd;
        row["mae_mean"] = mae / n;
        row["mse_mean"] = mse / n;
        summaries.push_back(row);
    }
    json out;
    out["summaries"] = summaries;
    out["per_user"] = per_user;
    return out;
}

namespace detail {

inline std::vector<Method> parse_methods(const std::string& csv) {
    std::vector<Method> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(method_from_name(cur));
        cur.clear();
    };
    for (char c : csv) {
        if (c == ',')
            flush();
        else if (c != ' ')
            cur += c;
    }
    flush();
    if (out.empty()) throw SchemaError("no methods given");
    return out;
}

inline std::vector<std::size_t> parse_windows(const std::string& csv) {
    std::vector<std::size_t> out;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) out.push_back(static_cast<std::size_t>(std::stoul(cur)));
        cur.clear();
    };
    for (char c : csv) {
        if (c == ',')
            flush();
        else if (c != ' ')
            cur += c;
    }
    flush();
    if (out.empty()) throw SchemaError("no window sizes given");
    return out;
}

}  // namespace detail

/**
 * Entry point behind the binary; tests call it directly with argv arrays.
 * Subcommands: ingest, synth, fit, pairtest, backtest, report. Failures
 * print a one-line JSON error object to stderr and return nonzero.
 */
inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"sparse autoregressive forecasting for hourly consumption panels"};
    app.require_subcommand(1);

    auto* ing = app.add_subcommand("ingest", "load a raw readings CSV into a dataset directory");
    std::string ing_input, ing_dataset;
    int ing_gap = 3;
    ing->add_option("--input", ing_input, "readings CSV (meter_id,timestamp,kwh)")->required();
    ing->add_option("--dataset", ing_dataset, "dataset directory to write")->required();
    ing->add_option("--max-gap-fill", ing_gap, "largest gap in hours to interpolate");

    auto* syn = app.add_subcommand("synth", "generate a synthetic panel as a readings CSV");
    std::string syn_out, syn_kind = "demo";
    std::size_t syn_users = 10, syn_length = 1500, syn_pairs = 5;
    double syn_noise = 0.2, syn_cross = 0.4, syn_base = 0.0;
    std::uint64_t syn_seed = 1;
    syn->add_option("--out", syn_out, "output CSV path")->required();
    syn->add_option("--kind", syn_kind, "demo | null | paired")
        ->check(CLI::IsMember({"demo", "null", "paired"}));
    syn->add_option("--users", syn_users, "users for demo/null panels");
    syn->add_option("--pairs", syn_pairs, "driver/follower pairs for the paired panel");
    syn->add_option("--length", syn_length, "hours per user");
    syn->add_option("--noise-sd", syn_noise, "innovation standard deviation");
    syn->add_option("--cross-coef", syn_cross, "follower weight on the driver's previous hour");
    syn->add_option("--base", syn_base,
                    "offset added to all values; output is clipped at zero so the file "
                    "passes ingestion");
    syn->add_option("--seed", syn_seed, "generator seed");

    auto* fit = app.add_subcommand("fit", "fit the sparse model on one training window");
    std::string fit_dataset, fit_meter, fit_out;
    std::size_t fit_start = 0, fit_size = 720;
    int fit_lag = 240, fit_folds = 5;
    bool fit_no_detrend = false, fit_weekday = false;
    fit->add_option("--dataset", fit_dataset)->required();
    fit->add_option("--meter", fit_meter)->required();
    fit->add_option("--window-start", fit_start, "first hour index of the window");
    fit->add_option("--window-size", fit_size, "training hours");
    fit->add_option("--max-lag", fit_lag);
    fit->add_option("--cv-folds", fit_folds)->check(CLI::IsMember({5, 10}));
    fit->add_option("--out", fit_out, "model JSON path");
    fit->add_flag("--no-detrend", fit_no_detrend);
    fit->add_flag("--weekday", fit_weekday, "drop weekends before indexing");

    auto* pt = app.add_subcommand("pairtest", "covariance significance test for user pairing");
    std::string pt_dataset, pt_meter, pt_out;
    std::size_t pt_start = 0, pt_size = 720;
    int pt_lag = 240, pt_folds = 5;
    double pt_alpha = 0.05;
    bool pt_all = false, pt_no_detrend = false, pt_weekday = false;
    pt->add_option("--dataset", pt_dataset)->required();
    pt->add_option("--meter", pt_meter, "target meter (omit with --all)");
    pt->add_flag("--all", pt_all, "test every meter against the rest");
    pt->add_option("--window-start", pt_start);
    pt->add_option("--window-size", pt_size);
    pt->add_option("--max-lag", pt_lag);
    pt->add_option("--cv-folds", pt_folds)->check(CLI::IsMember({5, 10}));
    pt->add_option("--alpha", pt_alpha);
    pt->add_option("--out", pt_out, "pairing CSV path");
    pt->add_flag("--no-detrend", pt_no_detrend);
    pt->add_flag("--weekday", pt_weekday);

    auto* bt = app.add_subcommand("backtest", "sliding-window evaluation of all methods");
    std::string bt_dataset, bt_out, bt_methods = "averaging,lw,ar1,es,lasso";
    std::string bt_windows = "720,960,1200";
    int bt_lag = 240, bt_folds = 5, bt_threads = 1;
    double bt_alpha = 0.05;
    std::uint64_t bt_seed = 1;
    bool bt_no_detrend = false, bt_weekday = false, bt_lw_weekday = false;
    bt->set_config("--config", "", "flat key=value file; command-line flags win");
    bt->add_option("--dataset", bt_dataset)->required();
    bt->add_option("--out", bt_out, "output directory")->required();
    bt->add_option("--methods", bt_methods, "comma list of averaging,lw,ar1,es,lasso,lasso+pair");
    bt->add_option("--windows", bt_windows, "comma list of training sizes");
    bt->add_option("--max-lag", bt_lag);
    bt->add_option("--cv-folds", bt_folds)->check(CLI::IsMember({5, 10}));
    bt->add_option("--alpha", bt_alpha);
    bt->add_option("--seed", bt_seed);
    bt->add_option("--threads", bt_threads);
    bt->add_flag("--no-detrend", bt_no_detrend);
    bt->add_flag("--weekday", bt_weekday);
    bt->add_flag("--lw-weekday-offset", bt_lw_weekday);

    auto* rep = app.add_subcommand("report", "recompute aggregates from a report CSV");
    std::string rep_in, rep_out;
    rep->add_option("--report", rep_in, "report.csv from a backtest")->required();
    rep->add_option("--out", rep_out, "summary JSON path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*ing) {
            json summary = cmd_ingest(ing_input, ing_dataset, ing_gap);
            std::cout << summary.dump(2) << '\n';
            return 0;
        }
        if (*syn) {
            std::vector<ConsumptionSeries> panel;
            if (syn_kind == "null") {
                panel = generate_null_panel(syn_users, syn_length, syn_noise, syn_seed);
            } else if (syn_kind == "paired") {
                panel = generate_paired_panel(syn_pairs, syn_length, syn_noise, syn_cross,
                                              syn_seed)
                            .series;
            } else {
                for (std::size_t u = 0; u < syn_users; ++u) {
                    SparseArSpec spec = demo_spec(syn_length, syn_noise,
                                                  Rng::splitmix64(syn_seed ^ Rng::splitmix64(u)));
                    char id[32];
                    std::snprintf(id, sizeof(id), "u%03zu", u);
                    panel.push_back(generate_sparse_ar(spec, id));
                }
            }
            for (auto& s : panel)
                for (auto& v : s.values) v = std::max(0.0, v + syn_base);
            write_readings_csv(syn_out, panel);
            json summary;
            summary["users"] = panel.size();
            summary["hours"] = panel.empty() ? 0 : panel.front().size();
            summary["kind"] = syn_kind;
            std::cout << summary.dump(2) << '\n';
            return 0;
        }
        if (*fit) {
            auto panel = read_dataset(fit_dataset);
            const ConsumptionSeries* target = nullptr;
            for (const auto& s : panel)
                if (s.user_id == fit_meter) target = &s;
            if (!target) throw SchemaError("meter '" + fit_meter + "' not in dataset");
            ConsumptionSeries series = fit_weekday ? weekday_filter(*target) : *target;
            std::size_t win_end = fit_start + fit_size;
            ConsumptionSeries det = series;
            std::optional<DailyProfile> profile;
            if (!fit_no_detrend) {
                auto [d, prof] = detrend_daily(series, fit_start, win_end);
                det = std::move(d);
                profile = prof;
            }
            PreprocessConfig cfg;
            cfg.max_lag = fit_lag;
            RegressionProblem problem =
                standardize_columns(build_lag_matrix(det, cfg, fit_start, win_end));
            auto grid = default_lambda_grid(lambda_max(problem));
            CvResult cv = cross_validate_lambda(problem, fit_folds, grid);
            LassoFit lf = fit_lasso_cd(problem, cv.best_lambda);
            ModelDocument doc =
                make_model_document(fit_meter, problem, lf, profile, fit_start, win_end);
            json jd = model_to_json(doc);
            if (!fit_out.empty()) write_json(fit_out, jd);
            json summary;
            summary["meter"] = fit_meter;
            summary["lambda"] = lf.lambda;
            summary["active"] = lf.active_set.size();
            summary["iterations"] = lf.iterations;
            summary["converged"] = lf.converged;
            std::cout << summary.dump(2) << '\n';
            return 0;
        }
        if (*pt) {
            auto panel = read_dataset(pt_dataset);
            if (pt_weekday)
                for (auto& s : panel) s = weekday_filter(s);
            std::vector<std::string> targets;
            if (pt_all) {
                for (const auto& s : panel) targets.push_back(s.user_id);
            } else {
                if (pt_meter.empty()) throw SchemaError("need --meter or --all");
                targets.push_back(pt_meter);
            }
            std::size_t win_end = pt_start + pt_size;
            PreprocessConfig cfg;
            cfg.max_lag = pt_lag;
            std::vector<PairingRecord> records;
            for (const auto& id : targets) {
                const ConsumptionSeries* target = nullptr;
                for (const auto& s : panel)
                    if (s.user_id == id) target = &s;
                if (!target) throw SchemaError("meter '" + id + "' not in dataset");
                ConsumptionSeries det = *target;
                if (!pt_no_detrend) det = detrend_daily(*target, pt_start, win_end).first;
                RegressionProblem problem =
                    standardize_columns(build_lag_matrix(det, cfg, pt_start, win_end));
                auto grid = default_lambda_grid(lambda_max(problem));
                CvResult cv = cross_validate_lambda(problem, pt_folds, grid);
                LassoFit lf = fit_lasso_cd(problem, cv.best_lambda);
                std::vector<ConsumptionSeries> others;
                for (const auto& s : panel) {
                    if (s.user_id == id || s.size() < win_end) continue;
                    others.push_back(pt_no_detrend ? s
                                                   : detrend_daily(s, pt_start, win_end).first);
                }
                CovTestResult res =
                    run_pair_test(det, problem, lf, others, pt_start, win_end, pt_alpha);
                records.push_back({pt_size, res});
            }
            if (!pt_out.empty()) write_pairing_csv(pt_out, records);
            json out = json::array();
            for (const auto& r : records) {
                json row;
                row["target"] = r.result.target_id;
                row["candidate"] = r.result.selected_candidate;
                row["p_value"] = r.result.sigma_known ? r.result.p_exp : r.result.p_f;
                row["accepted"] = r.result.accepted;
                out.push_back(row);
            }
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        if (*bt) {
            RunConfig cfg;
            cfg.dataset_dir = bt_dataset;
            cfg.output_dir = bt_out;
            cfg.options.methods = detail::parse_methods(bt_methods);
            cfg.options.window_sizes = detail::parse_windows(bt_windows);
            cfg.options.max_lag = bt_lag;
            cfg.options.cv_folds = bt_folds;
            cfg.options.alpha = bt_alpha;
            cfg.options.seed = bt_seed;
            cfg.options.threads = bt_threads;
            cfg.options.detrend = !bt_no_detrend;
            cfg.options.weekday_only = bt_weekday;
            cfg.options.lw_weekday_offset = bt_lw_weekday;
            BacktestReport report = cmd_run(cfg);
            json summary;
            summary["rows"] = report.rows.size();
            summary["failures"] = report.failures.size();
            summary["pairings"] = report.pairings.size();
            summary["output"] = bt_out;
            std::cout << summary.dump(2) << '\n';
            return 0;
        }
        if (*rep) {
            auto rows = read_report_csv(rep_in);
            json summary = recompute_summary(rows);
            if (!rep_out.empty())
                write_json(rep_out, summary);
            else
                std::cout << summary.dump(2) << '\n';
            return 0;
        }
    } catch (const Error& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        json err;
        err["error"] = e.what();
        std::cerr << err.dump() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace loadcast
