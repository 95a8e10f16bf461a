#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loadcast/backtest.hpp"
#include "loadcast/covtest.hpp"
#include "loadcast/design.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/lasso.hpp"
#include "loadcast/preprocess.hpp"
#include "loadcast/series.hpp"

namespace loadcast {

using json = nlohmann::ordered_json;

/// Shortest decimal form that round-trips the exact double, so files are
/// byte-stable across runs and platforms.
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, std::size_t row) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw SchemaError("row " + std::to_string(row) + ": bad number '" + s + "'");
    return x;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline void expect_header(const std::vector<std::string>& got,
                          const std::vector<std::string>& want, const std::string& path) {
    if (got.size() != want.size())
        throw SchemaError(path + ": expected " + std::to_string(want.size()) + " columns, got " +
                          std::to_string(got.size()));
    for (std::size_t i = 0; i < want.size(); ++i)
        if (got[i] != want[i])
            throw SchemaError(path + ": missing column '" + want[i] + "' (found '" + got[i] +
                              "')");
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot write " + path.string());
    return f;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot read " + path.string());
    return f;
}

}  // namespace detail

/// Raw readings grouped by meter, in file order within each meter.
inline std::map<std::string, std::vector<RawReading>> read_readings_csv(
    const std::filesystem::path& path) {
    auto f = detail::open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw SchemaError(path.string() + ": empty file");
    detail::expect_header(detail::split_csv_line(line), {"meter_id", "timestamp", "kwh"},
                          path.string());
    std::map<std::string, std::vector<RawReading>> out;
    std::size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 3)
            throw SchemaError("row " + std::to_string(row) + ": expected 3 cells, got " +
                              std::to_string(cells.size()));
        RawReading r;
        try {
            r.hour = parse_hour_iso(cells[1]);
        } catch (const SchemaError& e) {
            throw SchemaError("row " + std::to_string(row) + ": " + e.what());
        }
        r.value = parse_double(cells[2], row);
        out[cells[0]].push_back(r);
    }
    return out;
}

inline void write_readings_csv(const std::filesystem::path& path,
                               const std::vector<ConsumptionSeries>& panel) {
    auto f = detail::open_out(path);
    f << "meter_id,timestamp,kwh\n";
    for (const auto& s : panel)
        for (std::size_t t = 0; t < s.size(); ++t)
            f << s.user_id << ',' << format_hour_iso(s.hour_at(t)) << ','
              << format_double(s.values[t]) << '\n';
}

/// One file per meter under the dataset directory, ingestion schema plus a
/// `filled` flag marking interpolated hours.
inline void write_dataset(const std::filesystem::path& dir, const ConsumptionSeries& s) {
    auto f = detail::open_out(dir / (s.user_id + ".csv"));
    f << "meter_id,timestamp,kwh,filled\n";
    for (std::size_t t = 0; t < s.size(); ++t)
        f << s.user_id << ',' << format_hour_iso(s.hour_at(t)) << ','
          << format_double(s.values[t]) << ','
          << ((t < s.gap_mask.size() && s.gap_mask[t]) ? "1" : "0") << '\n';
}

inline ConsumptionSeries read_dataset_series(const std::filesystem::path& file) {
    auto f = detail::open_in(file);
    std::string line;
    if (!std::getline(f, line)) throw SchemaError(file.string() + ": empty file");
    detail::expect_header(detail::split_csv_line(line),
                          {"meter_id", "timestamp", "kwh", "filled"}, file.string());
    ConsumptionSeries s;
    std::size_t row = 1;
    while (std::getline(f, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 4)
            throw SchemaError("row " + std::to_string(row) + ": expected 4 cells");
        if (s.values.empty()) {
            s.user_id = cells[0];
            s.start = parse_hour_iso(cells[1]);
        } else {
            HourIndex h = parse_hour_iso(cells[1]);
            if (h != s.hour_at(s.size()))
                throw SchemaError("row " + std::to_string(row) + ": series not contiguous");
        }
        s.values.push_back(parse_double(cells[2], row));
        s.gap_mask.push_back(cells[3] == "1");
    }
    if (s.values.empty()) throw EmptyInput(file.string() + ": no rows");
    return s;
}

/// All meters in a dataset directory, ordered by meter id.
inline std::vector<ConsumptionSeries> read_dataset(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<ConsumptionSeries> panel;
    for (const auto& p : files) panel.push_back(read_dataset_series(p));
    if (panel.empty()) throw EmptyInput("no meter files under " + dir.string());
    return panel;
}

inline void write_report_csv(const std::filesystem::path& path, const BacktestReport& report) {
    auto f = detail::open_out(path);
    f << "user,method,window,window_start,abs_err,sq_err,pct_err\n";
    for (const auto& r : report.rows) {
        f << r.user << ',' << method_name(r.method) << ',' << r.window_size << ','
          << r.window_start << ',' << format_double(r.abs_err) << ','
          << format_double(r.sq_err) << ',';
        if (r.pct_valid) f << format_double(r.pct_err);
        f << '\n';
    }
}

struct ReportRow {
    std::string user;
    Method method = Method::Ar1;
    std::size_t window_size = 0;
    std::size_t window_start = 0;
    double abs_err = 0.0;
    double sq_err = 0.0;
    double pct_err = 0.0;
    bool pct_valid = true;
};

inline std::vector<ReportRow> read_report_csv(const std::filesystem::path& path) {
    auto f = detail::open_in(path);
    std::string line;
    if (!std::getline(f, line)) throw SchemaError(path.string() + ": empty file");
    detail::expect_header(
        detail::split_csv_line(line),
        {"user", "method", "window", "window_start", "abs_err", "sq_err", "pct_err"},
        path.string());
    std::vector<ReportRow> rows;
    std::size_t n = 1;
    while (std::getline(f, line)) {
        ++n;
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != 7) throw SchemaError("row " + std::to_string(n) + ": expected 7 cells");
        ReportRow r;
        r.user = cells[0];
        r.method = method_from_name(cells[1]);
        r.window_size = static_cast<std::size_t>(parse_double(cells[2], n));
        r.window_start = static_cast<std::size_t>(parse_double(cells[3], n));
        r.abs_err = parse_double(cells[4], n);
        r.sq_err = parse_double(cells[5], n);
        if (cells[6].empty()) {
            r.pct_valid = false;
        } else {
            r.pct_err = parse_double(cells[6], n);
        }
        rows.push_back(r);
    }
    return rows;
}

/// The pairing table. Multi-window runs append the window size as a trailing
/// column so one file covers the whole run.
inline void write_pairing_csv(const std::filesystem::path& path,
                              const std::vector<PairingRecord>& pairings) {
    auto f = detail::open_out(path);
    f << "target_id,paired_id,lambda1,lambda2,sigma2_hat,f1,p_value,accepted,window\n";
    for (const auto& p : pairings) {
        const CovTestResult& r = p.result;
        f << r.target_id << ',' << r.selected_candidate << ',' << format_double(r.lambda1) << ','
          << format_double(r.lambda2) << ',' << format_double(r.sigma2_hat) << ','
          << format_double(r.f1) << ',' << format_double(r.sigma_known ? r.p_exp : r.p_f) << ','
          << (r.accepted ? "1" : "0") << ',' << p.window_size << '\n';
    }
}

inline json summary_to_json(const BacktestReport& report) {
    json j;
    j["seed"] = report.seed;
    j["summaries"] = json::array();
    for (const auto& s : report.summaries) {
        json row;
        row["method"] = method_name(s.method);
        row["window"] = s.window_size;
        row["users"] = s.users;
        row["mape_mean"] = s.mape_mean;
        row["mape_sd"] = s.mape_sd;
        row["mae_mean"] = s.mae_mean;
        row["mse_mean"] = s.mse_mean;
        row["nrmsd_mean"] = s.nrmsd_mean;
        j["summaries"].push_back(row);
    }
    j["per_user"] = json::array();
    for (const auto& s : report.per_user) {
        json row;
        row["user"] = s.user;
        row["method"] = method_name(s.method);
        row["window"] = s.window_size;
        row["median_ape"] = s.med_ape;
        row["median_abs_err"] = s.med_abs;
        row["median_sq_err"] = s.med_sq;
        row["nrmsd"] = s.nrmsd;
        row["windows"] = s.windows;
        row["pct_skipped"] = s.pct_skipped;
        j["per_user"].push_back(row);
    }
    j["failures"] = json::array();
    for (const auto& fr : report.failures) {
        json row;
        row["user"] = fr.user;
        row["method"] = method_name(fr.method);
        row["window"] = fr.window_size;
        row["message"] = fr.message;
        j["failures"].push_back(row);
    }
    return j;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    auto f = detail::open_out(path);
    f << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path) {
    auto f = detail::open_in(path);
    return json::parse(f);
}

/// Wall-clock numbers go to their own file so the report files stay
/// byte-identical between runs with the same seed.
inline void write_timings(const std::filesystem::path& path,
                          const std::map<std::string, double>& runtime_sec) {
    json j;
    for (const auto& [k, v] : runtime_sec) j[k] = v;
    write_json(path, j);
}

struct ModelDocument {
    std::string meter_id;
    double lambda = 0.0;
    double intercept = 0.0;
    std::vector<ColumnLabel> terms;
    std::vector<double> coefficients;  // raw-scale weights
    std::vector<double> scales;
    std::optional<std::array<double, 24>> daily_profile;
    std::size_t train_begin = 0;
    std::size_t train_end = 0;
};

inline json model_to_json(const ModelDocument& m) {
    json j;
    j["meter_id"] = m.meter_id;
    j["lambda"] = m.lambda;
    j["intercept"] = m.intercept;
    j["columns"] = json::array();
    for (std::size_t i = 0; i < m.terms.size(); ++i) {
        json c;
        c["lag"] = m.terms[i].lag;
        c["owner"] = m.terms[i].owner;
        c["coefficient"] = m.coefficients[i];
        c["scale"] = m.scales[i];
        j["columns"].push_back(c);
    }
    if (m.daily_profile) {
        j["daily_profile"] = json::array();
        for (double v : *m.daily_profile) j["daily_profile"].push_back(v);
    } else {
        j["daily_profile"] = nullptr;
    }
    j["train_begin"] = m.train_begin;
    j["train_end"] = m.train_end;
    return j;
}

inline ModelDocument model_from_json(const json& j) {
    ModelDocument m;
    m.meter_id = j.at("meter_id").get<std::string>();
    m.lambda = j.at("lambda").get<double>();
    m.intercept = j.at("intercept").get<double>();
    for (const auto& c : j.at("columns")) {
        m.terms.push_back({c.at("lag").get<int>(), c.at("owner").get<std::string>()});
        m.coefficients.push_back(c.at("coefficient").get<double>());
        m.scales.push_back(c.at("scale").get<double>());
    }
    if (!j.at("daily_profile").is_null()) {
        std::array<double, 24> prof{};
        std::size_t i = 0;
        for (const auto& v : j.at("daily_profile")) {
            if (i >= 24) throw SchemaError("daily profile longer than 24");
            prof[i++] = v.get<double>();
        }
        if (i != 24) throw SchemaError("daily profile shorter than 24");
        m.daily_profile = prof;
    }
    m.train_begin = j.at("train_begin").get<std::size_t>();
    m.train_end = j.at("train_end").get<std::size_t>();
    return m;
}

/// Model document for a penalized fit: only the nonzero columns are stored,
/// with coefficients already divided by the training scales.
inline ModelDocument make_model_document(const std::string& meter_id,
                                         const RegressionProblem& problem, const LassoFit& fit,
                                         const std::optional<DailyProfile>& profile,
                                         std::size_t train_begin, std::size_t train_end) {
    ModelDocument m;
    m.meter_id = meter_id;
    m.lambda = fit.lambda;
    m.intercept = fit.intercept;
    for (int jx : fit.active_set) {
        m.terms.push_back(problem.column_labels[static_cast<std::size_t>(jx)]);
        m.coefficients.push_back(fit.coefficients(jx) / problem.column_scales(jx));
        m.scales.push_back(problem.column_scales(jx));
    }
    if (profile) {
        std::array<double, 24> prof{};
        for (int h = 0; h < 24; ++h) prof[static_cast<std::size_t>(h)] = profile->mean[static_cast<std::size_t>(h)];
        m.daily_profile = prof;
    }
    m.train_begin = train_begin;
    m.train_end = train_end;
    return m;
}

inline ModelDocument model_from_snapshot(const ModelSnapshot& snap) {
    ModelDocument m;
    m.meter_id = snap.user;
    m.lambda = snap.lambda;
    m.intercept = snap.intercept;
    m.terms = snap.terms;
    m.coefficients = snap.weights;
    m.scales = snap.scales;
    if (snap.profile) m.daily_profile = snap.profile->mean;
    m.train_begin = snap.train_begin;
    m.train_end = snap.train_end;
    return m;
}

inline void write_models(const std::filesystem::path& dir,
                         const std::vector<ModelSnapshot>& models) {
    for (const auto& snap : models) {
        auto doc = model_from_snapshot(snap);
        write_json(dir / (snap.user + "_w" + std::to_string(snap.window_size) + ".json"),
                   model_to_json(doc));
    }
}

}  // namespace loadcast
