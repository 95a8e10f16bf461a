#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "loadcast/calendar.hpp"
#include "loadcast/errors.hpp"

namespace loadcast {

struct RawReading {
    HourIndex hour = 0;
    double value = 0.0;
};

/**
 * A contiguous hourly series for one user. values[t] is the reading at
 * absolute hour (start + t). Non-negativity is enforced at ingestion;
 * detrended or synthetic series are allowed to go negative and are stored
 * in the same container, so downstream code never re-checks the sign.
 */
struct ConsumptionSeries {
    std::string user_id;
    HourIndex start = 0;
    std::vector<double> values;
    std::vector<bool> gap_mask;  // true where the value was interpolated

    std::size_t size() const { return values.size(); }
    HourIndex hour_at(std::size_t t) const { return start + static_cast<HourIndex>(t); }
};

/**
 * Build a contiguous series from raw hourly readings.
 *
 * Readings are sorted by hour. Duplicate hours and negative values are
 * rejected. Interior gaps of at most max_gap_fill missing hours are filled
 * by linear interpolation between the surrounding readings and flagged in
 * gap_mask; a longer gap throws GapTooLarge.
 */
inline ConsumptionSeries ingest_series(const std::string& user_id,
                                       std::vector<RawReading> readings,
                                       int max_gap_fill = 3) {
    if (readings.empty()) throw EmptyInput("no readings for user '" + user_id + "'");
    std::sort(readings.begin(), readings.end(),
              [](const RawReading& a, const RawReading& b) { return a.hour < b.hour; });

    for (const auto& r : readings) {
        if (!(r.value >= 0.0) || !std::isfinite(r.value))
            throw NegativeReading("user '" + user_id + "' at " + format_hour_iso(r.hour) +
                                  ": value " + std::to_string(r.value));
    }

    ConsumptionSeries s;
    s.user_id = user_id;
    s.start = readings.front().hour;
    s.values.reserve(readings.size());
    s.gap_mask.reserve(readings.size());

    s.values.push_back(readings.front().value);
    s.gap_mask.push_back(false);
    for (std::size_t i = 1; i < readings.size(); ++i) {
        HourIndex prev = readings[i - 1].hour;
        HourIndex cur = readings[i].hour;
        if (cur == prev)
            throw DuplicateTimestamp("user '" + user_id + "' at " + format_hour_iso(cur));
        std::int64_t missing = cur - prev - 1;
        if (missing > max_gap_fill)
            throw GapTooLarge("user '" + user_id + "': " + std::to_string(missing) +
                              " missing hours after " + format_hour_iso(prev) +
                              " (max " + std::to_string(max_gap_fill) + ")");
        double lo = readings[i - 1].value;
        double hi = readings[i].value;
        for (std::int64_t k = 1; k <= missing; ++k) {
            double frac = static_cast<double>(k) / static_cast<double>(missing + 1);
            s.values.push_back(lo + frac * (hi - lo));
            s.gap_mask.push_back(true);
        }
        s.values.push_back(hi);
        s.gap_mask.push_back(false);
    }
    return s;
}

}  // namespace loadcast
