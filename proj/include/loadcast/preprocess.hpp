#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "loadcast/calendar.hpp"
#include "loadcast/errors.hpp"
#include "loadcast/series.hpp"

namespace loadcast {

struct PreprocessConfig {
    int max_lag = 240;
    bool detrend = true;
    bool weekday_only = false;
    int max_gap_fill = 3;
};

/// Mean consumption per hour of day, estimated on a training range.
struct DailyProfile {
    std::array<double, 24> mean{};

    double at_hour(HourIndex h) const { return mean[static_cast<std::size_t>(hour_of_day(h))]; }
};

/**
 * Subtract the per-hour-of-day mean from a series. The 24 means are
 * estimated on rows [train_begin, train_end) only, but the subtraction is
 * applied to the whole series so lag features around the range stay on one
 * scale. The profile is returned so predictions can be re-trended.
 */
inline std::pair<ConsumptionSeries, DailyProfile> detrend_daily(const ConsumptionSeries& s,
                                                                std::size_t train_begin,
                                                                std::size_t train_end) {
    if (train_end > s.size() || train_begin >= train_end)
        throw RangeTooShort("bad training range");
    if (train_end - train_begin < 24)
        throw RangeTooShort("training range shorter than one day: " +
                            std::to_string(train_end - train_begin));

    std::array<double, 24> sum{};
    std::array<std::size_t, 24> cnt{};
    for (std::size_t t = train_begin; t < train_end; ++t) {
        int h = hour_of_day(s.hour_at(t));
        sum[h] += s.values[t];
        cnt[h] += 1;
    }
    DailyProfile profile;
    for (int h = 0; h < 24; ++h) {
        if (cnt[h] == 0) throw RangeTooShort("training range misses hour " + std::to_string(h));
        profile.mean[h] = sum[h] / static_cast<double>(cnt[h]);
    }

    ConsumptionSeries out = s;
    for (std::size_t t = 0; t < out.size(); ++t)
        out.values[t] -= profile.at_hour(out.hour_at(t));
    return {out, profile};
}

inline ConsumptionSeries retrend_daily(const ConsumptionSeries& s, const DailyProfile& profile) {
    ConsumptionSeries out = s;
    for (std::size_t t = 0; t < out.size(); ++t)
        out.values[t] += profile.at_hour(out.hour_at(t));
    return out;
}

/**
 * Drop weekend hours and re-index the survivors as one contiguous sequence.
 *
 * The result's start is the absolute hour of the first kept element.
 * Interior removals are whole days (multiples of 24 hours), so hour-of-day
 * arithmetic on the re-indexed positions still matches the real clock;
 * day-of-week does not survive and must not be used downstream.
 */
inline ConsumptionSeries weekday_filter(const ConsumptionSeries& s) {
    ConsumptionSeries out;
    out.user_id = s.user_id;
    bool first = true;
    for (std::size_t t = 0; t < s.size(); ++t) {
        HourIndex h = s.hour_at(t);
        if (is_weekend(h)) continue;
        if (first) {
            out.start = h;
            first = false;
        }
        out.values.push_back(s.values[t]);
        out.gap_mask.push_back(t < s.gap_mask.size() ? s.gap_mask[t] : false);
    }
    if (first) throw EmptyInput("series '" + s.user_id + "' has no weekday hours");
    return out;
}

}  // namespace loadcast
