#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "loadcast/errors.hpp"
#include "loadcast/series.hpp"

namespace loadcast {

enum class BaselineKind { Averaging10, LastWeek, Ar1, ExpSmoothing };

struct BaselineModel {
    BaselineKind kind = BaselineKind::Ar1;
    double intercept = 0.0;  // AR(1)
    double slope = 0.0;      // AR(1)
    double weight = 0.0;     // smoothing weight
    double level = 0.0;      // final smoothed level
    bool degenerate = false; // flat window, parameters pinned
};

/// Mean of the readings at the same hour of day over the ten previous days.
inline double predict_averaging10(const ConsumptionSeries& s, std::size_t t) {
    if (t < 240 || t >= s.size() + 1)
        throw InsufficientHistory("averaging needs 240 hours before position " +
                                  std::to_string(t));
    double sum = 0.0;
    for (int k = 1; k <= 10; ++k) sum += s.values[t - 24 * static_cast<std::size_t>(k)];
    return sum / 10.0;
}

/// The reading at the same hour one week earlier: 168 hours back on raw
/// data, 120 on a weekday-contiguous sequence (five 24-hour days per week).
inline double predict_last_week(const ConsumptionSeries& s, std::size_t t,
                                bool weekday_contiguous = false) {
    std::size_t offset = weekday_contiguous ? 120 : 168;
    if (t < offset || t >= s.size() + 1)
        throw InsufficientHistory("last-week needs " + std::to_string(offset) +
                                  " hours before position " + std::to_string(t));
    return s.values[t - offset];
}

/**
 * Least-squares AR(1) over [begin, end): y_t on y_{t-1} plus an intercept.
 * A flat window leaves the slope undefined; it is pinned to zero with the
 * intercept at the window mean and the fit flagged.
 */
inline BaselineModel fit_ar1(const ConsumptionSeries& s, std::size_t begin, std::size_t end) {
    if (end > s.size() || begin >= end) throw WindowTooShort("bad window bounds");
    if (end - begin < 3) throw WindowTooShort("AR(1) needs at least 3 points");

    std::size_t n = end - begin - 1;
    double sx = 0.0, sy = 0.0;
    for (std::size_t t = begin + 1; t < end; ++t) {
        sx += s.values[t - 1];
        sy += s.values[t];
    }
    double xbar = sx / static_cast<double>(n);
    double ybar = sy / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = begin + 1; t < end; ++t) {
        double dx = s.values[t - 1] - xbar;
        sxx += dx * dx;
        sxy += dx * (s.values[t] - ybar);
    }

    BaselineModel m;
    m.kind = BaselineKind::Ar1;
    if (sxx <= 1e-12 * static_cast<double>(n) * (1.0 + xbar * xbar)) {
        m.degenerate = true;
        m.slope = 0.0;
        m.intercept = ybar;
        return m;
    }
    m.slope = sxy / sxx;
    m.intercept = ybar - m.slope * xbar;
    return m;
}

inline double predict_ar1(const BaselineModel& m, double last_value) {
    return m.intercept + m.slope * last_value;
}

namespace detail {

inline double smoothing_sse(const ConsumptionSeries& s, std::size_t begin, std::size_t end,
                            double w, double* final_level = nullptr) {
    std::size_t init_span = std::min<std::size_t>(24, end - begin);
    double level = 0.0;
    for (std::size_t t = begin; t < begin + init_span; ++t) level += s.values[t];
    level /= static_cast<double>(init_span);

    double sse = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
        double err = s.values[t] - level;
        sse += err * err;
        level = w * s.values[t] + (1.0 - w) * level;
    }
    if (final_level) *final_level = level;
    return sse;
}

}  // namespace detail

/**
 * Level-only exponential smoothing over [begin, end). The weight minimizes
 * the one-step in-sample squared error, found by golden-section search on
 * [0,1] to 1e-4; the level starts at the mean of the window's first day.
 * The one-step prediction is the final level.
 */
inline BaselineModel fit_exp_smoothing(const ConsumptionSeries& s, std::size_t begin,
                                       std::size_t end) {
    if (end > s.size() || begin >= end) throw WindowTooShort("bad window bounds");
    if (end - begin < 10) throw WindowTooShort("smoothing needs at least 10 points");

    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - phi * (hi - lo);
    double x2 = lo + phi * (hi - lo);
    double f1 = detail::smoothing_sse(s, begin, end, x1);
    double f2 = detail::smoothing_sse(s, begin, end, x2);
    while (hi - lo > 1e-4) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = detail::smoothing_sse(s, begin, end, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = detail::smoothing_sse(s, begin, end, x2);
        }
    }

    BaselineModel m;
    m.kind = BaselineKind::ExpSmoothing;
    m.weight = 0.5 * (lo + hi);
    detail::smoothing_sse(s, begin, end, m.weight, &m.level);
    return m;
}

inline double predict_exp_smoothing(const BaselineModel& m) { return m.level; }

}  // namespace loadcast
