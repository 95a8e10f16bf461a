#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "loadcast/errors.hpp"

namespace loadcast {

/// Hours since 1970-01-01T00:00:00Z. All timestamps are fixed UTC hours;
/// there is no timezone or DST arithmetic anywhere in the library.
using HourIndex = std::int64_t;

inline int hour_of_day(HourIndex h) {
    return static_cast<int>(((h % 24) + 24) % 24);
}

/// 0 = Sunday .. 6 = Saturday. 1970-01-01 was a Thursday.
inline int day_of_week(HourIndex h) {
    std::int64_t days = h >= 0 ? h / 24 : (h - 23) / 24;
    return static_cast<int>(((days + 4) % 7 + 7) % 7);
}

inline bool is_weekend(HourIndex h) {
    int d = day_of_week(h);
    return d == 0 || d == 6;
}

namespace detail {

// days since 1970-01-01 from a proleptic Gregorian date
inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace detail

/**
 * Parse an ISO-8601 UTC timestamp truncated to the hour.
 * Accepted: "YYYY-MM-DDTHH", "YYYY-MM-DDTHH:MM", "YYYY-MM-DDTHH:MM:SS",
 * each with an optional trailing 'Z'. Minutes/seconds must be zero.
 */
inline HourIndex parse_hour_iso(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    char sep = 0;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &se);
    if (n < 5 || (sep != 'T' && sep != ' '))
        throw SchemaError("unparseable timestamp: '" + s + "'");
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23)
        throw SchemaError("timestamp out of range: '" + s + "'");
    if (mi != 0 || se != 0)
        throw SchemaError("timestamp not truncated to the hour: '" + s + "'");
    return detail::days_from_civil(y, mo, d) * 24 + h;
}

inline std::string format_hour_iso(HourIndex hour) {
    std::int64_t days = hour >= 0 ? hour / 24 : (hour - 23) / 24;
    int h = hour_of_day(hour);
    int y, m, d;
    detail::civil_from_days(days, y, m, d);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:00:00Z", y, m, d, h);
    return buf;
}

}  // namespace loadcast
