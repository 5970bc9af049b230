#include "bigfive/timeutil.hpp"

#include <cstdio>
#include <cstdlib>

namespace bigfive {

// Howard Hinnant's civil calendar algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

int weekday_of(LocalDate date) {
    // 1970-01-01 was a Thursday; Monday = 0
    std::int64_t d = date.days + 3;
    return static_cast<int>(((d % 7) + 7) % 7);
}

bool is_weekend(LocalDate date) { return weekday_of(date) >= 5; }

std::string format_local_date(LocalDate date) {
    CivilDate c = civil_from_days(date.days);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", c.year, c.month, c.day);
    return buf;
}

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, long& out) {
    if (pos + count > s.size()) return false;
    long v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

std::optional<InstantMs> parse_iso8601(std::string_view s) {
    long year, month, day, hour, minute, second;
    if (!read_digits(s, 0, 4, year)) return std::nullopt;
    if (s.size() < 19 || s[4] != '-' || s[7] != '-' || s[10] != 'T' ||
        s[13] != ':' || s[16] != ':')
        return std::nullopt;
    if (!read_digits(s, 5, 2, month) || !read_digits(s, 8, 2, day) ||
        !read_digits(s, 11, 2, hour) || !read_digits(s, 14, 2, minute) ||
        !read_digits(s, 17, 2, second))
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
        minute > 59 || second > 60)
        return std::nullopt;

    std::size_t pos = 19;
    long millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        if (!read_digits(s, pos + 1, 3, millis)) return std::nullopt;
        pos += 4;
    }

    if (pos >= s.size()) return std::nullopt;
    long offset_min = 0;
    if (s[pos] == 'Z') {
        if (pos + 1 != s.size()) return std::nullopt;
    } else if (s[pos] == '+' || s[pos] == '-') {
        long oh, om;
        if (pos + 6 != s.size() || s[pos + 3] != ':' ||
            !read_digits(s, pos + 1, 2, oh) || !read_digits(s, pos + 4, 2, om))
            return std::nullopt;
        if (oh > 14 || om > 59) return std::nullopt;
        offset_min = oh * 60 + om;
        if (s[pos] == '-') offset_min = -offset_min;
    } else {
        return std::nullopt;
    }

    std::int64_t days = days_from_civil(static_cast<int>(year),
                                        static_cast<unsigned>(month),
                                        static_cast<unsigned>(day));
    std::int64_t local_ms = days * kMsPerDay + hour * kMsPerHour +
                            minute * kMsPerMinute + second * 1000 + millis;
    return local_ms - offset_min * kMsPerMinute;
}

std::string format_iso8601_utc(InstantMs t) {
    std::int64_t days = floor_div(t, kMsPerDay);
    std::int64_t ms = t - days * kMsPerDay;
    CivilDate c = civil_from_days(days);
    long hour = static_cast<long>(ms / kMsPerHour);
    long minute = static_cast<long>((ms / kMsPerMinute) % 60);
    long second = static_cast<long>((ms / 1000) % 60);
    long milli = static_cast<long>(ms % 1000);
    char buf[32];
    if (milli != 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ld.%03ldZ",
                      c.year, c.month, c.day, hour, minute, second, milli);
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ",
                      c.year, c.month, c.day, hour, minute, second);
    }
    return buf;
}

}  // namespace bigfive
