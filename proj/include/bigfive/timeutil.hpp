#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace bigfive {

// UTC instant, milliseconds since the Unix epoch.
using InstantMs = std::int64_t;

constexpr std::int64_t kMsPerMinute = 60'000;
constexpr std::int64_t kMsPerHour = 3'600'000;
constexpr std::int64_t kMsPerDay = 86'400'000;

// Calendar date as days since 1970-01-01 in some local frame.
struct LocalDate {
    std::int32_t days = 0;

    auto operator<=>(const LocalDate&) const = default;
};

struct CivilDate {
    int year;
    unsigned month;  // 1..12
    unsigned day;    // 1..31
};

std::int64_t days_from_civil(int y, unsigned m, unsigned d);
CivilDate civil_from_days(std::int64_t z);

// 0 = Monday .. 6 = Sunday
int weekday_of(LocalDate date);
bool is_weekend(LocalDate date);

std::string format_local_date(LocalDate date);

// Strict ISO-8601: YYYY-MM-DDTHH:MM:SS[.mmm](Z|±HH:MM). Returns nullopt on
// malformed input.
std::optional<InstantMs> parse_iso8601(std::string_view text);

// Formats as UTC with millisecond precision and trailing Z.
std::string format_iso8601_utc(InstantMs t);

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

}  // namespace bigfive
