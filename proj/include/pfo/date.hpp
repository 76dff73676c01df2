#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "pfo/error.hpp"

namespace pfo {

/// Calendar date backed by std::chrono::sys_days.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : days_(std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}) {}

    constexpr std::chrono::sys_days days() const { return days_; }
    constexpr std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
    constexpr int year() const { return static_cast<int>(ymd().year()); }

    constexpr Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }
    constexpr int days_until(Date other) const { return (other.days_ - days_).count(); }

    constexpr bool is_weekend() const {
        const std::chrono::weekday wd{days_};
        return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
    }

    std::string iso() const {
        const auto d = ymd();
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                      static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
        return buf;
    }

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

namespace detail {
inline bool parse_digits(std::string_view s, int& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}
}  // namespace detail

/// Strict `YYYY-MM-DD`; nullopt on anything else, including impossible dates like 2021-02-30.
inline std::optional<Date> try_parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!detail::parse_digits(s.substr(0, 4), y) || !detail::parse_digits(s.substr(5, 2), m) ||
        !detail::parse_digits(s.substr(8, 2), d))
        return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{std::chrono::sys_days{ymd}};
}

inline Date parse_date(std::string_view s) {
    if (auto d = try_parse_date(s)) return *d;
    throw DataError("invalid date '" + std::string(s) + "' (expected YYYY-MM-DD)");
}

/// Seconds since the Unix epoch at 00:00 UTC of `d`.
inline long long unix_seconds(Date d) {
    return std::chrono::duration_cast<std::chrono::seconds>(d.days().time_since_epoch()).count();
}

}  // namespace pfo
