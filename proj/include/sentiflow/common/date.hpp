#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace sentiflow {

// Calendar date backed by std::chrono; serialized as YYYY-MM-DD.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    static Date parse(std::string_view iso);

    std::string to_string() const;
    std::chrono::year_month_day ymd() const { return std::chrono::year_month_day{days_}; }
    std::chrono::sys_days sys_days() const { return days_; }
    bool is_weekend() const;
    Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }

    friend constexpr auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

// UTC instant with second resolution; serialized as YYYY-MM-DDTHH:MM:SSZ.
class Timestamp {
public:
    constexpr Timestamp() = default;
    constexpr explicit Timestamp(std::chrono::sys_seconds t) : t_(t) {}

    // Accepts "YYYY-MM-DDTHH:MM:SSZ", "YYYY-MM-DDTHH:MM:SS" (taken as UTC),
    // "YYYY-MM-DD HH:MM:SS", and the compact "YYYYMMDDTHHMMSS"/"YYYYMMDDTHHMM".
    static Timestamp parse(std::string_view text);

    std::string to_string() const;
    Date date() const;
    int seconds_of_day() const;
    std::chrono::sys_seconds time() const { return t_; }

    friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;

private:
    std::chrono::sys_seconds t_{};
};

}  // namespace sentiflow
