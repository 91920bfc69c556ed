#include "sentiflow/common/date.hpp"

#include <cctype>
#include <cstdio>

#include "sentiflow/common/error.hpp"

namespace sentiflow {
namespace {

int read_digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) throw FormatError("truncated date/time: '" + std::string(s) + "'");
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i])))
            throw FormatError("bad digit in date/time: '" + std::string(s) + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

std::chrono::sys_days make_days(int y, int m, int d, std::string_view src) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw FormatError("invalid calendar date: '" + std::string(src) + "'");
    return sys_days{ymd};
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day)
    : days_(make_days(year, static_cast<int>(month), static_cast<int>(day), "constructor")) {}

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw FormatError("expected YYYY-MM-DD, got '" + std::string(iso) + "'");
    return Date{make_days(read_digits(iso, 0, 4), read_digits(iso, 5, 2), read_digits(iso, 8, 2), iso)};
}

std::string Date::to_string() const {
    const auto d = ymd();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

bool Date::is_weekend() const {
    const std::chrono::weekday wd{days_};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

Timestamp Timestamp::parse(std::string_view text) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (text.size() >= 13 && text[8] == 'T' && text.find('-') == std::string_view::npos) {
        // Compact form used by some news APIs: 20220310T1530[00]
        y = read_digits(text, 0, 4);
        mo = read_digits(text, 4, 2);
        d = read_digits(text, 6, 2);
        h = read_digits(text, 9, 2);
        mi = read_digits(text, 11, 2);
        if (text.size() >= 15) s = read_digits(text, 13, 2);
    } else {
        if (text.size() < 19 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
            text[13] != ':' || text[16] != ':')
            throw FormatError("unrecognized timestamp: '" + std::string(text) + "'");
        y = read_digits(text, 0, 4);
        mo = read_digits(text, 5, 2);
        d = read_digits(text, 8, 2);
        h = read_digits(text, 11, 2);
        mi = read_digits(text, 14, 2);
        s = read_digits(text, 17, 2);
        auto rest = text.substr(19);
        if (!rest.empty() && rest != "Z" && rest != "+00:00")
            throw FormatError("only UTC timestamps are supported: '" + std::string(text) + "'");
    }
    if (h > 23 || mi > 59 || s > 60) throw FormatError("invalid time of day: '" + std::string(text) + "'");
    const auto day = make_days(y, mo, d, text);
    return Timestamp{sys_seconds{day} + hours{h} + minutes{mi} + seconds{s}};
}

std::string Timestamp::to_string() const {
    const int sod = seconds_of_day();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", date().to_string().c_str(), sod / 3600,
                  (sod / 60) % 60, sod % 60);
    return buf;
}

Date Timestamp::date() const { return Date{std::chrono::floor<std::chrono::days>(t_)}; }

int Timestamp::seconds_of_day() const {
    const auto day = std::chrono::floor<std::chrono::days>(t_);
    return static_cast<int>((t_ - day).count());
}

}  // namespace sentiflow
