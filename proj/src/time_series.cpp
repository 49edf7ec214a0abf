#include "vmgcn/time_series.hpp"

#include <charconv>
#include <cstdio>

#include "vmgcn/errors.hpp"

namespace vmgcn {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

bool parse_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && p == s.data() + pos + len;
}

}  // namespace

double time_of_day(Timestamp t) {
    const std::int64_t secs = t.time_since_epoch().count();
    const std::int64_t in_day = secs - floor_div(secs, kSecondsPerDay) * kSecondsPerDay;
    return static_cast<double>(in_day) / static_cast<double>(kSecondsPerDay);
}

int day_of_week(Timestamp t) {
    // 1970-01-01 was a Thursday (Monday-based index 3).
    const std::int64_t days = floor_div(t.time_since_epoch().count(), kSecondsPerDay);
    std::int64_t dow = (days + 3) % 7;
    if (dow < 0) dow += 7;
    return static_cast<int>(dow);
}

Timestamp parse_timestamp(const std::string& text) {
    std::string s = text;
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == 'Z')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());

    if (!s.empty() && s.find('-', 1) == std::string::npos) {
        std::int64_t epoch = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), epoch);
        if (ec == std::errc() && p == s.data() + s.size()) return Timestamp{std::chrono::seconds(epoch)};
        throw InvalidInput("unparseable timestamp '" + text + "'");
    }

    int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
    const bool date_ok = s.size() >= 10 && parse_int(s, 0, 4, year) && s[4] == '-' &&
                         parse_int(s, 5, 2, month) && s[7] == '-' && parse_int(s, 8, 2, day);
    bool time_ok = true;
    if (date_ok && s.size() > 10) {
        time_ok = (s[10] == ' ' || s[10] == 'T') && s.size() >= 16 && parse_int(s, 11, 2, hour) &&
                  s[13] == ':' && parse_int(s, 14, 2, minute);
        if (time_ok && s.size() > 16) {
            time_ok = s.size() == 19 && s[16] == ':' && parse_int(s, 17, 2, second);
        }
    }
    if (!date_ok || !time_ok) throw InvalidInput("unparseable timestamp '" + text + "'");

    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) {
        throw InvalidInput("invalid calendar timestamp '" + text + "'");
    }
    return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto days = floor<std::chrono::days>(t);
    const year_month_day ymd{days};
    const auto rem = t - days;
    const auto h = duration_cast<hours>(rem);
    const auto m = duration_cast<minutes>(rem - h);
    const auto s = rem - h - m;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(h.count()), static_cast<int>(m.count()),
                  static_cast<int>(s.count()));
    return buf;
}

}  // namespace vmgcn
