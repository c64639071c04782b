#include "bandcast/timeutil.hpp"

#include <chrono>
#include <cstdio>

#include "bandcast/errors.hpp"

namespace bandcast {

namespace {

using days_t = std::chrono::sys_days;

std::chrono::year_month_day to_ymd(int64_t ts) {
    const auto dp = std::chrono::floor<std::chrono::days>(
        std::chrono::sys_seconds{std::chrono::seconds{ts}});
    return std::chrono::year_month_day{days_t{dp}};
}

}  // namespace

int64_t utc_seconds(int year, int month, int day, int hour, int minute, int second) {
    const std::chrono::year_month_day ymd{std::chrono::year{year},
                                          std::chrono::month{static_cast<unsigned>(month)},
                                          std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok()) throw ConfigError("invalid civil date");
    const auto dp = days_t{ymd};
    return std::chrono::duration_cast<std::chrono::seconds>(dp.time_since_epoch()).count() +
           hour * 3600 + minute * 60 + second;
}

int64_t add_months(int64_t ts, int months) {
    const auto dp = std::chrono::floor<std::chrono::days>(
        std::chrono::sys_seconds{std::chrono::seconds{ts}});
    const int64_t tod = ts - std::chrono::duration_cast<std::chrono::seconds>(
                                 dp.time_since_epoch())
                                 .count();
    auto ymd = std::chrono::year_month_day{days_t{dp}};
    auto ym = ymd.year() / ymd.month() + std::chrono::months{months};
    auto shifted = ym / ymd.day();
    if (!shifted.ok()) shifted = ym / std::chrono::last;  // clamp to month end
    const auto out = days_t{shifted};
    return std::chrono::duration_cast<std::chrono::seconds>(out.time_since_epoch()).count() + tod;
}

int year_of(int64_t ts) { return static_cast<int>(to_ymd(ts).year()); }

int month_index(int64_t ts, int64_t epoch) {
    if (ts < epoch) throw ConfigError("timestamp precedes epoch");
    const auto a = to_ymd(epoch);
    const auto b = to_ymd(ts);
    // Civil-month difference is within one step of the answer; fix up against
    // the day-of-month and time-of-day.
    int m = (static_cast<int>(b.year()) - static_cast<int>(a.year())) * 12 +
            (static_cast<int>(static_cast<unsigned>(b.month())) -
             static_cast<int>(static_cast<unsigned>(a.month())));
    while (m > 0 && add_months(epoch, m) > ts) --m;
    while (add_months(epoch, m + 1) <= ts) ++m;
    return m;
}

int64_t parse_iso8601(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s) >= 3) {
        return utc_seconds(y, mo, d, h, mi, s);
    }
    throw ConfigError("unparseable ISO-8601 timestamp: " + text);
}

std::string format_iso8601(int64_t ts) {
    const auto ymd = to_ymd(ts);
    const auto dp = std::chrono::floor<std::chrono::days>(
        std::chrono::sys_seconds{std::chrono::seconds{ts}});
    int64_t tod = ts - std::chrono::duration_cast<std::chrono::seconds>(dp.time_since_epoch()).count();
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(tod / 3600),
                  static_cast<int>((tod % 3600) / 60), static_cast<int>(tod % 60));
    return buf;
}

}  // namespace bandcast
