#pragma once

#include <cstdint>
#include <string>

namespace bandcast {

// UTC civil-time helpers on top of std::chrono's proleptic Gregorian
// calendar. All timestamps in the toolkit are UTC seconds since the epoch.

int64_t utc_seconds(int year, int month, int day, int hour = 0, int minute = 0, int second = 0);

// Adds calendar months; a day-of-month overflow clamps to the month's last day.
int64_t add_months(int64_t ts, int months);

// Year of the civil date containing ts.
int year_of(int64_t ts);

// Number of whole calendar months between epoch and ts, i.e. the largest m
// with add_months(epoch, m) <= ts. Requires ts >= epoch.
int month_index(int64_t ts, int64_t epoch);

// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SSZ".
int64_t parse_iso8601(const std::string& text);

std::string format_iso8601(int64_t ts);

}  // namespace bandcast
