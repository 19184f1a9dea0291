#pragma once

#include <cstdint>
#include <string>

namespace sbn {

enum class Weekday { monday = 0, tuesday, wednesday, thursday, friday, saturday, sunday };

/// Naive local calendar time at whole-hour resolution. Stored as civil
/// fields; arithmetic goes through hours-since-1970-01-01T00:00.
struct DateTime {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;  // 0..23

    std::int64_t to_epoch_hours() const;
    static DateTime from_epoch_hours(std::int64_t hours);

    Weekday weekday() const;

    DateTime plus_hours(std::int64_t h) const { return from_epoch_hours(to_epoch_hours() + h); }

    /// "YYYY-MM-DDTHH:MM:SS"
    std::string to_string() const;

    /// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS]" and the
    /// space-separated variant. Throws DataError on anything else.
    static DateTime parse(const std::string& text);

    bool operator==(const DateTime&) const = default;
};

/// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int year, int month, int day);

} // namespace sbn
