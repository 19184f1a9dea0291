#include "sbn/datetime.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>

#include "sbn/errors.hpp"

namespace sbn {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[static_cast<std::size_t>(m - 1)];
}

} // namespace

// Howard Hinnant's days_from_civil algorithm.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

namespace {

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

} // namespace

std::int64_t DateTime::to_epoch_hours() const {
    return days_from_civil(year, month, day) * 24 + hour;
}

DateTime DateTime::from_epoch_hours(std::int64_t hours) {
    std::int64_t days = hours / 24;
    std::int64_t h = hours % 24;
    if (h < 0) {
        h += 24;
        days -= 1;
    }
    DateTime dt;
    civil_from_days(days, dt.year, dt.month, dt.day);
    dt.hour = static_cast<int>(h);
    return dt;
}

Weekday DateTime::weekday() const {
    // 1970-01-01 was a Thursday.
    std::int64_t d = days_from_civil(year, month, day);
    return static_cast<Weekday>(((d % 7) + 7 + 3) % 7);
}

std::string DateTime::to_string() const {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00", year, month, day, hour);
    return buf;
}

DateTime DateTime::parse(const std::string& text) {
    DateTime dt;
    int minute = 0, second = 0;
    int n = 0;
    int got = std::sscanf(text.c_str(), "%d-%d-%d%n", &dt.year, &dt.month, &dt.day, &n);
    if (got != 3) throw DataError("unparseable timestamp: '" + text + "'");
    const char* rest = text.c_str() + n;
    if (*rest == 'T' || *rest == ' ') {
        got = std::sscanf(rest + 1, "%d:%d:%d", &dt.hour, &minute, &second);
        if (got < 2) throw DataError("unparseable timestamp: '" + text + "'");
    } else if (*rest != '\0') {
        throw DataError("unparseable timestamp: '" + text + "'");
    }
    if (dt.month < 1 || dt.month > 12 || dt.day < 1 || dt.day > days_in_month(dt.year, dt.month) ||
        dt.hour < 0 || dt.hour > 23 || minute < 0 || minute > 59 || second < 0 || second > 59) {
        throw DataError("timestamp out of range: '" + text + "'");
    }
    return dt;
}

} // namespace sbn
