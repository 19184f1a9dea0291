#include "sbn/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <vector>

#include "sbn/errors.hpp"

namespace sbn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_field(const std::string& field, std::size_t line_no) {
    if (field.empty()) return kNaN;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end == field.c_str() || *end != '\0')
        throw DataError("line " + std::to_string(line_no) + ": bad number '" + field + "'");
    return v;
}

// Linear fill of NaN runs bounded by finite values and no longer than
// max_gap; returns the number of filled hours.
std::size_t interpolate_gaps(std::vector<double>& values, int max_gap) {
    std::size_t filled = 0;
    const std::size_t n = values.size();
    std::size_t i = 0;
    while (i < n) {
        if (!std::isnan(values[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && std::isnan(values[j])) ++j;
        const std::size_t len = j - i;
        if (i > 0 && j < n && len <= static_cast<std::size_t>(max_gap)) {
            const double lo = values[i - 1];
            const double hi = values[j];
            for (std::size_t k = 0; k < len; ++k)
                values[i + k] = lo + (hi - lo) * static_cast<double>(k + 1) /
                                         static_cast<double>(len + 1);
            filled += len;
        }
        i = j;
    }
    return filled;
}

} // namespace

HourlySeries ingest_csv(const std::string& path, IngestSummary* summary, int max_gap_hours) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "timestamp,energy_kwh,temperature_c")
        throw DataError("'" + path + "': expected header timestamp,energy_kwh,temperature_c");

    struct Row {
        std::int64_t hour;
        double energy;
        double temp;
    };
    std::vector<Row> rows;
    IngestSummary sum;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c2 == std::string::npos)
            throw DataError("line " + std::to_string(line_no) + ": expected 3 fields");
        const std::string ts = line.substr(0, c1);
        const std::string ef = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string tf = line.substr(c2 + 1);

        DateTime dt;
        try {
            dt = DateTime::parse(ts);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        Row row{dt.to_epoch_hours(), parse_field(ef, line_no), parse_field(tf, line_no)};
        if (!rows.empty() && row.hour < rows.back().hour)
            throw DataError("line " + std::to_string(line_no) + ": timestamps go backwards");
        ++sum.rows;

        if (!rows.empty() && row.hour == rows.back().hour) {
            // Daylight-saving fallback: average the repeated hour.
            auto avg = [](double a, double b) {
                if (std::isnan(a)) return b;
                if (std::isnan(b)) return a;
                return 0.5 * (a + b);
            };
            rows.back().energy = avg(rows.back().energy, row.energy);
            rows.back().temp = avg(rows.back().temp, row.temp);
            ++sum.duplicate_hours_averaged;
        } else {
            rows.push_back(row);
        }
    }
    if (rows.empty()) throw DataError("'" + path + "' has no data rows");

    const std::int64_t first = rows.front().hour;
    const std::int64_t last = rows.back().hour;
    const std::size_t n = static_cast<std::size_t>(last - first + 1);

    HourlySeries series;
    series.start = DateTime::from_epoch_hours(first);
    series.energy.assign(n, kNaN);
    series.temperature.assign(n, kNaN);
    series.valid.assign(n, 0);
    for (const auto& row : rows) {
        const std::size_t i = static_cast<std::size_t>(row.hour - first);
        series.energy[i] = row.energy;
        series.temperature[i] = row.temp;
    }

    sum.hours_interpolated += interpolate_gaps(series.energy, max_gap_hours);
    sum.hours_interpolated += interpolate_gaps(series.temperature, max_gap_hours);

    for (std::size_t i = 0; i < n; ++i) {
        const bool ok = std::isfinite(series.energy[i]) && std::isfinite(series.temperature[i]);
        series.valid[i] = ok ? 1 : 0;
        if (!ok) ++sum.hours_invalid;
    }
    if (summary) *summary = sum;
    return series;
}

void write_csv(const HourlySeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "timestamp,energy_kwh,temperature_c\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out << series.time_at(static_cast<std::int64_t>(i)).to_string() << ',';
        if (series.valid[i]) {
            out << format_double(series.energy[i]) << ',' << format_double(series.temperature[i]);
        } else {
            out << ',';
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

} // namespace sbn
