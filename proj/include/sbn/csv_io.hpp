#pragma once

#include <string>

#include "sbn/series.hpp"

namespace sbn {

struct IngestSummary {
    std::size_t rows = 0;
    std::size_t duplicate_hours_averaged = 0;
    std::size_t hours_interpolated = 0;
    std::size_t hours_invalid = 0;
};

/// Reads `timestamp,energy_kwh,temperature_c` rows onto a strict hourly
/// grid. Sub-hour timestamps snap down to the hour; repeated hours
/// (daylight-saving fallback) are averaged; per-channel gaps of at most
/// `max_gap_hours` are filled linearly and longer ones left invalid.
HourlySeries ingest_csv(const std::string& path, IngestSummary* summary = nullptr,
                        int max_gap_hours = 6);

/// Writes the same schema with round-trippable numbers; invalid hours
/// become empty fields.
void write_csv(const HourlySeries& series, const std::string& path);

} // namespace sbn
