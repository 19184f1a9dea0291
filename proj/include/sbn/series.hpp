#pragma once

#include <cstdint>
#include <vector>

#include "sbn/datetime.hpp"

namespace sbn {

/// Aligned hourly energy/temperature series. Index i corresponds to
/// start + i hours; invalid hours carry NaN payloads and must never
/// reach a model computation.
struct HourlySeries {
    DateTime start;
    std::vector<double> energy;
    std::vector<double> temperature;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return energy.size(); }

    DateTime time_at(std::int64_t t) const { return start.plus_hours(t); }

    /// Signed hour offset of `dt` from the series start; may lie outside
    /// [0, size).
    std::int64_t index_of(const DateTime& dt) const {
        return dt.to_epoch_hours() - start.to_epoch_hours();
    }

    bool in_range(std::int64_t t) const {
        return t >= 0 && t < static_cast<std::int64_t>(size());
    }

    bool is_valid(std::int64_t t) const { return in_range(t) && valid[static_cast<std::size_t>(t)]; }
};

} // namespace sbn
