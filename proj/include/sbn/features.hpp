#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sbn/series.hpp"

namespace sbn {

inline constexpr int kTempWindowHours = 12;

enum class StageKind { weekly, daily, hourly };

int stage_period_hours(StageKind kind);
const char* stage_kind_name(StageKind kind);

/// Inputs of one instant-forecaster instance: standardized temperature
/// history (oldest first), Saturday/Sunday one-hot with weekdays as the
/// zero level, and the hour of day on the unit circle.
struct InstantFeatures {
    std::array<double, kTempWindowHours> temp_window{};
    std::array<double, 2> day_type{};
    std::array<double, 2> hour_enc{};
};

/// (cos, sin) of 2*pi*h/24. Hours 23 and 0 end up as close as 11 and 12,
/// which is the point of the circle encoding.
std::array<double, 2> encode_hour(int hour);

/// Saturday -> (1,0), Sunday -> (0,1), Mon-Fri -> (0,0).
std::array<double, 2> encode_day(Weekday day);

/// z-score statistics for both channels, fitted on training data only.
struct Normalizer {
    double energy_mean = 0.0;
    double energy_std = 1.0;
    double temp_mean = 0.0;
    double temp_std = 1.0;

    /// Fit over valid hours in [first, last]; throws DataError when a
    /// channel is constant there.
    static Normalizer fit(const HourlySeries& series, std::int64_t first, std::int64_t last);

    double std_energy(double kwh) const { return (kwh - energy_mean) / energy_std; }
    double raw_energy(double z) const { return z * energy_std + energy_mean; }
    double std_temp(double c) const { return (c - temp_mean) / temp_std; }
};

/// Features for forecasting hour t, or nullopt when the 12-hour
/// temperature history is missing or invalid. Reads temperature and the
/// calendar only, never energy.
std::optional<InstantFeatures> instant_features(const HourlySeries& series, std::int64_t t,
                                                const Normalizer& norm);

/// The hour indices a booster window reads for target t, oldest first:
/// t - period*j for j = n_inputs..1.
std::vector<std::int64_t> residual_lags(StageKind stage, std::int64_t t, int n_inputs);

} // namespace sbn
