#pragma once

#include <cstdint>

#include "sbn/datetime.hpp"
#include "sbn/series.hpp"

namespace sbn {

/// Deterministic synthetic building load. The terms are chosen so each
/// booster has something only it can correct: a slow load drift no
/// calendar/temperature input explains, a weekly event with a permanent
/// step change, and an oscillation whose period does not divide 24.
struct SynthConfig {
    DateTime start{2013, 1, 1, 0};
    std::int64_t n_hours = 8760;

    double base_load_kw = 50.0;
    double heating_slope_kw_per_deg = 2.0;
    double heating_threshold_c = 17.0;
    double office_load_kw = 20.0; // weekdays, hours 08..17

    Weekday event_weekday = Weekday::saturday;
    int event_hour = 10;
    double event_magnitude_kw = 15.0;
    double event_step_change_kw = 10.0;
    DateTime event_step_date{2014, 7, 1, 0};

    double oscillation_period_hours = 5.0;
    double oscillation_amplitude_kw = 5.0;

    /// Ornstein-Uhlenbeck load drift: stationary std and decay time.
    double drift_sigma_kw = 5.0;
    double drift_tau_hours = 8064.0; // 48 weeks

    double noise_sigma_kw = 2.0;

    double temp_mean_c = 5.0;
    double temp_annual_amplitude_c = 12.0;
    double temp_daily_amplitude_c = 4.0;
    double temp_noise_sigma_c = 0.5;

    std::uint64_t seed = 1;
};

HourlySeries generate_synthetic(const SynthConfig& cfg);

} // namespace sbn
