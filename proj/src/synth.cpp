#include "sbn/synth.hpp"

#include <cmath>

#include "sbn/errors.hpp"
#include "sbn/rng.hpp"

namespace sbn {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kHoursPerYear = 8766.0; // 365.25 days
} // namespace

HourlySeries generate_synthetic(const SynthConfig& cfg) {
    if (cfg.n_hours <= 0) throw UsageError("synthetic series needs n_hours >= 1");

    HourlySeries series;
    series.start = cfg.start;
    const std::size_t n = static_cast<std::size_t>(cfg.n_hours);
    series.energy.resize(n);
    series.temperature.resize(n);
    series.valid.assign(n, 1);

    Rng master(cfg.seed);
    Rng temp_noise = master.substream(10);
    Rng drift_noise = master.substream(11);
    Rng load_noise = master.substream(12);

    // Phase anchor: coldest hour of the seasonal cycle.
    const std::int64_t cold_anchor = DateTime{2013, 2, 1, 0}.to_epoch_hours();
    const std::int64_t start_hours = cfg.start.to_epoch_hours();
    const std::int64_t step_hours = cfg.event_step_date.to_epoch_hours();

    const bool drifting = cfg.drift_sigma_kw > 0.0 && cfg.drift_tau_hours > 0.0;
    const double rho = drifting ? std::exp(-1.0 / cfg.drift_tau_hours) : 0.0;
    const double drift_eps = drifting ? cfg.drift_sigma_kw * std::sqrt(1.0 - rho * rho) : 0.0;
    double drift = drifting ? cfg.drift_sigma_kw * drift_noise.normal() : 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t abs_hour = start_hours + static_cast<std::int64_t>(i);
        const DateTime when = series.start.plus_hours(static_cast<std::int64_t>(i));

        const double seasonal = std::cos(kTwoPi * static_cast<double>(abs_hour - cold_anchor) /
                                         kHoursPerYear);
        const double diurnal = std::cos(kTwoPi * static_cast<double>(when.hour - 15) / 24.0);
        const double temp = cfg.temp_mean_c - cfg.temp_annual_amplitude_c * seasonal -
                            cfg.temp_daily_amplitude_c * diurnal +
                            cfg.temp_noise_sigma_c * temp_noise.normal();

        double load = cfg.base_load_kw;
        load += cfg.heating_slope_kw_per_deg * std::max(0.0, cfg.heating_threshold_c - temp);

        const Weekday wd = when.weekday();
        const bool weekday = wd != Weekday::saturday && wd != Weekday::sunday;
        if (weekday && when.hour >= 8 && when.hour <= 17) load += cfg.office_load_kw;

        if (wd == cfg.event_weekday && when.hour == cfg.event_hour) {
            load += cfg.event_magnitude_kw;
            if (abs_hour >= step_hours) load += cfg.event_step_change_kw;
        }

        if (cfg.oscillation_amplitude_kw != 0.0 && cfg.oscillation_period_hours > 0.0)
            load += cfg.oscillation_amplitude_kw *
                    std::sin(kTwoPi * static_cast<double>(abs_hour) / cfg.oscillation_period_hours);

        if (drifting) {
            load += drift;
            drift = rho * drift + drift_eps * drift_noise.normal();
        }

        load += cfg.noise_sigma_kw * load_noise.normal();

        series.temperature[i] = temp;
        series.energy[i] = load;
    }
    return series;
}

} // namespace sbn
