#include "sbn/features.hpp"

#include <cmath>
#include <string>

#include "sbn/errors.hpp"

namespace sbn {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

int stage_period_hours(StageKind kind) {
    switch (kind) {
    case StageKind::weekly: return 168;
    case StageKind::daily: return 24;
    case StageKind::hourly: return 1;
    }
    throw ConfigError("unknown stage kind");
}

const char* stage_kind_name(StageKind kind) {
    switch (kind) {
    case StageKind::weekly: return "weekly";
    case StageKind::daily: return "daily";
    case StageKind::hourly: return "hourly";
    }
    throw ConfigError("unknown stage kind");
}

std::array<double, 2> encode_hour(int hour) {
    if (hour < 0 || hour > 23)
        throw UsageError("encode_hour: hour " + std::to_string(hour) + " outside 0..23");
    const double angle = kTwoPi * static_cast<double>(hour) / 24.0;
    return {std::cos(angle), std::sin(angle)};
}

std::array<double, 2> encode_day(Weekday day) {
    switch (day) {
    case Weekday::saturday: return {1.0, 0.0};
    case Weekday::sunday: return {0.0, 1.0};
    default: return {0.0, 0.0};
    }
}

Normalizer Normalizer::fit(const HourlySeries& series, std::int64_t first, std::int64_t last) {
    if (first > last || !series.in_range(first) || !series.in_range(last))
        throw UsageError("normalizer fit range outside series");
    double se = 0.0, st = 0.0;
    std::int64_t n = 0;
    for (std::int64_t t = first; t <= last; ++t) {
        if (!series.valid[static_cast<std::size_t>(t)]) continue;
        se += series.energy[static_cast<std::size_t>(t)];
        st += series.temperature[static_cast<std::size_t>(t)];
        ++n;
    }
    if (n < 2) throw DataError("normalizer: fewer than 2 valid hours in training range");
    Normalizer norm;
    norm.energy_mean = se / static_cast<double>(n);
    norm.temp_mean = st / static_cast<double>(n);
    double ve = 0.0, vt = 0.0;
    for (std::int64_t t = first; t <= last; ++t) {
        if (!series.valid[static_cast<std::size_t>(t)]) continue;
        const double de = series.energy[static_cast<std::size_t>(t)] - norm.energy_mean;
        const double dt = series.temperature[static_cast<std::size_t>(t)] - norm.temp_mean;
        ve += de * de;
        vt += dt * dt;
    }
    norm.energy_std = std::sqrt(ve / static_cast<double>(n));
    norm.temp_std = std::sqrt(vt / static_cast<double>(n));
    if (norm.energy_std <= 1e-12) throw DataError("normalizer: energy is constant in training range");
    if (norm.temp_std <= 1e-12) throw DataError("normalizer: temperature is constant in training range");
    return norm;
}

std::optional<InstantFeatures> instant_features(const HourlySeries& series, std::int64_t t,
                                                const Normalizer& norm) {
    if (t < kTempWindowHours || t > static_cast<std::int64_t>(series.size())) return std::nullopt;
    InstantFeatures f;
    for (int j = 0; j < kTempWindowHours; ++j) {
        const std::int64_t u = t - kTempWindowHours + j;
        if (!series.valid[static_cast<std::size_t>(u)]) return std::nullopt;
        f.temp_window[static_cast<std::size_t>(j)] =
            norm.std_temp(series.temperature[static_cast<std::size_t>(u)]);
    }
    const DateTime when = series.time_at(t);
    f.day_type = encode_day(when.weekday());
    f.hour_enc = encode_hour(when.hour);
    return f;
}

std::vector<std::int64_t> residual_lags(StageKind stage, std::int64_t t, int n_inputs) {
    if (n_inputs < 1) throw UsageError("residual_lags: n_inputs must be >= 1");
    const std::int64_t period = stage_period_hours(stage);
    std::vector<std::int64_t> lags;
    lags.reserve(static_cast<std::size_t>(n_inputs));
    for (int j = n_inputs; j >= 1; --j) lags.push_back(t - period * j);
    return lags;
}

} // namespace sbn
