#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sbn/errors.hpp"
#include "sbn/features.hpp"
#include "sbn/rng.hpp"
#include "sbn/synth.hpp"

using namespace sbn;

namespace {

HourlySeries flat_series(std::size_t n, double energy, double temp, DateTime start = {2013, 1, 1, 0}) {
    HourlySeries s;
    s.start = start;
    s.energy.assign(n, energy);
    s.temperature.assign(n, temp);
    s.valid.assign(n, 1);
    return s;
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
    return std::hypot(a[0] - b[0], a[1] - b[1]);
}

} // namespace

TEST_CASE("datetime round trips and knows weekdays") {
    const DateTime dt{2013, 1, 1, 0};
    CHECK(dt.weekday() == Weekday::tuesday);
    CHECK(DateTime{2013, 1, 5, 10}.weekday() == Weekday::saturday);
    CHECK(DateTime{2013, 1, 6, 23}.weekday() == Weekday::sunday);

    const DateTime parsed = DateTime::parse("2014-02-28T13:00:00");
    CHECK(parsed.to_string() == "2014-02-28T13:00:00");
    CHECK(parsed.plus_hours(11).to_string() == "2014-03-01T00:00:00");
    CHECK(DateTime::parse("2016-02-28").plus_hours(24).day == 29);

    CHECK(DateTime::from_epoch_hours(dt.to_epoch_hours()) == dt);
    CHECK_THROWS_AS(DateTime::parse("not a date"), DataError);
    CHECK_THROWS_AS(DateTime::parse("2013-13-01"), DataError);
}

TEST_CASE("hour encoding lands on the unit circle") {
    const auto h0 = encode_hour(0);
    CHECK(h0[0] == doctest::Approx(1.0));
    CHECK(h0[1] == doctest::Approx(0.0));

    const auto h6 = encode_hour(6);
    CHECK(h6[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(h6[1] == doctest::Approx(1.0));

    const auto h12 = encode_hour(12);
    CHECK(h12[0] == doctest::Approx(-1.0));
    CHECK(h12[1] == doctest::Approx(0.0).epsilon(1e-12));

    for (int h = 0; h < 24; ++h) {
        const auto e = encode_hour(h);
        CHECK(std::abs(std::hypot(e[0], e[1]) - 1.0) < 1e-12);
    }
    CHECK_THROWS_AS(encode_hour(24), UsageError);
    CHECK_THROWS_AS(encode_hour(-1), UsageError);
}

TEST_CASE("midnight is as continuous as noon") {
    const double wrap = dist(encode_hour(23), encode_hour(0));
    const double mid = dist(encode_hour(11), encode_hour(12));
    CHECK(std::abs(wrap - mid) < 1e-12);
}

TEST_CASE("day encoding separates saturday, sunday and weekdays") {
    CHECK(encode_day(Weekday::wednesday) == std::array<double, 2>{0.0, 0.0});
    CHECK(encode_day(Weekday::monday) == std::array<double, 2>{0.0, 0.0});
    CHECK(encode_day(Weekday::friday) == std::array<double, 2>{0.0, 0.0});
    CHECK(encode_day(Weekday::saturday) == std::array<double, 2>{1.0, 0.0});
    CHECK(encode_day(Weekday::sunday) == std::array<double, 2>{0.0, 1.0});
}

TEST_CASE("residual lags are oldest-first multiples of the period") {
    CHECK(residual_lags(StageKind::weekly, 1000, 2) == std::vector<std::int64_t>{664, 832});
    CHECK(residual_lags(StageKind::daily, 1000, 7) ==
          std::vector<std::int64_t>{832, 856, 880, 904, 928, 952, 976});
    std::vector<std::int64_t> hourly;
    for (std::int64_t u = 76; u <= 99; ++u) hourly.push_back(u);
    CHECK(residual_lags(StageKind::hourly, 100, 24) == hourly);
    CHECK_THROWS_AS(residual_lags(StageKind::weekly, 10, 0), UsageError);
}

TEST_CASE("residual lags are strictly increasing and before the target") {
    Rng rng(31337);
    for (int i = 0; i < 200; ++i) {
        const auto stage = static_cast<StageKind>(rng.next_u64() % 3);
        const std::int64_t t = static_cast<std::int64_t>(rng.next_u64() % 100000);
        const int n = 1 + static_cast<int>(rng.next_u64() % 30);
        const auto lags = residual_lags(stage, t, n);
        REQUIRE(lags.size() == static_cast<std::size_t>(n));
        for (std::size_t j = 0; j < lags.size(); ++j) {
            CHECK(lags[j] < t);
            if (j > 0) CHECK(lags[j] > lags[j - 1]);
        }
    }
}

TEST_CASE("normalizer round trips and validates") {
    SynthConfig cfg;
    cfg.n_hours = 500;
    const HourlySeries series = generate_synthetic(cfg);
    const Normalizer norm = Normalizer::fit(series, 0, 499);
    CHECK(norm.energy_std > 0.0);
    CHECK(norm.temp_std > 0.0);

    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-500.0, 500.0);
        CHECK(std::abs(norm.raw_energy(norm.std_energy(v)) - v) < 1e-12 * std::max(1.0, std::abs(v)));
    }

    const HourlySeries constant = flat_series(100, 5.0, 5.0);
    CHECK_THROWS_AS(Normalizer::fit(constant, 0, 99), DataError);
}

TEST_CASE("instant features standardize the temperature window") {
    const HourlySeries series = flat_series(100, 10.0, 8.5);
    Normalizer norm;
    norm.temp_mean = 8.5; // window temps sit exactly at the training mean
    norm.temp_std = 3.0;
    const auto f = instant_features(series, 50, norm);
    REQUIRE(f.has_value());
    for (const double v : f->temp_window) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("instant features encode the target hour's calendar") {
    // 2013-01-05 is a Saturday.
    HourlySeries series = flat_series(24 * 10, 10.0, 5.0, DateTime{2013, 1, 1, 0});
    for (std::size_t i = 0; i < series.size(); ++i)
        series.energy[i] += static_cast<double>(i % 7);
    series.temperature[3] = 6.0;
    const Normalizer norm = Normalizer::fit(series, 0, 239);

    const std::int64_t t = series.index_of(DateTime{2013, 1, 5, 0});
    const auto f = instant_features(series, t, norm);
    REQUIRE(f.has_value());
    CHECK(f->day_type == std::array<double, 2>{1.0, 0.0});
    CHECK(f->hour_enc[0] == doctest::Approx(1.0));
    CHECK(f->hour_enc[1] == doctest::Approx(0.0));
}

TEST_CASE("instant features demand 12 valid preceding hours") {
    HourlySeries series = flat_series(60, 10.0, 5.0);
    Normalizer norm;
    norm.temp_mean = 5.0;
    norm.temp_std = 1.0;

    CHECK(instant_features(series, 12, norm).has_value());
    CHECK_FALSE(instant_features(series, 11, norm).has_value());

    series.valid[30] = 0;
    for (std::int64_t t = 31; t <= 42; ++t) CHECK_FALSE(instant_features(series, t, norm).has_value());
    CHECK(instant_features(series, 43, norm).has_value());
}

TEST_CASE("instant features never read the energy channel") {
    HourlySeries a = flat_series(60, 10.0, 5.0);
    a.temperature[10] = 7.0;
    a.energy[5] = 13.0;
    HourlySeries b = a;
    for (auto& e : b.energy) e = std::numeric_limits<double>::quiet_NaN();

    Normalizer norm; // identity-ish stats, set by hand to avoid fitting b
    norm.temp_mean = 5.0;
    norm.temp_std = 2.0;
    const auto fa = instant_features(a, 30, norm);
    const auto fb = instant_features(b, 30, norm);
    REQUIRE(fa.has_value());
    REQUIRE(fb.has_value());
    CHECK(fa->temp_window == fb->temp_window);
    CHECK(fa->day_type == fb->day_type);
    CHECK(fa->hour_enc == fb->hour_enc);
}
