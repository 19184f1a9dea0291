// Acceptance suite: one self-contained check per criterion, each printing
// a single PASS/FAIL line. Run with no arguments for all criteria or pass
// criterion numbers to run a subset.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "sbn/archive.hpp"
#include "sbn/evaluator.hpp"
#include "sbn/synth.hpp"
#include "sbn/trainer.hpp"

using namespace sbn;

namespace {

ModelConfig booster_config(bool weekly, bool daily, bool hourly, double dropout = 0.2) {
    ModelConfig cfg;
    cfg.weekly = weekly;
    cfg.daily = daily;
    cfg.hourly = hourly;
    cfg.dropout_rate = dropout;
    return cfg;
}

SbnModel trained_model(const ModelConfig& mc, const HourlySeries& series, std::int64_t train_first,
                       std::int64_t train_last, int epochs, std::uint64_t seed) {
    SbnModel model = make_model(mc);
    initialize_weights(model, Rng(seed));
    model.normalizer = Normalizer::fit(series, train_first, train_last);
    const SampleSet samples = build_samples(series, model, train_first, train_last);
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    train(model, samples, cfg);
    return model;
}

// ---- criterion 1: parameter and layer counts ------------------------------

bool criterion_1(std::string& detail) {
    const struct {
        bool w, d, h;
        std::size_t params;
        int layers;
    } expected[] = {
        {false, false, false, 238, 3}, {true, false, false, 399, 5},
        {false, true, false, 527, 5},  {true, true, false, 624, 7},
        {true, true, true, 1457, 9},
    };
    bool ok = true;
    char buf[160];
    for (const auto& e : expected) {
        const SbnModel model = make_model(booster_config(e.w, e.d, e.h));
        if (model.parameter_count() != e.params || model.layer_count() != e.layers) {
            std::snprintf(buf, sizeof buf, "got %zu params / %d layers, expected %zu / %d; ",
                          model.parameter_count(), model.layer_count(), e.params, e.layers);
            detail += buf;
            ok = false;
        }
    }
    if (ok) detail = "238/399/527/624/1457 parameters, 3/5/5/7/9 layers";
    return ok;
}

// ---- criterion 2: joint-loss gradients vs central finite differences ------

bool criterion_2(std::string& detail) {
    SynthConfig synth;
    synth.n_hours = 1400;
    synth.seed = 42;
    const HourlySeries series = generate_synthetic(synth);

    SbnModel model = make_model(booster_config(true, true, true, 0.0)); // dropout off
    initialize_weights(model, Rng(42));
    model.normalizer = Normalizer::fit(series, 0, 1399);
    const SampleSet samples = build_samples(series, model, 0, 1399);

    Rng pick(7);
    std::vector<std::int64_t> batch;
    for (int i = 0; i < 20; ++i)
        batch.push_back(samples.targets[pick.next_u64() % samples.targets.size()]);
    std::sort(batch.begin(), batch.end());
    batch.erase(std::unique(batch.begin(), batch.end()), batch.end());

    TrainConfig cfg;
    BatchWork work;
    batch_forward(model, samples, batch, cfg, Mode::train, nullptr, true, work);
    ModelGrads grads = ModelGrads::make(model);
    batch_backward(model, samples, batch, cfg, work, grads);
    std::vector<double> analytic;
    grads.flatten(analytic);

    auto params = parameter_view(model);
    const double h = 1e-6;
    double worst = 0.0;
    BatchWork fd;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = *params[i];
        *params[i] = keep + h;
        const double up = batch_forward(model, samples, batch, cfg, Mode::train, nullptr, false, fd);
        *params[i] = keep - h;
        const double dn = batch_forward(model, samples, batch, cfg, Mode::train, nullptr, false, fd);
        *params[i] = keep;
        const double fdg = (up - dn) / (2.0 * h);
        const double denom = std::max({std::abs(fdg), std::abs(analytic[i]), 1e-6});
        worst = std::max(worst, std::abs(fdg - analytic[i]) / denom);
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "max relative gradient error %.3e over %zu parameters",
                  worst, params.size());
    detail = buf;
    return worst < 1e-4;
}

// ---- criterion 3: staged forecasts vs a straight-line pipeline ------------

double oracle_two_layer(const DenseNet& net, const std::vector<double>& x) {
    const DenseLayer& l0 = net.layers[0];
    const DenseLayer& l1 = net.layers[1];
    std::vector<double> hidden(l0.out_dim);
    for (std::size_t i = 0; i < l0.out_dim; ++i) {
        double acc = l0.bias[i];
        for (std::size_t j = 0; j < l0.in_dim; ++j) acc += l0.weights[i * l0.in_dim + j] * x[j];
        hidden[i] = acc > 0.0 ? acc : 0.0;
    }
    double out = l1.bias[0];
    for (std::size_t i = 0; i < l1.in_dim; ++i) out += l1.weights[i] * hidden[i];
    return out;
}

double oracle_instant(const SbnModel& model, const HourlySeries& series, std::int64_t t) {
    double reduced = model.instant.temp_reducer.bias[0];
    for (int j = 0; j < kTempWindowHours; ++j)
        reduced += model.instant.temp_reducer.weights[static_cast<std::size_t>(j)] *
                   model.normalizer.std_temp(series.temperature[static_cast<std::size_t>(t - 12 + j)]);
    const DateTime when = series.time_at(t);
    const auto day = encode_day(when.weekday());
    const auto hour = encode_hour(when.hour);
    return oracle_two_layer(model.instant.head, {reduced, day[0], day[1], hour[0], hour[1]});
}

bool criterion_3(std::string& detail) {
    SynthConfig synth;
    synth.n_hours = 24 * 7 * 5; // five weeks
    synth.seed = 77;
    const HourlySeries series = generate_synthetic(synth);

    // The demonstration setup: a weekly booster reading two weekly lags
    // and a daily booster reading seven daily lags.
    ModelConfig mc = booster_config(true, true, false, 0.0);
    mc.n_weekly = 2;
    mc.n_daily = 7;
    SbnModel model = make_model(mc);
    initialize_weights(model, Rng(13));
    model.normalizer = Normalizer::fit(series, 0, static_cast<std::int64_t>(series.size()) - 1);

    const std::int64_t origin = 780;
    const auto got = forecast(model, series, origin, 24);

    // Straight-line pipeline: instant pass over history, residuals,
    // weekly correction of the last week, then the two subtractions.
    auto r0 = [&](std::int64_t u) {
        return oracle_instant(model, series, u) -
               model.normalizer.std_energy(series.energy[static_cast<std::size_t>(u)]);
    };
    auto weekly_est = [&](std::int64_t u) {
        return oracle_two_layer(model.stages[0].net, {r0(u - 336), r0(u - 168)});
    };
    auto r1 = [&](std::int64_t u) { return r0(u) - weekly_est(u); };

    double worst = 0.0;
    for (int h = 1; h <= 24; ++h) {
        const std::int64_t t = origin + h;
        const double y0 = oracle_instant(model, series, t);
        const double y1 = y0 - weekly_est(t);
        std::vector<double> window;
        for (int j = 7; j >= 1; --j) window.push_back(r1(t - 24 * j));
        const double y2 = y1 - oracle_two_layer(model.stages[1].net, window);

        const auto& out = got[static_cast<std::size_t>(h - 1)];
        worst = std::max(worst, std::abs(out.forecasts[0] - model.normalizer.raw_energy(y0)));
        worst = std::max(worst, std::abs(out.forecasts[1] - model.normalizer.raw_energy(y1)));
        worst = std::max(worst, std::abs(out.forecasts[2] - model.normalizer.raw_energy(y2)));
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "max |staged forecast - pipeline oracle| = %.3e kW", worst);
    detail = buf;
    return worst < 1e-10;
}

// ---- criterion 4: synthetic benchmark ordering ----------------------------

bool criterion_4(std::string& detail) {
    SynthConfig synth;
    synth.n_hours = 3 * 8760;
    synth.seed = 1;
    const HourlySeries series = generate_synthetic(synth);

    const SbnModel model =
        trained_model(booster_config(true, true, true), series, 0, 17519, 50, 1);
    const EvalReport report =
        rolling_evaluate(model, series, 17520, static_cast<std::int64_t>(series.size()) - 1, 24);

    const double instant = report.stage_nrmse_pct.front();
    const double final_stage = report.stage_nrmse_pct.back();
    const double naive = report.baseline_nrmse_pct;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "24h NRMSE: instant %.2f%%, final %.2f%%, seasonal-naive %.2f%%", instant,
                  final_stage, naive);
    detail = buf;
    return final_stage <= 0.8 * instant && final_stage < naive;
}

// ---- criterion 5: adaptation to a permanent weekly-event step -------------

bool criterion_5(std::string& detail) {
    SynthConfig synth;
    synth.n_hours = 30660; // 2 years of training data plus 1.5 evaluation years
    synth.seed = 2;
    synth.oscillation_amplitude_kw = 0.0;
    synth.event_magnitude_kw = 0.0; // pure step: the load appears at the step date
    synth.event_step_change_kw = 10.0;
    synth.event_step_date = DateTime{2015, 3, 1, 0};
    const HourlySeries series = generate_synthetic(synth);

    const SbnModel model =
        trained_model(booster_config(true, false, false), series, 0, 17519, 60, 2);

    const std::int64_t eval_first = 17520;
    const std::int64_t eval_last = static_cast<std::int64_t>(series.size()) - 1;
    PredictionDump dump;
    rolling_evaluate(model, series, eval_first, eval_last, 24, NrmseKind::rmse_over_range, &dump);

    const std::int64_t measure_from = series.index_of(synth.event_step_date) + 21 * 24;
    double instant_abs = 0.0, boosted_abs = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < dump.actual.size(); ++i) {
        const std::int64_t t = dump.first + static_cast<std::int64_t>(i);
        if (t < measure_from) continue;
        const DateTime when = series.time_at(t);
        if (when.weekday() != synth.event_weekday || when.hour != synth.event_hour) continue;
        if (!std::isfinite(dump.stage_pred[1][i])) continue;
        instant_abs += std::abs(dump.stage_pred[0][i] - dump.actual[i]);
        boosted_abs += std::abs(dump.stage_pred[1][i] - dump.actual[i]);
        ++n;
    }
    const double instant_mae = instant_abs / n;
    const double boosted_mae = boosted_abs / n;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "event-hour MAE %d weeks on, %d samples: instant %.2f kW, weekly-boosted %.2f kW",
                  3, n, instant_mae, boosted_mae);
    detail = buf;
    // The uncorrected error is the 10 kW step (plus ambient drift/noise).
    return boosted_mae < 3.0 && instant_mae > 6.0 && instant_mae < 14.0;
}

// ---- criterion 6: data-size robustness -------------------------------------

bool criterion_6(std::string& detail) {
    SynthConfig synth;
    synth.n_hours = 3 * 8760;
    synth.seed = 1;
    const HourlySeries series = generate_synthetic(synth);
    const std::int64_t eval_first = 17520;
    const std::int64_t eval_last = static_cast<std::int64_t>(series.size()) - 1;

    const std::int64_t sizes[] = {4380, 8760, 17520}; // 6 months, 1 year, 2 years
    std::vector<double> finals;
    bool ordering_ok = true;
    std::string parts;
    for (const std::int64_t size : sizes) {
        const SbnModel model = trained_model(booster_config(true, true, true), series,
                                             eval_first - size, eval_first - 1, 50, 1);
        const EvalReport report = rolling_evaluate(model, series, eval_first, eval_last, 24);
        const double instant = report.stage_nrmse_pct.front();
        const double final_stage = report.stage_nrmse_pct.back();
        finals.push_back(final_stage);
        ordering_ok = ordering_ok && final_stage <= 0.8 * instant &&
                      final_stage < report.baseline_nrmse_pct;
        char buf[96];
        std::snprintf(buf, sizeof buf, "%lldh: final %.2f%% vs instant %.2f%%; ",
                      static_cast<long long>(size), final_stage, instant);
        parts += buf;
    }
    const bool graceful = finals.front() <= 3.0 * finals.back();
    detail = parts + (graceful ? "6mo within 3x of 2y" : "6mo exceeds 3x of 2y");
    return ordering_ok && graceful;
}

// ---- criterion 7: horizon invariance of the instant stage ------------------

bool criterion_7(std::string& detail) {
    SynthConfig synth;
    synth.n_hours = 8760;
    synth.seed = 9;
    const HourlySeries series = generate_synthetic(synth);

    const SbnModel model =
        trained_model(booster_config(false, false, false), series, 0, 4379, 5, 9);
    const std::int64_t eval_first = 4392; // midnight-aligned
    const std::int64_t eval_last = eval_first + 24 * 120 - 1;

    const double h24 = rolling_evaluate(model, series, eval_first, eval_last, 24).stage_nrmse_pct[0];
    const double h48 = rolling_evaluate(model, series, eval_first, eval_last, 48).stage_nrmse_pct[0];
    const double h96 = rolling_evaluate(model, series, eval_first, eval_last, 96).stage_nrmse_pct[0];
    char buf[128];
    std::snprintf(buf, sizeof buf, "instant NRMSE %.6f%% / %.6f%% / %.6f%% at 24/48/96 h", h24,
                  h48, h96);
    detail = buf;
    return h24 == h48 && h48 == h96;
}

// ---- criterion 8: determinism and serialization ----------------------------

bool criterion_8(std::string& detail) {
    SynthConfig synth;
    synth.n_hours = 1200;
    synth.seed = 4;
    const HourlySeries series = generate_synthetic(synth);

    const SbnModel a = trained_model(booster_config(true, false, false), series, 0, 1199, 5, 4);
    const SbnModel b = trained_model(booster_config(true, false, false), series, 0, 1199, 5, 4);
    const std::string arch_a = serialize_model(a);
    const std::string arch_b = serialize_model(b);
    if (arch_a != arch_b) {
        detail = "identically seeded trainings produced different archives";
        return false;
    }

    const SbnModel loaded = parse_model(arch_a);
    const auto fa = forecast(a, series, 700, 24);
    const auto fb = forecast(loaded, series, 700, 24);
    for (std::size_t i = 0; i < fa.size(); ++i)
        for (std::size_t s = 0; s < fa[i].forecasts.size(); ++s)
            if (fa[i].forecasts[s] != fb[i].forecasts[s]) {
                detail = "save->load changed a forecast bit";
                return false;
            }
    detail = "identical archives for identical seeds; save->load forecasts bit-identical";
    return true;
}

// ---- criterion 9: schedule and metric units ---------------------------------

bool criterion_9(std::string& detail) {
    TrainConfig cfg;
    const double d = lr_schedule(cfg, 37);
    const double total = std::pow(d, cfg.reference_batches_per_epoch);
    if (std::abs(total - 0.98) > 1e-12) {
        detail = "per-batch decay does not compound to 0.98 per reference epoch";
        return false;
    }

    AdamState state(1, 0.0025, d);
    for (const std::size_t b : {std::size_t{0}, std::size_t{17}, std::size_t{512}}) {
        state.step_count = b;
        if (std::abs(state.effective_lr() - 0.0025 * std::pow(d, static_cast<double>(b))) > 1e-12) {
            detail = "effective lr after b batches deviates from 0.0025*d^b";
            return false;
        }
    }

    const std::vector<double> pred{1.0, 3.0};
    const std::vector<double> actual{0.0, 2.0};
    if (std::abs(nrmse(pred, actual) - 0.5) > 1e-15) {
        detail = "hand-computed 50% NRMSE case failed";
        return false;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "d=%.9f, d^%d=0.98, NRMSE hand case 50%%", d,
                  cfg.reference_batches_per_epoch);
    detail = buf;
    return true;
}

} // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int number;
        const char* name;
        bool (*fn)(std::string&);
    };
    const Criterion criteria[] = {
        {1, "parameter and layer counts", criterion_1},
        {2, "gradient correctness", criterion_2},
        {3, "pipeline oracle equivalence", criterion_3},
        {4, "synthetic benchmark ordering", criterion_4},
        {5, "distribution-shift adaptation", criterion_5},
        {6, "data-size robustness", criterion_6},
        {7, "horizon invariance of the instant stage", criterion_7},
        {8, "determinism and serialization", criterion_8},
        {9, "schedule and metric units", criterion_9},
    };

    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : criteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.number) == wanted.end())
            continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL", c.number, c.name,
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
