#include "sbn/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "sbn/errors.hpp"

namespace sbn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::array<double, 5> head_input(const InstantFeatures& f, double reduced_temp) {
    return {reduced_temp, f.day_type[0], f.day_type[1], f.hour_enc[0], f.hour_enc[1]};
}

DenseNet two_layer_net(std::size_t in, double dropout) {
    DenseNet net;
    net.layers.emplace_back(in, kHiddenUnits, Activation::relu, dropout);
    net.layers.emplace_back(kHiddenUnits, 1, Activation::linear, 0.0);
    return net;
}

} // namespace

double instant_forward(const InstantForecaster& instant, const InstantFeatures& features,
                       Mode mode, Rng* dropout_rng, InstantCache& cache) {
    layer_forward(instant.temp_reducer, features.temp_window, mode, dropout_rng, cache.reducer);
    const auto hin = head_input(features, cache.reducer.act[0]);
    instant.head.forward(hin, mode, dropout_rng, cache.head);
    return cache.head.output()[0];
}

double instant_forward(const InstantForecaster& instant, const InstantFeatures& features,
                       Mode mode, Rng* dropout_rng) {
    InstantCache cache;
    return instant_forward(instant, features, mode, dropout_rng, cache);
}

void instant_backward(const InstantForecaster& instant, const InstantCache& cache, double dy,
                      InstantGrads& grads) {
    const double dys[1] = {dy};
    std::vector<double> dhead;
    instant.head.backward(cache.head, dys, grads.head, &dhead);
    const double dreduced[1] = {dhead[0]};
    layer_backward(instant.temp_reducer, cache.reducer, dreduced, grads.reducer, nullptr);
}

double stage_forward(const BoosterStage& stage, std::span<const double> residual_window,
                     Mode mode, Rng* dropout_rng) {
    return stage.net.forward(residual_window, mode, dropout_rng)[0];
}

ModelConfig ModelConfig::from_booster_names(const std::vector<std::string>& names,
                                            double dropout_rate) {
    ModelConfig cfg;
    cfg.dropout_rate = dropout_rate;
    for (const auto& name : names) {
        if (name == "weekly") cfg.weekly = true;
        else if (name == "daily") cfg.daily = true;
        else if (name == "hourly") cfg.hourly = true;
        else if (name == "none" && names.size() == 1) return cfg;
        else throw UsageError("unknown booster '" + name + "' (expected weekly|daily|hourly|none)");
    }
    return cfg;
}

std::size_t SbnModel::parameter_count() const {
    std::size_t n = instant.parameter_count();
    for (const auto& s : stages) n += s.parameter_count();
    return n;
}

std::int64_t SbnModel::residual_depth_hours() const {
    std::int64_t depth = 0;
    for (const auto& s : stages) depth += static_cast<std::int64_t>(s.period_hours()) * s.n_inputs;
    return depth;
}

SbnModel make_model(const ModelConfig& config) {
    const int boosters = (config.weekly ? 1 : 0) + (config.daily ? 1 : 0) + (config.hourly ? 1 : 0);
    const bool stacked = boosters >= 2;

    SbnModel model;
    model.instant.temp_reducer = DenseLayer(kTempWindowHours, 1, Activation::linear, 0.0);
    model.instant.head = two_layer_net(5, config.dropout_rate);

    auto add_stage = [&](StageKind kind, int n_override, int standalone_n, int stacked_n) {
        BoosterStage stage;
        stage.kind = kind;
        stage.n_inputs = n_override > 0 ? n_override : (stacked ? stacked_n : standalone_n);
        stage.net = two_layer_net(static_cast<std::size_t>(stage.n_inputs), config.dropout_rate);
        model.stages.push_back(std::move(stage));
    };
    if (config.weekly) add_stage(StageKind::weekly, config.n_weekly, 3, 2);
    if (config.daily) add_stage(StageKind::daily, config.n_daily, 7, 6);
    if (config.hourly) add_stage(StageKind::hourly, config.n_hourly, 24, 24);
    return model;
}

void initialize_weights(SbnModel& model, const Rng& rng) {
    Rng init = rng.substream(1);
    visit_layers(model, [&](DenseLayer& layer) { init_glorot(layer, init); });
}

void visit_layers(SbnModel& model, const std::function<void(DenseLayer&)>& fn) {
    fn(model.instant.temp_reducer);
    for (auto& l : model.instant.head.layers) fn(l);
    for (auto& s : model.stages)
        for (auto& l : s.net.layers) fn(l);
}

void visit_layers(const SbnModel& model, const std::function<void(const DenseLayer&)>& fn) {
    fn(model.instant.temp_reducer);
    for (const auto& l : model.instant.head.layers) fn(l);
    for (const auto& s : model.stages)
        for (const auto& l : s.net.layers) fn(l);
}

std::vector<double*> parameter_view(SbnModel& model) {
    std::vector<double*> view;
    view.reserve(model.parameter_count());
    visit_layers(model, [&](DenseLayer& layer) {
        for (auto& w : layer.weights) view.push_back(&w);
        for (auto& b : layer.bias) view.push_back(&b);
    });
    return view;
}

ModelGrads ModelGrads::make(const SbnModel& model) {
    ModelGrads g;
    g.instant.reducer.weights.assign(model.instant.temp_reducer.weights.size(), 0.0);
    g.instant.reducer.bias.assign(model.instant.temp_reducer.bias.size(), 0.0);
    g.instant.head = model.instant.head.make_grads();
    g.stages.reserve(model.stages.size());
    for (const auto& s : model.stages) g.stages.push_back(s.net.make_grads());
    return g;
}

void ModelGrads::zero() {
    std::fill(instant.reducer.weights.begin(), instant.reducer.weights.end(), 0.0);
    std::fill(instant.reducer.bias.begin(), instant.reducer.bias.end(), 0.0);
    instant.head.zero();
    for (auto& s : stages) s.zero();
}

void ModelGrads::flatten(std::vector<double>& out) const {
    out.clear();
    auto append = [&](const LayerGrads& g) {
        out.insert(out.end(), g.weights.begin(), g.weights.end());
        out.insert(out.end(), g.bias.begin(), g.bias.end());
    };
    append(instant.reducer);
    for (const auto& g : instant.head.layers) append(g);
    for (const auto& s : stages)
        for (const auto& g : s.layers) append(g);
}

FeasibilityMap compute_feasibility(const SbnModel& model, const HourlySeries& series) {
    const std::int64_t n = static_cast<std::int64_t>(series.size());
    FeasibilityMap map;
    map.feasible.resize(model.stages.size() + 1);

    auto& base = map.feasible[0];
    base.assign(static_cast<std::size_t>(n), 0);
    // Run of valid hours ending at t-1 must cover the temperature window.
    std::int64_t run = 0;
    for (std::int64_t t = 0; t < n; ++t) {
        if (series.valid[static_cast<std::size_t>(t)] && run >= kTempWindowHours)
            base[static_cast<std::size_t>(t)] = 1;
        run = series.valid[static_cast<std::size_t>(t)] ? run + 1 : 0;
    }

    for (std::size_t s = 0; s < model.stages.size(); ++s) {
        const auto& prev = map.feasible[s];
        auto& cur = map.feasible[s + 1];
        cur.assign(static_cast<std::size_t>(n), 0);
        const std::int64_t period = model.stages[s].period_hours();
        const int n_inputs = model.stages[s].n_inputs;
        for (std::int64_t t = 0; t < n; ++t) {
            if (!prev[static_cast<std::size_t>(t)]) continue;
            bool ok = true;
            for (int j = 1; j <= n_inputs && ok; ++j) {
                const std::int64_t u = t - period * j;
                ok = u >= 0 && prev[static_cast<std::size_t>(u)];
            }
            cur[static_cast<std::size_t>(t)] = ok ? 1 : 0;
        }
    }
    return map;
}

std::int64_t first_feasible_target(const SbnModel& model, const HourlySeries& series) {
    const FeasibilityMap map = compute_feasibility(model, series);
    const auto& top = map.feasible.back();
    for (std::size_t t = 0; t < top.size(); ++t)
        if (top[t]) return static_cast<std::int64_t>(t);
    return -1;
}

ResidualTable compute_residuals(const SbnModel& model, const HourlySeries& series,
                                std::int64_t upto_hour) {
    const std::int64_t n =
        std::min<std::int64_t>(upto_hour + 1, static_cast<std::int64_t>(series.size()));
    const FeasibilityMap feas = compute_feasibility(model, series);

    ResidualTable table;
    table.r.assign(model.stages.size() + 1,
                   std::vector<double>(static_cast<std::size_t>(std::max<std::int64_t>(n, 0)), kNaN));

    for (std::int64_t t = 0; t < n; ++t) {
        if (!feas.feasible[0][static_cast<std::size_t>(t)]) continue;
        const auto f = instant_features(series, t, model.normalizer);
        const double y0 = instant_forward(model.instant, *f);
        table.r[0][static_cast<std::size_t>(t)] =
            y0 - model.normalizer.std_energy(series.energy[static_cast<std::size_t>(t)]);
    }

    std::vector<double> window;
    for (std::size_t s = 0; s < model.stages.size(); ++s) {
        const auto& stage = model.stages[s];
        const std::int64_t period = stage.period_hours();
        window.resize(static_cast<std::size_t>(stage.n_inputs));
        for (std::int64_t t = 0; t < n; ++t) {
            if (!feas.feasible[s + 1][static_cast<std::size_t>(t)]) continue;
            for (int j = stage.n_inputs; j >= 1; --j)
                window[static_cast<std::size_t>(stage.n_inputs - j)] =
                    table.r[s][static_cast<std::size_t>(t - period * j)];
            const double est = stage_forward(stage, window);
            table.r[s + 1][static_cast<std::size_t>(t)] =
                table.r[s][static_cast<std::size_t>(t)] - est;
        }
    }
    return table;
}

std::vector<double> historical_residuals(const SbnModel& model, const HourlySeries& series,
                                         std::span<const std::int64_t> hours, int upto_stage) {
    if (upto_stage < 0 || upto_stage > static_cast<int>(model.stages.size()))
        throw UsageError("historical_residuals: upto_stage outside 0..n_stages");
    std::int64_t upto = -1;
    for (auto h : hours) upto = std::max(upto, h);
    const ResidualTable table = compute_residuals(model, series, upto);
    std::vector<double> out;
    out.reserve(hours.size());
    for (auto h : hours) {
        const bool known = h >= 0 && h < static_cast<std::int64_t>(table.r[0].size());
        out.push_back(known ? table.r[static_cast<std::size_t>(upto_stage)][static_cast<std::size_t>(h)]
                            : kNaN);
    }
    return out;
}

std::vector<StageOutputs> forecast_with_table(const SbnModel& model, const HourlySeries& series,
                                              const ResidualTable& table, std::int64_t origin,
                                              int horizon) {
    if (horizon < 1) throw UsageError("forecast horizon must be >= 1");
    if (origin < 0 || origin + horizon > static_cast<std::int64_t>(series.size()))
        throw UsageError("forecast window extends past the series");

    const std::size_t n_stages = model.stages.size();
    std::vector<StageOutputs> out;
    out.reserve(static_cast<std::size_t>(horizon));
    // Model residual estimates for rolled-out hours, per level 0..S-1.
    std::vector<std::vector<double>> rollout(n_stages,
                                             std::vector<double>(static_cast<std::size_t>(horizon), kNaN));

    std::vector<double> y(n_stages + 1, kNaN);
    std::vector<double> window;
    for (int h = 1; h <= horizon; ++h) {
        const std::int64_t t = origin + h;
        StageOutputs so;
        so.hour = t;
        so.forecasts.assign(n_stages + 1, kNaN);
        so.corrections.assign(n_stages, kNaN);

        const auto f = instant_features(series, t, model.normalizer);
        if (f) {
            y.assign(n_stages + 1, kNaN);
            y[0] = instant_forward(model.instant, *f);
            for (std::size_t s = 0; s < n_stages; ++s) {
                const auto& stage = model.stages[s];
                const std::int64_t period = stage.period_hours();
                window.resize(static_cast<std::size_t>(stage.n_inputs));
                bool finite = std::isfinite(y[s]);
                for (int j = stage.n_inputs; j >= 1 && finite; --j) {
                    const std::int64_t u = t - period * j;
                    double v;
                    if (u <= origin)
                        v = u >= 0 && u < static_cast<std::int64_t>(table.r[s].size())
                                ? table.r[s][static_cast<std::size_t>(u)]
                                : kNaN;
                    else
                        v = rollout[s][static_cast<std::size_t>(u - origin - 1)];
                    window[static_cast<std::size_t>(stage.n_inputs - j)] = v;
                    finite = std::isfinite(v);
                }
                double est = kNaN;
                if (finite) est = stage_forward(stage, window);
                y[s + 1] = y[s] - est;
                so.corrections[s] = est * model.normalizer.energy_std;
            }
            for (std::size_t s = 0; s < n_stages; ++s)
                rollout[s][static_cast<std::size_t>(h - 1)] = y[s] - y[n_stages];
            for (std::size_t s = 0; s <= n_stages; ++s)
                so.forecasts[s] = model.normalizer.raw_energy(y[s]);
        }
        out.push_back(std::move(so));
    }
    return out;
}

std::vector<StageOutputs> forecast(const SbnModel& model, const HourlySeries& series,
                                   std::int64_t origin, int horizon) {
    const std::int64_t first_target = first_feasible_target(model, series);
    if (first_target < 0)
        throw UsageError("series too short for this model; no feasible forecast origin exists");
    if (origin < first_target - 1)
        throw UsageError("insufficient history before origin; earliest feasible origin is " +
                         series.time_at(first_target - 1).to_string());
    const ResidualTable table = compute_residuals(model, series, origin);
    return forecast_with_table(model, series, table, origin, horizon);
}

std::vector<std::vector<std::int64_t>> needed_hours_by_level(const SbnModel& model,
                                                             std::span<const std::int64_t> targets) {
    const std::size_t n_stages = model.stages.size();
    std::vector<std::vector<std::int64_t>> levels(n_stages + 1);
    levels[n_stages].assign(targets.begin(), targets.end());
    std::sort(levels[n_stages].begin(), levels[n_stages].end());
    levels[n_stages].erase(std::unique(levels[n_stages].begin(), levels[n_stages].end()),
                           levels[n_stages].end());

    for (std::size_t s = n_stages; s-- > 0;) {
        const auto& stage = model.stages[s];
        const std::int64_t period = stage.period_hours();
        auto& cur = levels[s];
        cur = levels[s + 1];
        for (const std::int64_t t : levels[s + 1])
            for (int j = 1; j <= stage.n_inputs; ++j) cur.push_back(t - period * j);
        std::sort(cur.begin(), cur.end());
        cur.erase(std::unique(cur.begin(), cur.end()), cur.end());
    }
    return levels;
}

StageOutputs joint_outputs(const SbnModel& model, const HourlySeries& series, std::int64_t target,
                           Mode mode, Rng* dropout_rng) {
    const std::size_t n_stages = model.stages.size();
    const std::int64_t targets[1] = {target};
    const auto levels = needed_hours_by_level(model, targets);

    std::vector<std::unordered_map<std::int64_t, double>> r(n_stages + 1);
    for (const std::int64_t u : levels[0]) {
        const auto f = instant_features(series, u, model.normalizer);
        if (!f || !series.is_valid(u))
            throw UsageError("joint_outputs: hour " + series.time_at(u).to_string() +
                             " lacks features or actuals");
        InstantCache cache;
        const double y0 = instant_forward(model.instant, *f, mode, dropout_rng, cache);
        r[0][u] = y0 - model.normalizer.std_energy(series.energy[static_cast<std::size_t>(u)]);
    }

    StageOutputs out;
    out.hour = target;
    out.corrections.assign(n_stages, 0.0);
    std::vector<double> window;
    for (std::size_t s = 0; s < n_stages; ++s) {
        const auto& stage = model.stages[s];
        const std::int64_t period = stage.period_hours();
        window.resize(static_cast<std::size_t>(stage.n_inputs));
        for (const std::int64_t u : levels[s + 1]) {
            for (int j = stage.n_inputs; j >= 1; --j)
                window[static_cast<std::size_t>(stage.n_inputs - j)] = r[s].at(u - period * j);
            const double est = stage_forward(stage, window, mode, dropout_rng);
            r[s + 1][u] = r[s].at(u) - est;
            if (u == target) out.corrections[s] = est * model.normalizer.energy_std;
        }
    }

    const double actual_std = model.normalizer.std_energy(series.energy[static_cast<std::size_t>(target)]);
    out.forecasts.resize(n_stages + 1);
    for (std::size_t s = 0; s <= n_stages; ++s)
        out.forecasts[s] = model.normalizer.raw_energy(r[s].at(target) + actual_std);
    return out;
}

} // namespace sbn
