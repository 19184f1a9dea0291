#include "sbn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sbn/errors.hpp"

namespace sbn {

namespace {

std::size_t index_of_hour(const std::vector<std::int64_t>& level, std::int64_t hour) {
    const auto it = std::lower_bound(level.begin(), level.end(), hour);
    if (it == level.end() || *it != hour)
        throw ConfigError("batch graph: hour missing from level set");
    return static_cast<std::size_t>(it - level.begin());
}

double output_weight(const TrainConfig& cfg, std::size_t output, std::size_t last_output) {
    return output == last_output ? cfg.loss_weight_final : cfg.loss_weight_earlier;
}

} // namespace

TrainMode train_mode_from_name(const std::string& name) {
    if (name == "joint_weighted") return TrainMode::joint_weighted;
    if (name == "final_only") return TrainMode::final_only;
    if (name == "staged_frozen") return TrainMode::staged_frozen;
    if (name == "staged_unfrozen") return TrainMode::staged_unfrozen;
    throw UsageError("unknown training mode '" + name + "'");
}

const char* train_mode_name(TrainMode mode) {
    switch (mode) {
    case TrainMode::joint_weighted: return "joint_weighted";
    case TrainMode::final_only: return "final_only";
    case TrainMode::staged_frozen: return "staged_frozen";
    case TrainMode::staged_unfrozen: return "staged_unfrozen";
    }
    return "?";
}

double lr_schedule(const TrainConfig& cfg, int dataset_batches_per_epoch) {
    if (dataset_batches_per_epoch < 1 || cfg.reference_batches_per_epoch < 1)
        throw UsageError("lr_schedule: batches per epoch must be >= 1");
    if (cfg.reference_epoch_decay <= 0.0 || cfg.reference_epoch_decay > 1.0)
        throw UsageError("lr_schedule: reference decay must be in (0,1]");
    return std::pow(cfg.reference_epoch_decay,
                    1.0 / static_cast<double>(cfg.reference_batches_per_epoch));
}

SampleSet build_samples(const HourlySeries& series, const SbnModel& model, std::int64_t first,
                        std::int64_t last) {
    if (first > last || !series.in_range(first) || !series.in_range(last))
        throw UsageError("build_samples: target range outside series");

    const FeasibilityMap feas = compute_feasibility(model, series);
    SampleSet set;
    set.first_feasible = first_feasible_target(model, series);
    for (std::int64_t t = first; t <= last; ++t) {
        if (feas.target_ok(t))
            set.targets.push_back(t);
        else
            ++set.skipped_targets;
    }
    if (set.targets.empty()) return set;

    const auto levels = needed_hours_by_level(model, set.targets);
    const std::int64_t lo = levels[0].front();
    const std::int64_t hi = levels[0].back();
    set.table_first = lo;
    const std::size_t span = static_cast<std::size_t>(hi - lo + 1);
    set.features.assign(span, InstantFeatures{});
    set.actual_std.assign(span, std::numeric_limits<double>::quiet_NaN());
    set.present.assign(span, 0);
    for (const std::int64_t u : levels[0]) {
        const auto f = instant_features(series, u, model.normalizer);
        if (!f) throw ConfigError("build_samples: feasible hour lacks features");
        const std::size_t i = static_cast<std::size_t>(u - lo);
        set.features[i] = *f;
        set.actual_std[i] = model.normalizer.std_energy(series.energy[static_cast<std::size_t>(u)]);
        set.present[i] = 1;
    }
    return set;
}

double batch_forward(const SbnModel& model, const SampleSet& samples,
                     std::span<const std::int64_t> targets, const TrainConfig& cfg, Mode mode,
                     Rng* dropout_rng, bool keep_caches, BatchWork& work) {
    const std::size_t n_stages = model.stages.size();
    work.levels = needed_hours_by_level(model, targets);

    work.residuals.resize(n_stages + 1);
    for (std::size_t s = 0; s <= n_stages; ++s)
        work.residuals[s].assign(work.levels[s].size(), 0.0);

    const auto& base_hours = work.levels[0];
    work.instant_caches.resize(keep_caches ? base_hours.size() : 1);
    for (std::size_t i = 0; i < base_hours.size(); ++i) {
        const std::int64_t u = base_hours[i];
        if (!samples.has(u)) throw ConfigError("batch graph: hour outside sample table");
        InstantCache& cache = work.instant_caches[keep_caches ? i : 0];
        const double y0 =
            instant_forward(model.instant, samples.features_at(u), mode, dropout_rng, cache);
        work.residuals[0][i] = y0 - samples.actual_at(u);
    }

    work.stage_caches.resize(n_stages);
    std::vector<double> window;
    for (std::size_t s = 0; s < n_stages; ++s) {
        const auto& stage = model.stages[s];
        const std::int64_t period = stage.period_hours();
        const auto& hours = work.levels[s + 1];
        const auto& prev_hours = work.levels[s];
        auto& caches = work.stage_caches[s];
        caches.resize(keep_caches ? hours.size() : 1);
        window.resize(static_cast<std::size_t>(stage.n_inputs));
        for (std::size_t i = 0; i < hours.size(); ++i) {
            const std::int64_t u = hours[i];
            for (int j = stage.n_inputs; j >= 1; --j)
                window[static_cast<std::size_t>(stage.n_inputs - j)] =
                    work.residuals[s][index_of_hour(prev_hours, u - period * j)];
            ForwardCache& cache = caches[keep_caches ? i : 0];
            stage.net.forward(window, mode, dropout_rng, cache);
            work.residuals[s + 1][i] =
                work.residuals[s][index_of_hour(prev_hours, u)] - cache.output()[0];
        }
    }

    work.stage_sq.assign(n_stages + 1, 0.0);
    for (const std::int64_t t : targets) {
        for (std::size_t s = 0; s <= n_stages; ++s) {
            const double r = work.residuals[s][index_of_hour(work.levels[s], t)];
            work.stage_sq[s] += r * r;
        }
    }
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(targets.size());
    for (std::size_t s = 0; s <= n_stages; ++s)
        loss += output_weight(cfg, s, n_stages) * work.stage_sq[s] * inv_n;
    return loss;
}

void batch_backward(const SbnModel& model, const SampleSet& samples,
                    std::span<const std::int64_t> targets, const TrainConfig& cfg, BatchWork& work,
                    ModelGrads& grads) {
    (void)samples;
    grads.zero();
    const std::size_t n_stages = model.stages.size();
    work.adjoints.resize(n_stages + 1);
    for (std::size_t s = 0; s <= n_stages; ++s)
        work.adjoints[s].assign(work.levels[s].size(), 0.0);

    const double inv_n = 1.0 / static_cast<double>(targets.size());
    for (const std::int64_t t : targets)
        for (std::size_t s = 0; s <= n_stages; ++s) {
            const std::size_t i = index_of_hour(work.levels[s], t);
            work.adjoints[s][i] +=
                2.0 * output_weight(cfg, s, n_stages) * work.residuals[s][i] * inv_n;
        }

    std::vector<double> dwindow;
    for (std::size_t s = n_stages; s-- > 0;) {
        const auto& stage = model.stages[s];
        const std::int64_t period = stage.period_hours();
        const auto& hours = work.levels[s + 1];
        const auto& prev_hours = work.levels[s];
        for (std::size_t i = 0; i < hours.size(); ++i) {
            const double g = work.adjoints[s + 1][i];
            if (g == 0.0) continue;
            const std::int64_t u = hours[i];
            work.adjoints[s][index_of_hour(prev_hours, u)] += g;
            const double dest[1] = {-g};
            stage.net.backward(work.stage_caches[s][i], dest, grads.stages[s],
                               cfg.detach_historical_residuals ? nullptr : &dwindow);
            if (!cfg.detach_historical_residuals)
                for (int j = stage.n_inputs; j >= 1; --j)
                    work.adjoints[s][index_of_hour(prev_hours, u - period * j)] +=
                        dwindow[static_cast<std::size_t>(stage.n_inputs - j)];
        }
    }

    for (std::size_t i = 0; i < work.levels[0].size(); ++i) {
        const double g = work.adjoints[0][i];
        if (g == 0.0) continue;
        instant_backward(model.instant, work.instant_caches[i], g, grads.instant);
    }
}

void shuffle_targets(std::vector<std::int64_t>& order, Rng& rng) {
    for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % i);
        std::swap(order[i - 1], order[j]);
    }
}

namespace {

TrainResult train_joint(SbnModel& model, const SampleSet& samples, const TrainConfig& cfg,
                        int phase, Rng& shuffle_rng, Rng& dropout_rng,
                        std::size_t frozen_param_count) {
    if (samples.targets.empty()) {
        std::string diag = "no trainable samples";
        if (samples.first_feasible >= 0)
            diag += "; earliest feasible target is hour index " +
                    std::to_string(samples.first_feasible);
        diag += " (" + std::to_string(samples.skipped_targets) + " targets skipped)";
        throw UsageError(diag);
    }
    if (cfg.batch_size < 1 || cfg.epochs < 1)
        throw UsageError("batch_size and epochs must be >= 1");

    const std::size_t n_targets = samples.targets.size();
    const int batches_per_epoch =
        static_cast<int>((n_targets + static_cast<std::size_t>(cfg.batch_size) - 1) /
                         static_cast<std::size_t>(cfg.batch_size));
    const double decay = lr_schedule(cfg, batches_per_epoch);

    auto params = parameter_view(model);
    AdamState adam(params.size(), cfg.base_lr, decay);
    ModelGrads grads = ModelGrads::make(model);
    BatchWork work;
    std::vector<double> flat;
    std::vector<std::int64_t> order = samples.targets;
    const std::size_t n_outputs = model.stages.size() + 1;

    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_targets(order, shuffle_rng);
        std::vector<double> epoch_sq(n_outputs, 0.0);
        for (std::size_t off = 0; off < n_targets; off += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size),
                                             n_targets - off);
            const std::span<const std::int64_t> batch(order.data() + off, len);
            const double loss =
                batch_forward(model, samples, batch, cfg, Mode::train, &dropout_rng, true, work);
            if (!std::isfinite(loss))
                throw NumericError("training diverged (non-finite loss) at epoch " +
                                   std::to_string(epoch) + ", batch " +
                                   std::to_string(off / static_cast<std::size_t>(cfg.batch_size)));
            for (std::size_t s = 0; s < n_outputs; ++s) epoch_sq[s] += work.stage_sq[s];
            batch_backward(model, samples, batch, cfg, work, grads);
            grads.flatten(flat);
            std::fill(flat.begin(),
                      flat.begin() + static_cast<std::ptrdiff_t>(
                                         std::min(frozen_param_count, flat.size())),
                      0.0);
            adam_step(params, flat, adam);
        }

        EpochStats stats;
        stats.phase = phase;
        stats.epoch = epoch;
        stats.stage_mse.resize(n_outputs);
        for (std::size_t s = 0; s < n_outputs; ++s)
            stats.stage_mse[s] = epoch_sq[s] / static_cast<double>(n_targets);
        stats.weighted_loss = 0.0;
        for (std::size_t s = 0; s < n_outputs; ++s)
            stats.weighted_loss += output_weight(cfg, s, n_outputs - 1) * stats.stage_mse[s];
        stats.lr_after = adam.effective_lr();
        result.history.push_back(std::move(stats));
    }
    return result;
}

} // namespace

TrainResult train(SbnModel& model, const SampleSet& samples, const TrainConfig& cfg) {
    if (cfg.mode == TrainMode::staged_frozen || cfg.mode == TrainMode::staged_unfrozen)
        return train_staged(model, samples, cfg);

    TrainConfig effective = cfg;
    if (cfg.mode == TrainMode::final_only) effective.loss_weight_earlier = 0.0;
    model.loss_weight_final = effective.loss_weight_final;
    model.loss_weight_earlier = effective.loss_weight_earlier;

    Rng master(cfg.seed);
    Rng shuffle_rng = master.substream(3);
    Rng dropout_rng = master.substream(2);
    return train_joint(model, samples, effective, 0, shuffle_rng, dropout_rng, 0);
}

TrainResult train_staged(SbnModel& model, const SampleSet& samples, const TrainConfig& cfg) {
    if (cfg.mode != TrainMode::staged_frozen && cfg.mode != TrainMode::staged_unfrozen)
        throw UsageError("train_staged requires a staged mode");
    const bool frozen = cfg.mode == TrainMode::staged_frozen;

    Rng master(cfg.seed);
    Rng shuffle_rng = master.substream(3);
    Rng dropout_rng = master.substream(2);

    SbnModel sub = model;
    sub.stages.clear();

    TrainResult result;
    for (std::size_t phase = 0; phase <= model.stages.size(); ++phase) {
        if (phase > 0) sub.stages.push_back(model.stages[phase - 1]);

        TrainConfig phase_cfg = cfg;
        if (frozen) phase_cfg.loss_weight_earlier = 0.0;
        std::size_t frozen_params = 0;
        if (frozen && phase > 0) {
            frozen_params = sub.instant.parameter_count();
            for (std::size_t s = 0; s + 1 < sub.stages.size(); ++s)
                frozen_params += sub.stages[s].parameter_count();
        }

        TrainResult phase_result = train_joint(sub, samples, phase_cfg, static_cast<int>(phase),
                                               shuffle_rng, dropout_rng, frozen_params);
        result.history.insert(result.history.end(), phase_result.history.begin(),
                              phase_result.history.end());
    }

    model.instant = sub.instant;
    model.stages = sub.stages;
    model.loss_weight_final = cfg.loss_weight_final;
    model.loss_weight_earlier = cfg.loss_weight_earlier;
    return result;
}

void write_loss_history_csv(const TrainResult& result, const SbnModel& model,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "phase,epoch";
    out << ",mse_instant";
    for (const auto& s : model.stages) out << ",mse_" << stage_kind_name(s.kind);
    out << ",weighted_loss,lr\n";
    out.precision(12);
    for (const auto& e : result.history) {
        out << e.phase << ',' << e.epoch;
        for (std::size_t s = 0; s <= model.stages.size(); ++s) {
            out << ',';
            if (s < e.stage_mse.size()) out << e.stage_mse[s];
        }
        out << ',' << e.weighted_loss << ',' << e.lr_after << '\n';
    }
}

} // namespace sbn
