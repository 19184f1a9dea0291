#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sbn/features.hpp"
#include "sbn/nn.hpp"
#include "sbn/series.hpp"

namespace sbn {

inline constexpr int kHiddenUnits = 32;

/// Shared-parameter forecaster for a single hour from fully observable
/// inputs: a linear 12->1 temperature reduction feeding a 5->32->1 head
/// together with the calendar encodings. One weight set serves every
/// hour instance.
struct InstantForecaster {
    DenseLayer temp_reducer;
    DenseNet head;

    std::size_t parameter_count() const {
        return temp_reducer.parameter_count() + head.parameter_count();
    }
};

struct InstantCache {
    LayerCache reducer;
    ForwardCache head;
};

struct InstantGrads {
    LayerGrads reducer;
    NetGrads head;
};

double instant_forward(const InstantForecaster& instant, const InstantFeatures& features,
                       Mode mode, Rng* dropout_rng, InstantCache& cache);
double instant_forward(const InstantForecaster& instant, const InstantFeatures& features,
                       Mode mode = Mode::infer, Rng* dropout_rng = nullptr);
void instant_backward(const InstantForecaster& instant, const InstantCache& cache, double dy,
                      InstantGrads& grads);

/// One boosting stage: a shared-weight n_inputs->32->1 net that predicts
/// the previous stage's residual at a fixed period from a window of that
/// stage's past residuals.
struct BoosterStage {
    StageKind kind = StageKind::weekly;
    int n_inputs = 0;
    DenseNet net;

    int period_hours() const { return stage_period_hours(kind); }
    std::size_t parameter_count() const { return net.parameter_count(); }
};

/// Residual estimate for one window (standardized units, oldest-first
/// input ordering).
double stage_forward(const BoosterStage& stage, std::span<const double> residual_window,
                     Mode mode = Mode::infer, Rng* dropout_rng = nullptr);

/// Which boosters to build. A zero input count means "use the standard
/// architecture": weekly 3, daily 7, hourly 24 when the booster stands
/// alone, weekly 2 and daily 6 inside a stack.
struct ModelConfig {
    bool weekly = false;
    bool daily = false;
    bool hourly = false;
    int n_weekly = 0;
    int n_daily = 0;
    int n_hourly = 0;
    double dropout_rate = 0.2;

    static ModelConfig from_booster_names(const std::vector<std::string>& names,
                                          double dropout_rate = 0.2);
};

struct SbnModel {
    InstantForecaster instant;
    std::vector<BoosterStage> stages; // stacking order: weekly, daily, hourly
    Normalizer normalizer;
    double loss_weight_earlier = 0.1;
    double loss_weight_final = 0.9;

    std::size_t parameter_count() const;

    /// Trainable layers along the deepest path: 3 for the instant
    /// forecaster plus 2 per stage.
    int layer_count() const { return 3 + 2 * static_cast<int>(stages.size()); }

    /// Hours of history consumed by the deepest nested residual window.
    std::int64_t residual_depth_hours() const;
};

/// Builds the architecture with zero weights; stacking order is fixed.
SbnModel make_model(const ModelConfig& config);

/// Glorot init over the canonical layer order from the weight-init
/// sub-stream of `rng`.
void initialize_weights(SbnModel& model, const Rng& rng);

/// Canonical layer order: instant.temp_reducer, instant.head layers,
/// then each stage's net layers in stacking order. This order defines
/// parameter flattening, initialization and the archive layout.
void visit_layers(SbnModel& model, const std::function<void(DenseLayer&)>& fn);
void visit_layers(const SbnModel& model, const std::function<void(const DenseLayer&)>& fn);

/// Per-scalar pointers into the model's parameters, canonical order.
std::vector<double*> parameter_view(SbnModel& model);

struct ModelGrads {
    InstantGrads instant;
    std::vector<NetGrads> stages;

    static ModelGrads make(const SbnModel& model);
    void zero();
    /// Canonical-order flattening matching parameter_view.
    void flatten(std::vector<double>& out) const;
};

/// feasible[s][t] says whether the teacher-forced residual r_s(t) is
/// computable: features and actuals exist at t and, recursively, at
/// every window hour of stages 1..s.
struct FeasibilityMap {
    std::vector<std::vector<std::uint8_t>> feasible;

    bool target_ok(std::int64_t t) const {
        return t >= 0 && t < static_cast<std::int64_t>(feasible.back().size()) &&
               feasible.back()[static_cast<std::size_t>(t)];
    }
};

FeasibilityMap compute_feasibility(const SbnModel& model, const HourlySeries& series);

/// First hour usable as a training target (or -1 when none exists).
std::int64_t first_feasible_target(const SbnModel& model, const HourlySeries& series);

/// Teacher-forced residuals r_s(t) = forecast-through-stage-s minus
/// actual, standardized units, NaN where infeasible. Row 0 is the
/// instant forecaster's residual.
struct ResidualTable {
    std::vector<std::vector<double>> r;
};

ResidualTable compute_residuals(const SbnModel& model, const HourlySeries& series,
                                std::int64_t upto_hour);

/// Residuals after boosters 1..upto_stage at the requested hours
/// (upto_stage 0 = instant only); NaN marks a skipped hour.
std::vector<double> historical_residuals(const SbnModel& model, const HourlySeries& series,
                                         std::span<const std::int64_t> hours, int upto_stage);

/// Per-hour staged forecasts. `forecasts[s]` is the stage-s corrected
/// forecast in kWh; `corrections[s-1]` is the booster-s residual
/// estimate scaled back to kWh.
struct StageOutputs {
    std::int64_t hour = 0;
    std::vector<double> forecasts;
    std::vector<double> corrections;
};

/// Rollout forecast for hours origin+1 .. origin+horizon. Residual
/// windows read teacher-forced residuals at or before the origin and the
/// model's own estimates beyond it.
std::vector<StageOutputs> forecast(const SbnModel& model, const HourlySeries& series,
                                   std::int64_t origin, int horizon);

/// Variant reusing a residual table that covers [0, origin].
std::vector<StageOutputs> forecast_with_table(const SbnModel& model, const HourlySeries& series,
                                              const ResidualTable& table, std::int64_t origin,
                                              int horizon);

/// Teacher-forced per-stage outputs for one training target, standardized
/// residual windows computed from actuals. Train mode draws fresh
/// dropout masks per submodel application.
StageOutputs joint_outputs(const SbnModel& model, const HourlySeries& series, std::int64_t target,
                           Mode mode = Mode::train, Rng* dropout_rng = nullptr);

/// Union of hour sets needed per residual level for the given targets;
/// result[s] lists (sorted, unique) the hours where r_s must be known.
std::vector<std::vector<std::int64_t>> needed_hours_by_level(const SbnModel& model,
                                                             std::span<const std::int64_t> targets);

} // namespace sbn
