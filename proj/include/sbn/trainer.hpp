#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbn/model.hpp"
#include "sbn/series.hpp"

namespace sbn {

/// Batches per epoch of the 5-year reference dataset that anchors the
/// learning-rate schedule: 5*8760 hours leave 43284 feasible targets for
/// the full booster stack, i.e. ceil(43284/256) = 170 batches.
inline constexpr int kReferenceBatchesPerEpoch = 170;

enum class TrainMode { joint_weighted, final_only, staged_frozen, staged_unfrozen };

TrainMode train_mode_from_name(const std::string& name);
const char* train_mode_name(TrainMode mode);

struct TrainConfig {
    double loss_weight_final = 0.9;
    double loss_weight_earlier = 0.1; // applied to each non-final output
    double base_lr = 0.0025;
    int batch_size = 256;
    int epochs = 100;
    double reference_epoch_decay = 0.98;
    int reference_batches_per_epoch = kReferenceBatchesPerEpoch;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::joint_weighted;
    /// Ablation switch: treat booster windows as constants so gradients
    /// stop at historical submodel applications.
    bool detach_historical_residuals = false;
};

/// Per-batch learning-rate decay: the factor whose
/// reference_batches_per_epoch-th power equals the reference per-epoch
/// decay, so total decay per batch is size-independent.
double lr_schedule(const TrainConfig& cfg, int dataset_batches_per_epoch);

/// Self-contained training data: target hours plus a snapshot of the
/// standardized features and actuals at exactly the hours any stage
/// window can reach. Training never touches the series again.
struct SampleSet {
    std::vector<std::int64_t> targets;
    std::int64_t table_first = 0;
    std::vector<InstantFeatures> features;
    std::vector<double> actual_std;
    std::vector<std::uint8_t> present;
    std::size_t skipped_targets = 0;
    std::int64_t first_feasible = -1;

    bool has(std::int64_t hour) const {
        const std::int64_t i = hour - table_first;
        return i >= 0 && i < static_cast<std::int64_t>(present.size()) &&
               present[static_cast<std::size_t>(i)];
    }
    const InstantFeatures& features_at(std::int64_t hour) const {
        return features[static_cast<std::size_t>(hour - table_first)];
    }
    double actual_at(std::int64_t hour) const {
        return actual_std[static_cast<std::size_t>(hour - table_first)];
    }
};

/// One sample per feasible target hour in [first, last]; targets whose
/// nested windows hit invalid or missing hours are skipped and counted.
SampleSet build_samples(const HourlySeries& series, const SbnModel& model, std::int64_t first,
                        std::int64_t last);

/// Reusable buffers for one batch of the shared training graph. Within a
/// batch, residuals at a given hour are computed once and feed every
/// sample that windows over them.
struct BatchWork {
    std::vector<std::vector<std::int64_t>> levels;
    std::vector<std::vector<double>> residuals;
    std::vector<std::vector<double>> adjoints;
    std::vector<InstantCache> instant_caches;
    std::vector<std::vector<ForwardCache>> stage_caches;
    std::vector<double> stage_sq; // per output: sum of squared target residuals
};

/// Teacher-forced forward over the union of hours the batch needs;
/// returns the weighted loss. keep_caches must be set when a backward
/// pass follows.
double batch_forward(const SbnModel& model, const SampleSet& samples,
                     std::span<const std::int64_t> targets, const TrainConfig& cfg, Mode mode,
                     Rng* dropout_rng, bool keep_caches, BatchWork& work);

/// Reverse pass matching the last batch_forward; accumulates into grads
/// (which it zeroes first).
void batch_backward(const SbnModel& model, const SampleSet& samples,
                    std::span<const std::int64_t> targets, const TrainConfig& cfg, BatchWork& work,
                    ModelGrads& grads);

struct EpochStats {
    int phase = 0;
    int epoch = 0;
    std::vector<double> stage_mse; // outputs y_0..y_S of the phase's model
    double weighted_loss = 0.0;
    double lr_after = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
};

/// Joint training with the weighted multi-output loss (modes
/// joint_weighted / final_only); staged modes dispatch to train_staged.
/// Deterministic under (seed, config, samples).
TrainResult train(SbnModel& model, const SampleSet& samples, const TrainConfig& cfg);

/// Trains the instant forecaster first, then appends boosters one by
/// one; staged_frozen keeps earlier parameters bit-identical,
/// staged_unfrozen keeps updating them.
TrainResult train_staged(SbnModel& model, const SampleSet& samples, const TrainConfig& cfg);

/// Deterministic Fisher-Yates permutation used for epoch shuffling.
void shuffle_targets(std::vector<std::int64_t>& order, Rng& rng);

void write_loss_history_csv(const TrainResult& result, const SbnModel& model,
                            const std::string& path);

} // namespace sbn
