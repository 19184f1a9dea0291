#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sbn/model.hpp"
#include "sbn/series.hpp"
#include "sbn/trainer.hpp"

namespace sbn {

enum class NrmseKind {
    rmse_over_range, // sqrt(MSE) / (max - min), the reported metric
    mse_over_range   // literal MSE / (max - min), kept for auditing
};

/// Root-mean-squared error normalized by the actuals' range; fraction,
/// not percent. Throws UsageError for constant actuals.
double nrmse(std::span<const double> pred, std::span<const double> actual,
             NrmseKind kind = NrmseKind::rmse_over_range);

/// Value observed one week earlier, NaN when that hour is unusable.
double seasonal_naive(const HourlySeries& series, std::int64_t t);

struct EvalReport {
    int horizon = 24;
    std::int64_t eval_first = 0;
    std::int64_t eval_last = 0;
    std::size_t n_origins = 0;
    std::vector<double> stage_nrmse_pct;  // outputs y_0..y_S, percent
    std::vector<std::size_t> stage_counts; // pooled pairs per output
    double baseline_nrmse_pct = 0.0;
    std::size_t baseline_count = 0;
};

/// Optional per-hour capture of the first-lead-time predictions for
/// external plotting.
struct PredictionDump {
    std::int64_t first = 0;
    std::vector<double> actual;
    std::vector<std::vector<double>> stage_pred; // [stage][hour]
};

/// Day-ahead rolling evaluation: forecasts are issued at each midnight
/// so that every hour of [eval_first, eval_last] is predicted at every
/// lead-time slot (horizon/24 of them), then pooled into one NRMSE per
/// stage output. The horizon must be a positive multiple of 24.
EvalReport rolling_evaluate(const SbnModel& model, const HourlySeries& series,
                            std::int64_t eval_first, std::int64_t eval_last, int horizon,
                            NrmseKind kind = NrmseKind::rmse_over_range,
                            PredictionDump* dump = nullptr);

/// The five standard booster combinations, in table order.
std::vector<std::pair<std::string, ModelConfig>> table_configurations(double dropout_rate = 0.2);

struct SweepCell {
    std::string config_name;
    std::int64_t train_hours = 0;
    int horizon = 24;
    bool ok = false;
    std::string error;
    EvalReport report;
};

struct SweepResult {
    std::vector<SweepCell> cells;
};

/// Trains one fresh, identically seeded model per (configuration,
/// training size) on the window just before eval_first and evaluates it
/// at every horizon. Failed cells are marked and the sweep continues.
/// With save_models_dir set, each cell's trained model is archived there.
SweepResult sweep(const HourlySeries& series, std::span<const std::pair<std::string, ModelConfig>> configs,
                  std::span<const std::int64_t> train_sizes_hours, std::span<const int> horizons,
                  std::int64_t eval_first, std::int64_t eval_last, const TrainConfig& train_cfg,
                  NrmseKind kind = NrmseKind::rmse_over_range,
                  const std::string* save_models_dir = nullptr);

/// Final-stage NRMSE grid, configurations as rows. `by` selects the
/// column axis: training sizes (at the first horizon) or horizons (at
/// the largest training size).
enum class SweepAxis { train_size, horizon };
void write_sweep_csv(const SweepResult& result, SweepAxis axis, const std::string& path);

void write_eval_csv(const EvalReport& report, const SbnModel& model, const std::string& path);

void write_predictions_csv(const PredictionDump& dump, const HourlySeries& series,
                           const SbnModel& model, const std::string& path);

} // namespace sbn
