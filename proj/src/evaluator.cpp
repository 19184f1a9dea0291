#include "sbn/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "sbn/archive.hpp"
#include "sbn/errors.hpp"

namespace sbn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Pairwise so that summing c identical slot totals is exact scaling for
// c in {1,2,4}; keeps pooled NRMSE literally identical across horizons
// for origin-independent predictions.
double pairwise_sum(std::span<const double> v) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

double finish_nrmse(double mean_sq, double lo, double hi, NrmseKind kind) {
    const double range = hi - lo;
    if (!(range > 0.0)) throw UsageError("nrmse undefined: actuals are constant");
    return kind == NrmseKind::rmse_over_range ? std::sqrt(mean_sq) / range : mean_sq / range;
}

std::string stage_output_name(const SbnModel& model, std::size_t output) {
    if (output == 0) return "instant";
    return stage_kind_name(model.stages[output - 1].kind);
}

} // namespace

double nrmse(std::span<const double> pred, std::span<const double> actual, NrmseKind kind) {
    if (pred.size() != actual.size() || pred.size() < 2)
        throw UsageError("nrmse needs two equal-length vectors of length >= 2");
    double sq = 0.0;
    double lo = actual[0], hi = actual[0];
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - actual[i];
        sq += d * d;
        lo = std::min(lo, actual[i]);
        hi = std::max(hi, actual[i]);
    }
    return finish_nrmse(sq / static_cast<double>(pred.size()), lo, hi, kind);
}

double seasonal_naive(const HourlySeries& series, std::int64_t t) {
    const std::int64_t lag = t - 168;
    if (lag < 0 || !series.is_valid(lag)) return kNaN;
    return series.energy[static_cast<std::size_t>(lag)];
}

EvalReport rolling_evaluate(const SbnModel& model, const HourlySeries& series,
                            std::int64_t eval_first, std::int64_t eval_last, int horizon,
                            NrmseKind kind, PredictionDump* dump) {
    if (horizon < 24 || horizon % 24 != 0)
        throw UsageError("horizon must be a positive multiple of 24 hours");
    if (eval_first > eval_last || !series.in_range(eval_first) || !series.in_range(eval_last))
        throw UsageError("evaluation range outside series");

    const std::int64_t first_target = first_feasible_target(model, series);
    if (first_target < 0) throw UsageError("series too short for this model");

    const int slots = horizon / 24;
    const std::size_t n_outputs = model.stages.size() + 1;
    const std::int64_t span = eval_last - eval_first + 1;

    // preds[output][slot][hour offset]
    std::vector<std::vector<std::vector<double>>> preds(
        n_outputs, std::vector<std::vector<double>>(
                       static_cast<std::size_t>(slots),
                       std::vector<double>(static_cast<std::size_t>(span), kNaN)));

    const std::int64_t first_midnight = eval_first - series.time_at(eval_first).hour;
    const std::int64_t last_index = static_cast<std::int64_t>(series.size()) - 1;

    EvalReport report;
    report.horizon = horizon;
    report.eval_first = eval_first;
    report.eval_last = eval_last;

    std::int64_t last_origin = -1;
    for (std::int64_t d = first_midnight - 24 * (slots - 1); d - 1 <= eval_last; d += 24)
        last_origin = std::max(last_origin, d - 1);
    const ResidualTable table =
        compute_residuals(model, series, std::min(last_origin, last_index));

    for (std::int64_t d = first_midnight - 24 * (slots - 1); d - 1 <= eval_last; d += 24) {
        const std::int64_t origin = d - 1;
        if (origin < 0 || origin < first_target - 1) continue;
        const int k_eff = static_cast<int>(std::min<std::int64_t>(horizon, last_index - origin));
        if (k_eff < 1) continue;
        const auto outputs = forecast_with_table(model, series, table, origin, k_eff);
        ++report.n_origins;
        for (const auto& out : outputs) {
            const std::int64_t t = out.hour;
            if (t < eval_first || t > eval_last) continue;
            const std::size_t slot = static_cast<std::size_t>((t - origin - 1) / 24);
            const std::size_t idx = static_cast<std::size_t>(t - eval_first);
            for (std::size_t s = 0; s < n_outputs; ++s) preds[s][slot][idx] = out.forecasts[s];
        }
    }
    if (report.n_origins == 0) throw UsageError("no feasible forecast origins in evaluation range");

    report.stage_nrmse_pct.resize(n_outputs);
    report.stage_counts.resize(n_outputs);
    for (std::size_t s = 0; s < n_outputs; ++s) {
        std::vector<double> slot_sq(static_cast<std::size_t>(slots), 0.0);
        std::size_t count = 0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < slots; ++k) {
            for (std::int64_t i = 0; i < span; ++i) {
                const double p = preds[s][static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                const std::int64_t t = eval_first + i;
                if (!std::isfinite(p) || !series.is_valid(t)) continue;
                const double a = series.energy[static_cast<std::size_t>(t)];
                const double e = p - a;
                slot_sq[static_cast<std::size_t>(k)] += e * e;
                lo = std::min(lo, a);
                hi = std::max(hi, a);
                ++count;
            }
        }
        if (count < 2) throw UsageError("fewer than 2 pooled predictions for an output");
        const double mean_sq = pairwise_sum(slot_sq) / static_cast<double>(count);
        report.stage_nrmse_pct[s] = 100.0 * finish_nrmse(mean_sq, lo, hi, kind);
        report.stage_counts[s] = count;
    }

    {
        double sq = 0.0;
        std::size_t count = 0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::int64_t t = eval_first; t <= eval_last; ++t) {
            const double p = seasonal_naive(series, t);
            if (!std::isfinite(p) || !series.is_valid(t)) continue;
            const double a = series.energy[static_cast<std::size_t>(t)];
            sq += (p - a) * (p - a);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
            ++count;
        }
        if (count >= 2) {
            report.baseline_nrmse_pct =
                100.0 * finish_nrmse(sq / static_cast<double>(count), lo, hi, kind);
            report.baseline_count = count;
        }
    }

    if (dump) {
        dump->first = eval_first;
        dump->actual.assign(static_cast<std::size_t>(span), kNaN);
        dump->stage_pred.assign(n_outputs, std::vector<double>(static_cast<std::size_t>(span), kNaN));
        for (std::int64_t i = 0; i < span; ++i) {
            const std::int64_t t = eval_first + i;
            if (series.is_valid(t)) dump->actual[static_cast<std::size_t>(i)] =
                series.energy[static_cast<std::size_t>(t)];
            for (std::size_t s = 0; s < n_outputs; ++s)
                dump->stage_pred[s][static_cast<std::size_t>(i)] =
                    preds[s][0][static_cast<std::size_t>(i)];
        }
    }
    return report;
}

std::vector<std::pair<std::string, ModelConfig>> table_configurations(double dropout_rate) {
    auto cfg = [&](bool w, bool d, bool h) {
        ModelConfig c;
        c.weekly = w;
        c.daily = d;
        c.hourly = h;
        c.dropout_rate = dropout_rate;
        return c;
    };
    return {
        {"instant", cfg(false, false, false)},
        {"weekly", cfg(true, false, false)},
        {"daily", cfg(false, true, false)},
        {"weekly+daily", cfg(true, true, false)},
        {"weekly+daily+hourly", cfg(true, true, true)},
    };
}

SweepResult sweep(const HourlySeries& series,
                  std::span<const std::pair<std::string, ModelConfig>> configs,
                  std::span<const std::int64_t> train_sizes_hours, std::span<const int> horizons,
                  std::int64_t eval_first, std::int64_t eval_last, const TrainConfig& train_cfg,
                  NrmseKind kind, const std::string* save_models_dir) {
    SweepResult result;
    for (const auto& [name, model_cfg] : configs) {
        for (const std::int64_t size : train_sizes_hours) {
            SbnModel model = make_model(model_cfg);
            std::string train_error;
            try {
                const std::int64_t train_first = eval_first - size;
                if (train_first < 0) throw UsageError("training window precedes series start");
                initialize_weights(model, Rng(train_cfg.seed));
                model.normalizer = Normalizer::fit(series, train_first, eval_first - 1);
                const SampleSet samples = build_samples(series, model, train_first, eval_first - 1);
                train(model, samples, train_cfg);
                if (save_models_dir) {
                    std::string clean = name;
                    for (auto& ch : clean)
                        if (ch == '+') ch = '_';
                    save_model(model, *save_models_dir + "/model_" + clean + "_" +
                                          std::to_string(size) + "h.json",
                               &train_cfg);
                }
            } catch (const std::exception& e) {
                train_error = e.what();
            }
            for (const int horizon : horizons) {
                SweepCell cell;
                cell.config_name = name;
                cell.train_hours = size;
                cell.horizon = horizon;
                if (!train_error.empty()) {
                    cell.error = train_error;
                } else {
                    try {
                        cell.report = rolling_evaluate(model, series, eval_first, eval_last,
                                                       horizon, kind);
                        cell.ok = true;
                    } catch (const std::exception& e) {
                        cell.error = e.what();
                    }
                }
                result.cells.push_back(std::move(cell));
            }
        }
    }
    return result;
}

namespace {

std::string hours_label(std::int64_t hours) {
    if (hours % 8760 == 0) return std::to_string(hours / 8760) + "y";
    if (hours % 24 == 0) return std::to_string(hours / 24) + "d";
    return std::to_string(hours) + "h";
}

void append_cell(std::ofstream& out, const SweepCell& cell) {
    if (cell.ok) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", cell.report.stage_nrmse_pct.back());
        out << ',' << buf;
    } else {
        out << ",failed";
    }
}

} // namespace

void write_sweep_csv(const SweepResult& result, SweepAxis axis, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");

    std::vector<std::string> rows;
    std::vector<std::int64_t> sizes;
    std::vector<int> horizons;
    for (const auto& c : result.cells) {
        if (std::find(rows.begin(), rows.end(), c.config_name) == rows.end())
            rows.push_back(c.config_name);
        if (std::find(sizes.begin(), sizes.end(), c.train_hours) == sizes.end())
            sizes.push_back(c.train_hours);
        if (std::find(horizons.begin(), horizons.end(), c.horizon) == horizons.end())
            horizons.push_back(c.horizon);
    }

    auto find_cell = [&](const std::string& name, std::int64_t size, int horizon) -> const SweepCell* {
        for (const auto& c : result.cells)
            if (c.config_name == name && c.train_hours == size && c.horizon == horizon) return &c;
        return nullptr;
    };

    if (axis == SweepAxis::train_size) {
        out << "configuration";
        for (const auto s : sizes) out << ',' << hours_label(s);
        out << '\n';
        for (const auto& name : rows) {
            out << name;
            for (const auto s : sizes) {
                const SweepCell* c = find_cell(name, s, horizons.front());
                if (c) append_cell(out, *c);
                else out << ",";
            }
            out << '\n';
        }
    } else {
        const std::int64_t size = *std::max_element(sizes.begin(), sizes.end());
        out << "configuration";
        for (const auto h : horizons) out << ',' << h << "h";
        out << '\n';
        for (const auto& name : rows) {
            out << name;
            for (const auto h : horizons) {
                const SweepCell* c = find_cell(name, size, h);
                if (c) append_cell(out, *c);
                else out << ",";
            }
            out << '\n';
        }
    }
}

void write_eval_csv(const EvalReport& report, const SbnModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "output,nrmse_pct,pooled_pairs\n";
    char buf[32];
    for (std::size_t s = 0; s < report.stage_nrmse_pct.size(); ++s) {
        std::snprintf(buf, sizeof buf, "%.2f", report.stage_nrmse_pct[s]);
        out << stage_output_name(model, s) << ',' << buf << ',' << report.stage_counts[s] << '\n';
    }
    if (report.baseline_count > 0) {
        std::snprintf(buf, sizeof buf, "%.2f", report.baseline_nrmse_pct);
        out << "seasonal_naive," << buf << ',' << report.baseline_count << '\n';
    }
}

void write_predictions_csv(const PredictionDump& dump, const HourlySeries& series,
                           const SbnModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "timestamp,actual";
    for (std::size_t s = 0; s < dump.stage_pred.size(); ++s)
        out << ",forecast_" << stage_output_name(model, s);
    out << '\n';
    out.precision(10);
    for (std::size_t i = 0; i < dump.actual.size(); ++i) {
        out << series.time_at(dump.first + static_cast<std::int64_t>(i)).to_string();
        out << ',';
        if (std::isfinite(dump.actual[i])) out << dump.actual[i];
        for (std::size_t s = 0; s < dump.stage_pred.size(); ++s) {
            out << ',';
            if (std::isfinite(dump.stage_pred[s][i])) out << dump.stage_pred[s][i];
        }
        out << '\n';
    }
}

} // namespace sbn
