#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sbn/archive.hpp"
#include "sbn/csv_io.hpp"
#include "sbn/errors.hpp"
#include "sbn/evaluator.hpp"
#include "sbn/synth.hpp"
#include "sbn/trainer.hpp"

namespace {

using namespace sbn;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto end = comma == std::string::npos ? text.size() : comma;
        if (end > pos) out.push_back(text.substr(pos, end - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::int64_t parse_size_hours(const std::string& token) {
    std::size_t idx = 0;
    while (idx < token.size() && (std::isdigit(static_cast<unsigned char>(token[idx])) != 0))
        ++idx;
    if (idx == 0) throw UsageError("bad size '" + token + "' (expected e.g. 6mo, 1y, 90d)");
    const std::int64_t value = std::stoll(token.substr(0, idx));
    const std::string unit = token.substr(idx);
    if (unit == "h" || unit.empty()) return value;
    if (unit == "d") return value * 24;
    if (unit == "w") return value * 168;
    if (unit == "mo") return value * 730;
    if (unit == "y") return value * 8760;
    throw UsageError("bad size unit '" + unit + "' (expected h, d, w, mo or y)");
}

Weekday weekday_from_name(const std::string& name) {
    static const std::vector<std::string> names = {"monday", "tuesday",  "wednesday", "thursday",
                                                   "friday", "saturday", "sunday"};
    for (std::size_t i = 0; i < names.size(); ++i)
        if (name == names[i] || name == names[i].substr(0, 3)) return static_cast<Weekday>(i);
    throw UsageError("bad weekday '" + name + "'");
}

std::int64_t clamp_index(const HourlySeries& series, std::int64_t idx) {
    return std::max<std::int64_t>(0, std::min<std::int64_t>(idx,
                                         static_cast<std::int64_t>(series.size()) - 1));
}

struct RangeFlags {
    std::string start;
    std::string end;
};

// Inclusive [first, last] hour range; a date-only end means end of day.
std::pair<std::int64_t, std::int64_t> resolve_range(const HourlySeries& series,
                                                    const RangeFlags& flags,
                                                    std::int64_t default_first,
                                                    std::int64_t default_last) {
    std::int64_t first = default_first;
    std::int64_t last = default_last;
    if (!flags.start.empty()) first = series.index_of(DateTime::parse(flags.start));
    if (!flags.end.empty()) {
        const DateTime end = DateTime::parse(flags.end);
        std::int64_t idx = series.index_of(end);
        if (end.hour == 0 && flags.end.find(':') == std::string::npos) idx += 23;
        last = idx;
    }
    first = clamp_index(series, first);
    last = clamp_index(series, last);
    if (first > last) throw UsageError("empty hour range after clamping to the series");
    return {first, last};
}

struct CommonTrainFlags {
    std::string boosters = "weekly,daily,hourly";
    double dropout = 0.2;
    TrainConfig cfg;
    std::string mode = "joint_weighted";
    RangeFlags range;
};

void add_train_flags(CLI::App* cmd, CommonTrainFlags& f) {
    cmd->add_option("--boosters", f.boosters,
                    "Comma list of weekly,daily,hourly, or 'none'");
    cmd->add_option("--dropout", f.dropout, "Hidden-layer dropout rate");
    cmd->add_option("--epochs", f.cfg.epochs, "Training epochs");
    cmd->add_option("--batch-size", f.cfg.batch_size, "Mini-batch size");
    cmd->add_option("--lr", f.cfg.base_lr, "Initial learning rate");
    cmd->add_option("--loss-weight-final", f.cfg.loss_weight_final, "Loss weight, final output");
    cmd->add_option("--loss-weight-earlier", f.cfg.loss_weight_earlier,
                    "Loss weight, each earlier output");
    cmd->add_option("--reference-epoch-decay", f.cfg.reference_epoch_decay,
                    "Per-epoch lr decay at the reference dataset size");
    cmd->add_option("--reference-batches", f.cfg.reference_batches_per_epoch,
                    "Batches per epoch of the reference dataset");
    cmd->add_option("--seed", f.cfg.seed, "Master seed");
    cmd->add_option("--mode", f.mode,
                    "joint_weighted|final_only|staged_frozen|staged_unfrozen");
    cmd->add_flag("--detach-history", f.cfg.detach_historical_residuals,
                  "Stop gradients at historical submodel applications");
    cmd->add_option("--train-start", f.range.start, "First training day (YYYY-MM-DD)");
    cmd->add_option("--train-end", f.range.end, "Last training day (YYYY-MM-DD)");
}

SbnModel train_from_flags(const HourlySeries& series, CommonTrainFlags& f,
                          TrainResult* result_out) {
    f.cfg.mode = train_mode_from_name(f.mode);
    const ModelConfig model_cfg = ModelConfig::from_booster_names(split_list(f.boosters), f.dropout);
    SbnModel model = make_model(model_cfg);
    initialize_weights(model, Rng(f.cfg.seed));

    const auto [first, last] =
        resolve_range(series, f.range, 0, static_cast<std::int64_t>(series.size()) - 1);
    model.normalizer = Normalizer::fit(series, first, last);
    const SampleSet samples = build_samples(series, model, first, last);
    TrainResult result = train(model, samples, f.cfg);
    if (result_out) *result_out = std::move(result);
    return model;
}

int cmd_synth(const SynthConfig& cfg, const std::string& start, const std::string& step_date,
              const std::string& event_weekday, const std::string& out_path) {
    SynthConfig full = cfg;
    if (!start.empty()) full.start = DateTime::parse(start);
    if (!step_date.empty()) full.event_step_date = DateTime::parse(step_date);
    if (!event_weekday.empty()) full.event_weekday = weekday_from_name(event_weekday);
    if (full.oscillation_amplitude_kw != 0.0 && full.oscillation_period_hours > 0.0) {
        const double p = full.oscillation_period_hours;
        if (std::fmod(24.0, p) == 0.0 || std::fmod(p, 24.0) == 0.0)
            std::cerr << "warning: oscillation period " << p
                      << " h aligns with the day; the hourly booster will have nothing"
                         " distinctive to correct\n";
    }
    const HourlySeries series = generate_synthetic(full);
    write_csv(series, out_path);
    std::cout << "wrote " << series.size() << " hours to " << out_path << "\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& model_out,
              const std::string& loss_out, CommonTrainFlags& flags) {
    IngestSummary summary;
    const HourlySeries series = ingest_csv(data_path, &summary);
    std::cout << "ingested " << summary.rows << " rows: " << summary.hours_interpolated
              << " hours interpolated, " << summary.hours_invalid << " invalid\n";

    TrainResult result;
    const SbnModel model = train_from_flags(series, flags, &result);

    std::cout << "parameter count: " << model.parameter_count() << "\n";
    std::cout << "layer count: " << model.layer_count() << "\n";
    if (!result.history.empty()) {
        const EpochStats& last = result.history.back();
        std::cout << "final training mse per output:";
        for (const double m : last.stage_mse) std::printf(" %.6f", m);
        std::printf("  (weighted %.6f)\n", last.weighted_loss);
    }
    save_model(model, model_out, &flags.cfg);
    std::cout << "model written to " << model_out << "\n";
    if (!loss_out.empty()) write_loss_history_csv(result, model, loss_out);
    return 0;
}

void print_eval_table(const std::vector<EvalReport>& reports, const SbnModel& model) {
    std::printf("%-24s", "output");
    for (const auto& r : reports) std::printf(" %8dh", r.horizon);
    std::printf("\n");
    const std::size_t n_outputs = model.stages.size() + 1;
    for (std::size_t s = 0; s < n_outputs; ++s) {
        const std::string name =
            s == 0 ? "instant" : stage_kind_name(model.stages[s - 1].kind);
        std::printf("%-24s", name.c_str());
        for (const auto& r : reports) std::printf(" %8.2f%%", r.stage_nrmse_pct[s]);
        std::printf("\n");
    }
    std::printf("%-24s", "seasonal_naive");
    for (const auto& r : reports) std::printf(" %8.2f%%", r.baseline_nrmse_pct);
    std::printf("\n");
}

int cmd_evaluate(const std::string& data_path, const std::string& model_path,
                 const std::string& horizons_text, const RangeFlags& range,
                 const std::string& out_path, const std::string& dump_path, bool literal_mse) {
    const HourlySeries series = ingest_csv(data_path);
    const SbnModel model = load_model(model_path);
    const NrmseKind kind = literal_mse ? NrmseKind::mse_over_range : NrmseKind::rmse_over_range;

    const std::int64_t n = static_cast<std::int64_t>(series.size());
    const auto [first, last] = resolve_range(series, range, std::max<std::int64_t>(0, n - 8760), n - 1);

    std::vector<EvalReport> reports;
    bool dumped = false;
    for (const auto& token : split_list(horizons_text)) {
        const int horizon = static_cast<int>(std::stol(token));
        PredictionDump dump;
        reports.push_back(rolling_evaluate(model, series, first, last, horizon, kind,
                                           !dumped && !dump_path.empty() ? &dump : nullptr));
        if (!dumped && !dump_path.empty()) {
            write_predictions_csv(dump, series, model, dump_path);
            dumped = true;
        }
    }
    print_eval_table(reports, model);
    if (!out_path.empty()) {
        for (std::size_t i = 0; i < reports.size(); ++i) {
            std::string path = out_path;
            if (reports.size() > 1) {
                const auto dot = path.rfind('.');
                const std::string suffix = "_" + std::to_string(reports[i].horizon) + "h";
                if (dot == std::string::npos) path += suffix;
                else path.insert(dot, suffix);
            }
            write_eval_csv(reports[i], model, path);
        }
    }
    return 0;
}

int cmd_forecast(const std::string& data_path, const std::string& model_path,
                 const std::string& origin_text, int horizon, const std::string& out_path) {
    const HourlySeries series = ingest_csv(data_path);
    const SbnModel model = load_model(model_path);
    const std::int64_t origin = series.index_of(DateTime::parse(origin_text));
    if (!series.in_range(origin)) throw UsageError("origin lies outside the series");

    const auto outputs = forecast(model, series, origin, horizon);
    std::ofstream out(out_path);
    if (!out) throw DataError("cannot write '" + out_path + "'");
    out << "timestamp,actual,forecast_instant";
    for (const auto& s : model.stages) out << ",forecast_" << stage_kind_name(s.kind);
    out << '\n';
    out.precision(10);
    for (const auto& o : outputs) {
        out << series.time_at(o.hour).to_string() << ',';
        if (series.is_valid(o.hour)) out << series.energy[static_cast<std::size_t>(o.hour)];
        for (const double f : o.forecasts) {
            out << ',';
            if (std::isfinite(f)) out << f;
        }
        out << '\n';
    }
    std::cout << "wrote " << outputs.size() << " forecast hours to " << out_path << "\n";
    return 0;
}

int cmd_sweep(const std::string& data_path, const std::string& out_dir,
              const std::string& sizes_text, const std::string& horizons_text,
              const std::string& configs_text, const RangeFlags& eval_range,
              CommonTrainFlags& flags, bool save_models, bool literal_mse) {
    const HourlySeries series = ingest_csv(data_path);
    flags.cfg.mode = train_mode_from_name(flags.mode);
    const NrmseKind kind = literal_mse ? NrmseKind::mse_over_range : NrmseKind::rmse_over_range;

    std::vector<std::int64_t> sizes;
    for (const auto& t : split_list(sizes_text)) sizes.push_back(parse_size_hours(t));
    std::vector<int> horizons;
    for (const auto& t : split_list(horizons_text)) horizons.push_back(static_cast<int>(std::stol(t)));

    std::vector<std::pair<std::string, ModelConfig>> configs;
    if (configs_text == "all") {
        configs = table_configurations(flags.dropout);
    } else {
        for (const auto& name : split_list(configs_text)) {
            // entries are 'instant' or '+'-joined booster names like weekly+daily
            std::string boosters = name == "instant" ? "none" : name;
            for (auto& ch : boosters)
                if (ch == '+') ch = ',';
            configs.emplace_back(name,
                                 ModelConfig::from_booster_names(split_list(boosters), flags.dropout));
        }
    }

    const std::int64_t n = static_cast<std::int64_t>(series.size());
    const auto [eval_first, eval_last] =
        resolve_range(series, eval_range, std::max<std::int64_t>(0, n - 8760), n - 1);

    std::filesystem::create_directories(out_dir);
    SweepResult result = sweep(series, configs, sizes, horizons, eval_first, eval_last, flags.cfg,
                               kind, save_models ? &out_dir : nullptr);

    write_sweep_csv(result, SweepAxis::train_size, out_dir + "/sweep_by_size.csv");
    write_sweep_csv(result, SweepAxis::horizon, out_dir + "/sweep_by_horizon.csv");
    for (const auto& cell : result.cells) {
        if (!cell.ok)
            std::cerr << "cell (" << cell.config_name << ", " << cell.train_hours << "h, "
                      << cell.horizon << "h) failed: " << cell.error << "\n";
    }
    std::cout << "sweep tables written to " << out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stacked booster network for short-term energy load forecasting"};
    app.set_config("--config", "", "Read options from an INI/TOML file");
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic building-load CSV");
    SynthConfig synth_cfg;
    std::string synth_start, synth_step_date, synth_event_weekday, synth_out;
    synth->add_option("--out", synth_out, "Output CSV path")->required();
    synth->add_option("--hours", synth_cfg.n_hours, "Series length in hours");
    synth->add_option("--seed", synth_cfg.seed, "RNG seed");
    synth->add_option("--start", synth_start, "First hour (YYYY-MM-DD[THH:00])");
    synth->add_option("--base-load", synth_cfg.base_load_kw, "Base load kW");
    synth->add_option("--heating-slope", synth_cfg.heating_slope_kw_per_deg, "kW per degC");
    synth->add_option("--heating-threshold", synth_cfg.heating_threshold_c, "Heating onset degC");
    synth->add_option("--office-load", synth_cfg.office_load_kw, "Weekday 08-17 load kW");
    synth->add_option("--event-weekday", synth_event_weekday, "Weekly event weekday");
    synth->add_option("--event-hour", synth_cfg.event_hour, "Weekly event hour");
    synth->add_option("--event-magnitude", synth_cfg.event_magnitude_kw, "Weekly event kW");
    synth->add_option("--event-step", synth_cfg.event_step_change_kw,
                      "Permanent event change kW from --event-step-date on");
    synth->add_option("--event-step-date", synth_step_date, "Date of the permanent change");
    synth->add_option("--oscillation-period", synth_cfg.oscillation_period_hours,
                      "Oscillation period hours");
    synth->add_option("--oscillation-amplitude", synth_cfg.oscillation_amplitude_kw,
                      "Oscillation amplitude kW");
    synth->add_option("--drift-sigma", synth_cfg.drift_sigma_kw, "Load drift stationary std kW");
    synth->add_option("--drift-tau", synth_cfg.drift_tau_hours, "Load drift decay time hours");
    synth->add_option("--noise-sigma", synth_cfg.noise_sigma_kw, "White noise std kW");
    synth->add_option("--temp-mean", synth_cfg.temp_mean_c, "Mean temperature degC");
    synth->add_option("--temp-annual-amplitude", synth_cfg.temp_annual_amplitude_c,
                      "Seasonal swing degC");
    synth->add_option("--temp-daily-amplitude", synth_cfg.temp_daily_amplitude_c,
                      "Diurnal swing degC");
    synth->add_option("--temp-noise-sigma", synth_cfg.temp_noise_sigma_c,
                      "Temperature noise std degC");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model on an ingested CSV");
    std::string train_data, train_model_out, train_loss_out;
    CommonTrainFlags train_flags;
    train_cmd->add_option("--data", train_data, "Input CSV")->required();
    train_cmd->add_option("--model-out", train_model_out, "Model archive path")->required();
    train_cmd->add_option("--loss-out", train_loss_out, "Loss history CSV path");
    add_train_flags(train_cmd, train_flags);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Rolling NRMSE evaluation of a trained model");
    std::string eval_data, eval_model, eval_horizons = "24", eval_out, eval_dump;
    RangeFlags eval_range;
    bool eval_literal_mse = false;
    eval_cmd->add_option("--data", eval_data, "Input CSV")->required();
    eval_cmd->add_option("--model", eval_model, "Model archive path")->required();
    eval_cmd->add_option("--horizons", eval_horizons, "Comma list of horizons (hours)");
    eval_cmd->add_option("--eval-start", eval_range.start, "First evaluated day");
    eval_cmd->add_option("--eval-end", eval_range.end, "Last evaluated day");
    eval_cmd->add_option("--out", eval_out, "Report CSV path");
    eval_cmd->add_option("--dump", eval_dump, "Per-hour first-lead prediction CSV");
    eval_cmd->add_flag("--nrmse-literal-mse", eval_literal_mse,
                       "Normalize MSE instead of RMSE by the range");

    // forecast
    auto* fc_cmd = app.add_subcommand("forecast", "Dump one forecast window to CSV");
    std::string fc_data, fc_model, fc_origin, fc_out;
    int fc_horizon = 24;
    fc_cmd->add_option("--data", fc_data, "Input CSV")->required();
    fc_cmd->add_option("--model", fc_model, "Model archive path")->required();
    fc_cmd->add_option("--origin", fc_origin, "Forecast origin timestamp")->required();
    fc_cmd->add_option("--horizon", fc_horizon, "Forecast hours");
    fc_cmd->add_option("--out", fc_out, "Output CSV path")->required();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Configuration x training-size x horizon sweep");
    std::string sweep_data, sweep_out_dir, sweep_sizes = "6mo,1y,2y", sweep_horizons = "24";
    std::string sweep_configs = "all";
    RangeFlags sweep_eval_range;
    CommonTrainFlags sweep_flags;
    bool sweep_save_models = false;
    bool sweep_literal_mse = false;
    sweep_cmd->add_option("--data", sweep_data, "Input CSV")->required();
    sweep_cmd->add_option("--out-dir", sweep_out_dir, "Output directory")->required();
    sweep_cmd->add_option("--sizes", sweep_sizes, "Training sizes, e.g. 6mo,1y,2y");
    sweep_cmd->add_option("--horizons", sweep_horizons, "Horizons in hours");
    sweep_cmd->add_option("--configs", sweep_configs,
                          "'all' or comma list like instant,weekly+daily");
    sweep_cmd->add_option("--eval-start", sweep_eval_range.start, "First evaluated day");
    sweep_cmd->add_option("--eval-end", sweep_eval_range.end, "Last evaluated day");
    sweep_cmd->add_flag("--save-models", sweep_save_models, "Archive each trained cell model");
    sweep_cmd->add_flag("--nrmse-literal-mse", sweep_literal_mse,
                        "Normalize MSE instead of RMSE by the range");
    add_train_flags(sweep_cmd, sweep_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_cfg, synth_start, synth_step_date, synth_event_weekday,
                             synth_out);
        if (train_cmd->parsed()) return cmd_train(train_data, train_model_out, train_loss_out,
                                                  train_flags);
        if (eval_cmd->parsed())
            return cmd_evaluate(eval_data, eval_model, eval_horizons, eval_range, eval_out,
                                eval_dump, eval_literal_mse);
        if (fc_cmd->parsed()) return cmd_forecast(fc_data, fc_model, fc_origin, fc_horizon, fc_out);
        if (sweep_cmd->parsed())
            return cmd_sweep(sweep_data, sweep_out_dir, sweep_sizes, sweep_horizons, sweep_configs,
                             sweep_eval_range, sweep_flags, sweep_save_models, sweep_literal_mse);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
