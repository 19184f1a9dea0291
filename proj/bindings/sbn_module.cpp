#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sbn/archive.hpp"
#include "sbn/csv_io.hpp"
#include "sbn/errors.hpp"
#include "sbn/evaluator.hpp"
#include "sbn/synth.hpp"
#include "sbn/trainer.hpp"

namespace py = pybind11;
using namespace sbn;

namespace {

SynthConfig synth_config_from_kwargs(std::int64_t n_hours, std::uint64_t seed,
                                     const std::string& start, double base_load,
                                     double heating_slope, double heating_threshold,
                                     double office_load, const std::string& event_weekday,
                                     int event_hour, double event_magnitude, double event_step,
                                     const std::string& event_step_date, double osc_period,
                                     double osc_amplitude, double drift_sigma, double drift_tau,
                                     double noise_sigma, double temp_mean, double temp_annual,
                                     double temp_daily, double temp_noise) {
    SynthConfig cfg;
    cfg.n_hours = n_hours;
    cfg.seed = seed;
    cfg.start = DateTime::parse(start);
    cfg.base_load_kw = base_load;
    cfg.heating_slope_kw_per_deg = heating_slope;
    cfg.heating_threshold_c = heating_threshold;
    cfg.office_load_kw = office_load;
    static const char* names[] = {"monday", "tuesday",  "wednesday", "thursday",
                                  "friday", "saturday", "sunday"};
    for (int i = 0; i < 7; ++i)
        if (event_weekday == names[i]) cfg.event_weekday = static_cast<Weekday>(i);
    cfg.event_hour = event_hour;
    cfg.event_magnitude_kw = event_magnitude;
    cfg.event_step_change_kw = event_step;
    cfg.event_step_date = DateTime::parse(event_step_date);
    cfg.oscillation_period_hours = osc_period;
    cfg.oscillation_amplitude_kw = osc_amplitude;
    cfg.drift_sigma_kw = drift_sigma;
    cfg.drift_tau_hours = drift_tau;
    cfg.noise_sigma_kw = noise_sigma;
    cfg.temp_mean_c = temp_mean;
    cfg.temp_annual_amplitude_c = temp_annual;
    cfg.temp_daily_amplitude_c = temp_daily;
    cfg.temp_noise_sigma_c = temp_noise;
    return cfg;
}

TrainConfig train_config_from_kwargs(int epochs, int batch_size, double lr, double w_final,
                                     double w_earlier, std::uint64_t seed, const std::string& mode,
                                     bool detach_history) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.base_lr = lr;
    cfg.loss_weight_final = w_final;
    cfg.loss_weight_earlier = w_earlier;
    cfg.seed = seed;
    cfg.mode = train_mode_from_name(mode);
    cfg.detach_historical_residuals = detach_history;
    return cfg;
}

py::dict report_to_dict(const EvalReport& report) {
    py::dict d;
    d["horizon"] = report.horizon;
    d["n_origins"] = report.n_origins;
    d["stage_nrmse_pct"] = report.stage_nrmse_pct;
    d["stage_counts"] = report.stage_counts;
    d["baseline_nrmse_pct"] = report.baseline_nrmse_pct;
    d["baseline_count"] = report.baseline_count;
    return d;
}

} // namespace

PYBIND11_MODULE(_sbn, m) {
    m.doc() = "Stacked booster network for short-term energy load forecasting";

    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ModelConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_IOError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<HourlySeries>(m, "HourlySeries")
        .def_property_readonly("start",
                               [](const HourlySeries& s) { return s.start.to_string(); })
        .def_readonly("energy", &HourlySeries::energy)
        .def_readonly("temperature", &HourlySeries::temperature)
        .def_property_readonly("valid",
                               [](const HourlySeries& s) {
                                   std::vector<bool> v(s.valid.begin(), s.valid.end());
                                   return v;
                               })
        .def("__len__", [](const HourlySeries& s) { return s.size(); })
        .def("time_at",
             [](const HourlySeries& s, std::int64_t t) { return s.time_at(t).to_string(); })
        .def("index_of",
             [](const HourlySeries& s, const std::string& ts) {
                 return s.index_of(DateTime::parse(ts));
             });

    py::class_<SbnModel>(m, "SbnModel")
        .def_property_readonly("parameter_count", &SbnModel::parameter_count)
        .def_property_readonly("layer_count", &SbnModel::layer_count)
        .def_property_readonly("stages",
                               [](const SbnModel& model) {
                                   std::vector<std::pair<std::string, int>> out;
                                   for (const auto& s : model.stages)
                                       out.emplace_back(stage_kind_name(s.kind), s.n_inputs);
                                   return out;
                               });

    m.def(
        "generate_synthetic",
        [](std::int64_t n_hours, std::uint64_t seed, const std::string& start, double base_load,
           double heating_slope, double heating_threshold, double office_load,
           const std::string& event_weekday, int event_hour, double event_magnitude,
           double event_step, const std::string& event_step_date, double osc_period,
           double osc_amplitude, double drift_sigma, double drift_tau, double noise_sigma,
           double temp_mean, double temp_annual, double temp_daily, double temp_noise) {
            return generate_synthetic(synth_config_from_kwargs(
                n_hours, seed, start, base_load, heating_slope, heating_threshold, office_load,
                event_weekday, event_hour, event_magnitude, event_step, event_step_date,
                osc_period, osc_amplitude, drift_sigma, drift_tau, noise_sigma, temp_mean,
                temp_annual, temp_daily, temp_noise));
        },
        py::arg("n_hours") = 8760, py::arg("seed") = 1, py::arg("start") = "2013-01-01",
        py::arg("base_load") = 50.0, py::arg("heating_slope") = 2.0,
        py::arg("heating_threshold") = 17.0, py::arg("office_load") = 20.0,
        py::arg("event_weekday") = "saturday", py::arg("event_hour") = 10,
        py::arg("event_magnitude") = 15.0, py::arg("event_step") = 10.0,
        py::arg("event_step_date") = "2014-07-01", py::arg("oscillation_period") = 5.0,
        py::arg("oscillation_amplitude") = 5.0, py::arg("drift_sigma") = 5.0,
        py::arg("drift_tau") = 8064.0, py::arg("noise_sigma") = 2.0, py::arg("temp_mean") = 5.0,
        py::arg("temp_annual_amplitude") = 12.0, py::arg("temp_daily_amplitude") = 4.0,
        py::arg("temp_noise_sigma") = 0.5);

    m.def("ingest_csv",
          [](const std::string& path) {
              IngestSummary summary;
              HourlySeries series = ingest_csv(path, &summary);
              py::dict info;
              info["rows"] = summary.rows;
              info["duplicate_hours_averaged"] = summary.duplicate_hours_averaged;
              info["hours_interpolated"] = summary.hours_interpolated;
              info["hours_invalid"] = summary.hours_invalid;
              return py::make_tuple(series, info);
          },
          py::arg("path"));
    m.def("write_csv", &write_csv, py::arg("series"), py::arg("path"));

    m.def("make_model",
          [](const std::vector<std::string>& boosters, double dropout, std::uint64_t seed) {
              SbnModel model = make_model(ModelConfig::from_booster_names(boosters, dropout));
              initialize_weights(model, Rng(seed));
              return model;
          },
          py::arg("boosters"), py::arg("dropout") = 0.2, py::arg("seed") = 0);

    m.def("fit_normalizer",
          [](SbnModel& model, const HourlySeries& series, std::int64_t first, std::int64_t last) {
              model.normalizer = Normalizer::fit(series, first, last);
          },
          py::arg("model"), py::arg("series"), py::arg("first"), py::arg("last"));

    m.def("train",
          [](SbnModel& model, const HourlySeries& series, std::int64_t first, std::int64_t last,
             int epochs, int batch_size, double lr, double loss_weight_final,
             double loss_weight_earlier, std::uint64_t seed, const std::string& mode,
             bool detach_history) {
              const TrainConfig cfg =
                  train_config_from_kwargs(epochs, batch_size, lr, loss_weight_final,
                                           loss_weight_earlier, seed, mode, detach_history);
              model.normalizer = Normalizer::fit(series, first, last);
              const SampleSet samples = build_samples(series, model, first, last);
              const TrainResult result = train(model, samples, cfg);
              std::vector<py::dict> history;
              for (const auto& e : result.history) {
                  py::dict d;
                  d["phase"] = e.phase;
                  d["epoch"] = e.epoch;
                  d["stage_mse"] = e.stage_mse;
                  d["weighted_loss"] = e.weighted_loss;
                  d["lr_after"] = e.lr_after;
                  history.push_back(std::move(d));
              }
              return history;
          },
          py::arg("model"), py::arg("series"), py::arg("first"), py::arg("last"),
          py::arg("epochs") = 100, py::arg("batch_size") = 256, py::arg("lr") = 0.0025,
          py::arg("loss_weight_final") = 0.9, py::arg("loss_weight_earlier") = 0.1,
          py::arg("seed") = 0, py::arg("mode") = "joint_weighted",
          py::arg("detach_history") = false);

    m.def("forecast",
          [](const SbnModel& model, const HourlySeries& series, std::int64_t origin, int horizon) {
              std::vector<py::dict> out;
              for (const auto& o : forecast(model, series, origin, horizon)) {
                  py::dict d;
                  d["hour"] = o.hour;
                  d["timestamp"] = series.time_at(o.hour).to_string();
                  d["forecasts"] = o.forecasts;
                  d["corrections"] = o.corrections;
                  out.push_back(std::move(d));
              }
              return out;
          },
          py::arg("model"), py::arg("series"), py::arg("origin"), py::arg("horizon") = 24);

    m.def("evaluate",
          [](const SbnModel& model, const HourlySeries& series, std::int64_t eval_first,
             std::int64_t eval_last, int horizon, bool literal_mse) {
              return report_to_dict(rolling_evaluate(
                  model, series, eval_first, eval_last, horizon,
                  literal_mse ? NrmseKind::mse_over_range : NrmseKind::rmse_over_range));
          },
          py::arg("model"), py::arg("series"), py::arg("eval_first"), py::arg("eval_last"),
          py::arg("horizon") = 24, py::arg("literal_mse") = false);

    m.def("nrmse",
          [](const std::vector<double>& pred, const std::vector<double>& actual, bool literal_mse) {
              return nrmse(pred, actual,
                           literal_mse ? NrmseKind::mse_over_range : NrmseKind::rmse_over_range);
          },
          py::arg("pred"), py::arg("actual"), py::arg("literal_mse") = false);

    m.def("seasonal_naive", &seasonal_naive, py::arg("series"), py::arg("t"));

    m.def("historical_residuals",
          [](const SbnModel& model, const HourlySeries& series,
             const std::vector<std::int64_t>& hours, int upto_stage) {
              return historical_residuals(model, series, hours, upto_stage);
          },
          py::arg("model"), py::arg("series"), py::arg("hours"), py::arg("upto_stage"));

    m.def("first_feasible_target", &first_feasible_target, py::arg("model"), py::arg("series"));

    m.def("save_model",
          [](const SbnModel& model, const std::string& path) { save_model(model, path); },
          py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));
    m.def("serialize_model",
          [](const SbnModel& model) { return serialize_model(model); }, py::arg("model"));
}
