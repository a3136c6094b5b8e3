#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "feecal/calibration.hpp"
#include "feecal/errors.hpp"
#include "feecal/io.hpp"
#include "feecal/synthetic.hpp"

namespace feecal::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("feecal", sink);
  logger->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("FEE_CALIB_LOG")) {
    const auto parsed = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept it when asked for.
    if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
  }
  logger->set_level(level);
  return logger;
}

std::string trim(std::string s) {
  const auto keep = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), keep));
  s.erase(std::find_if(s.rbegin(), s.rend(), keep).base(), s.end());
  return s;
}

// "STRENGTH+COMPACTION", or one name completed with the default of the other kind.
io::TruthSpec truth_from_preset(const std::string& spec) {
  io::TruthSpec truth;
  const auto plus = spec.find('+');
  if (plus != std::string::npos) {
    truth.strength = trim(spec.substr(0, plus));
    truth.compaction = trim(spec.substr(plus + 1));
  } else {
    const SoilPreset& p = find_preset(trim(spec));
    if (p.group == PresetGroup::PressureSinkage) {
      truth.compaction = p.name;
    } else {
      truth.strength = p.name;
    }
  }
  truth.resolve();
  return truth;
}

// A scenario file, or a cycle sidecar holding one. Unlike a config section it
// must name its path; there is nothing sensible to default to.
Scenario scenario_file(const fs::path& path) {
  const json j = io::read_json(path);
  const bool sidecar = j.is_object() && j.contains("scenario");
  const json& s = sidecar ? j.at("scenario") : j;
  const std::string where = path.filename().string() + (sidecar ? ".scenario" : "");
  if (!s.is_object() || !s.contains("path")) throw InvalidArgument(where + ": missing 'path'");
  return io::scenario_from_json(s, where);
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::string preset;
  std::string method;
  std::string cycle;
  std::string report;
  std::string scenario;
  std::string prior_cycle;
  std::string predicted;
  std::string observed;
};

io::RunConfig load_config(const Options& o) {
  if (o.config.empty()) {
    io::RunConfig c;
    c.calibration.margins = c.scenario.margins;
    return c;
  }
  return io::read_config(o.config);
}

fs::path output_dir(const Options& o, const io::RunConfig& c) {
  return o.out.empty() ? fs::path(c.output_dir) : fs::path(o.out);
}

int cmd_simulate(const Options& o, std::ostream& out, spdlog::logger& log) {
  io::RunConfig c = load_config(o);
  if (!o.preset.empty()) c.truth = truth_from_preset(o.preset);
  if (o.seed) c.seed = *o.seed;
  if (o.noise) {
    if (*o.noise < 0.0) throw InvalidArgument("--noise must be >= 0");
    c.noise = *o.noise;
  }
  const SoilParameters truth = c.truth.resolve();
  const fs::path dir = output_dir(o, c);

  log.info("simulating {} samples", c.scenario.sample_count());
  CycleDataset data = simulate_cycle(c.scenario, truth);
  data = add_noise(data, c.noise, c.seed);

  const fs::path csv = dir / "cycle.csv";
  json sidecar = {{"schema_version", io::kSchemaVersion},
                  {"scenario", io::to_json(c.scenario)},
                  {"truth", io::to_json(truth)},
                  {"noise", c.noise},
                  {"seed", c.seed}};
  io::write_text(csv, io::cycle_csv(data));
  io::write_text(io::sidecar_path(csv), sidecar.dump(2) + "\n");
  out << csv.string() << "\n";
  return kExitOk;
}

int cmd_calibrate(const Options& o, std::ostream& out, spdlog::logger& log) {
  io::RunConfig c = load_config(o);
  if (!o.method.empty()) c.method = o.method;
  if (c.method != "single" && c.method != "multi") {
    throw InvalidArgument("--method must be 'single' or 'multi'");
  }
  if (o.seed) c.calibration.solver.seed = *o.seed;

  const io::CycleTable table = io::read_cycle_csv(o.cycle);
  Scenario scenario = c.scenario;
  const fs::path sidecar = io::sidecar_path(o.cycle);
  if (fs::exists(sidecar)) {
    scenario = scenario_file(sidecar);
  } else if (o.config.empty()) {
    throw InvalidArgument("no scenario: expected '" + sidecar.string() + "' or --config");
  }
  CycleDataset data;
  data.samples = table.samples;
  data.f_t_obs = table.f_t;
  data.f_n_obs = table.f_n;
  data.surface = scenario.surface;
  data.loader = scenario.loader;
  data.validate();
  c.calibration.margins = scenario.margins;
  c.calibration.validate();
  const fs::path dir = output_dir(o, c);

  log.info("calibrating {} samples with the {}-stage method", data.size(), c.method);
  try {
    const CalibrationReport report = c.method == "single"
                                         ? calibrate_single_stage(data, c.calibration)
                                         : calibrate_multi_stage(data, c.calibration);
    json j = io::to_json(report, data);
    j["status"] = "ok";
    j["input"] = o.cycle;
    io::write_text(dir / "report.json", j.dump(2) + "\n");
    log.info("F_R RMSE {:.3f} N ({:.3f} %)", report.rmse_fr.absolute, report.rmse_fr.percent);
  } catch (const SolverFailure& e) {
    const json j = {{"schema_version", io::kSchemaVersion},
                    {"status", "failed"},
                    {"method", c.method == "single" ? "single-stage" : "multi-stage"},
                    {"input", o.cycle},
                    {"error", e.what()}};
    io::write_text(dir / "report.json", j.dump(2) + "\n");
    throw;
  }
  out << (dir / "report.json").string() << "\n";
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, spdlog::logger& log) {
  const SoilParameters theta = io::report_theta(io::read_json(o.report));
  Scenario scenario;
  io::RunConfig c = load_config(o);
  if (!o.scenario.empty()) {
    scenario = scenario_file(o.scenario);
  } else if (!o.config.empty()) {
    scenario = c.scenario;
  } else {
    throw InvalidArgument("predict needs --scenario or --config");
  }
  std::optional<io::CycleTable> prior;
  if (!o.prior_cycle.empty()) prior = io::read_cycle_csv(o.prior_cycle);
  const fs::path dir = output_dir(o, c);

  NextCyclePrediction p =
      prior ? predict_next_cycle(theta, scenario, std::span<const TrajectorySample>(prior->samples))
            : predict_next_cycle(theta, scenario);
  io::write_text(dir / "predicted.csv", io::predicted_csv(p));
  out << (dir / "predicted.csv").string() << "\n";
  if (!p.prediction.ok()) {
    for (const SampleIssue& issue : p.prediction.issues) {
      log.error("sample {}: {}", issue.index, issue.message);
    }
    return kExitCompute;
  }
  return kExitOk;
}

int cmd_evaluate(const Options& o, std::ostream& out, spdlog::logger&) {
  const io::ForceTable predicted = io::read_force_table(o.predicted);
  const io::ForceTable observed = io::read_force_table(o.observed);
  const json metrics = io::metrics_json(predicted, observed);
  if (!o.out.empty()) io::write_text(fs::path(o.out) / "metrics.json", metrics.dump(2) + "\n");
  out << metrics.dump(2) << "\n";
  return kExitOk;
}

int cmd_presets(const Options& o, std::ostream& out, spdlog::logger&) {
  const std::string text = io::preset_catalog_json().dump(2) + "\n";
  if (!o.out.empty()) {
    io::write_text(o.out, text);
  } else {
    out << text;
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto log = make_logger(err);
  Options o;

  CLI::App app{"Soil-parameter calibration and excavation force prediction"};
  app.require_subcommand(1);
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cycle (CSV + scenario sidecar)");
  simulate->add_option("--config", o.config, "Run configuration JSON");
  simulate->add_option("--preset", o.preset, "Truth soil: NAME or STRENGTH+COMPACTION");
  simulate->add_option("--seed", o.seed, "Noise seed");
  simulate->add_option("--noise", o.noise, "Relative noise level (fraction of peak)");
  simulate->add_option("--out", o.out, "Output directory");

  auto* calibrate = app.add_subcommand("calibrate", "Fit soil parameters to a cycle CSV");
  calibrate->add_option("cycle", o.cycle, "Cycle CSV")->required();
  calibrate->add_option("--config", o.config, "Run configuration JSON");
  calibrate->add_option("--method", o.method, "single or multi");
  calibrate->add_option("--seed", o.seed, "Multi-start seed");
  calibrate->add_option("--out", o.out, "Output directory");

  auto* predict = app.add_subcommand("predict", "Predict forces along a scenario path");
  predict->add_option("--report", o.report, "Calibration report JSON")->required();
  predict->add_option("--scenario", o.scenario, "Scenario JSON or cycle sidecar");
  predict->add_option("--config", o.config, "Run configuration JSON");
  predict->add_option("--prior-cycle", o.prior_cycle, "Cycle CSV that carved the surface");
  predict->add_option("--out", o.out, "Output directory");

  auto* evaluate = app.add_subcommand("evaluate", "RMSE of predicted against observed forces");
  evaluate->add_option("predicted", o.predicted, "Predicted CSV")->required();
  evaluate->add_option("observed", o.observed, "Observed cycle CSV")->required();
  evaluate->add_option("--out", o.out, "Output directory for metrics.json");

  auto* presets = app.add_subcommand("presets", "Print the bundled soil catalog");
  presets->add_option("--out", o.out, "Write to this file instead of stdout");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o, out, *log);
    if (calibrate->parsed()) return cmd_calibrate(o, out, *log);
    if (predict->parsed()) return cmd_predict(o, out, *log);
    if (evaluate->parsed()) return cmd_evaluate(o, out, *log);
    if (presets->parsed()) return cmd_presets(o, out, *log);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const EmptySeries& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const SampleErrors& e) {
    err << "error: " << e.what() << "\n";
    for (const auto& entry : e.entries()) err << "  sample " << entry.index << ": " << entry.message << "\n";
    return kExitCompute;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCompute;
  }
  return kExitInput;
}

}  // namespace feecal::cli
