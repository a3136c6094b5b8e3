#pragma once

// On-disk formats: cycle CSV, scenario sidecar, run configuration, calibration
// report, predicted-force CSV and metrics. JSON keys carry their units; angles
// are radians on disk, and configs also accept an explicit `_deg` twin.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "feecal/calibration.hpp"
#include "feecal/synthetic.hpp"

namespace feecal::io {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

// ---- cycle CSV: t_s,x_m,z_m,rho_rad,ft_obs_N,fn_obs_N ----------------------

struct CycleTable {
  std::vector<TrajectorySample> samples;
  std::vector<double> f_t;
  std::vector<double> f_n;
};

std::string cycle_csv(const CycleDataset& dataset);

/// Throws InvalidArgument naming a missing column or the offending line.
CycleTable parse_cycle_csv(const std::string& text);
CycleTable read_cycle_csv(const std::filesystem::path& path);

/// `<dir>/<stem>.scenario.json` next to a cycle CSV.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

// ---- predicted forces ------------------------------------------------------

std::string predicted_csv(const NextCyclePrediction& prediction);

/// Forces from either a cycle CSV (ft_obs_N, fn_obs_N) or a predicted CSV
/// (ft_pred_N, fn_pred_N).
struct ForceTable {
  std::vector<double> t;
  std::vector<double> f_t;
  std::vector<double> f_n;
};

ForceTable read_force_table(const std::filesystem::path& path);

// ---- JSON ------------------------------------------------------------------

json to_json(const SoilParameters& soil);
SoilParameters soil_from_json(const json& j, const std::string& where);

json to_json(const Scenario& scenario);
Scenario scenario_from_json(const json& j, const std::string& where = "scenario");

json to_json(const ErrorMetric& metric);
json to_json(const CalibrationReport& report, const CycleDataset& dataset);

/// theta_star of a report file.
SoilParameters report_theta(const json& report);

json metrics_json(const ForceTable& predicted, const ForceTable& observed);

json to_json(const SoilPreset& preset);
json preset_catalog_json();

// ---- run configuration -----------------------------------------------------

struct TruthSpec {
  std::optional<SoilParameters> parameters;
  std::string strength = "Well-graded sand";
  std::string compaction = "Dry Sand LLL";
  std::optional<double> delta;

  SoilParameters resolve() const;
};

struct RunConfig {
  Scenario scenario = Scenario::default_training();
  TruthSpec truth;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string method = "multi";
  CalibrationOptions calibration;
  std::string output_dir = "out";
};

/// Rejects unknown keys, wrong types and out-of-range values with
/// InvalidArgument naming the field.
RunConfig config_from_json(const json& j);
RunConfig read_config(const std::filesystem::path& path);
json to_json(const RunConfig& config);

json read_json(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace feecal::io
