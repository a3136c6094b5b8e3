#pragma once

// Soil-parameter identification from one loading cycle: the single-stage
// weighted least-squares baseline, the three-stage decomposition, Gaussian
// pre-filtering, RMSE metrics and force prediction on a later cycle.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "feecal/geometry.hpp"
#include "feecal/optimizer.hpp"
#include "feecal/soil.hpp"
#include "feecal/synthetic.hpp"

namespace feecal {

struct CalibrationOptions {
  double lambda_weight = 0.5;  ///< weight of the tangential residuals
  ParameterBounds bounds = ParameterBounds::defaults();
  optim::SolverOptions solver;
  double gaussian_sigma = 5.0;  ///< samples
  FeasibilityMargins margins;

  void validate() const;
};

/// RMSE with its percent taken against the peak |observed| of the series.
struct ErrorMetric {
  double absolute = 0.0;  ///< N
  double percent = 0.0;   ///< 100 * absolute / peak; +inf when peak is 0 and absolute is not
  double peak = 0.0;      ///< N
};

struct StageResult {
  std::string name;
  std::vector<std::string> parameter_names;
  std::vector<double> values;  ///< base SI, same order as parameter_names
  double objective = 0.0;      ///< normalized least-squares value at the optimum
  int iterations = 0;
  long function_evaluations = 0;
  int starts_tried = 0;
  bool converged = false;
  std::string stop_reason;
  double wall_time_s = 0.0;
  std::string target;          ///< series the stage fits: f_t, fee_force or weighted
  ErrorMetric target_rmse;
  std::size_t samples_used = 0;
  std::size_t samples_excluded = 0;
};

struct CalibrationReport {
  std::string method;  ///< "single-stage" or "multi-stage"
  SoilParameters theta_star;
  std::vector<StageResult> stages;
  ErrorMetric rmse_ft, rmse_fn, rmse_fr;
  std::vector<double> fitted_ft, fitted_fn;
  long function_evaluations = 0;
  double wall_time_s = 0.0;
  std::size_t samples_total = 0;
  std::size_t samples_out_of_soil = 0;
  std::size_t samples_invalid = 0;
};

/// Kernel truncated at round(4 sigma), renormalized, with mirror padding that
/// repeats the edge sample. sigma = 0 returns the input.
std::vector<double> gaussian_filter(std::span<const double> series, double sigma);

/// Throws EmptySeries on empty input, InvalidArgument on length mismatch.
ErrorMetric rmse(std::span<const double> observed, std::span<const double> predicted);

double resultant(double f_t, double f_n);

/// Forces of `soil` on the dataset's own trajectory and surface, with RMSEs
/// against the raw observations over every evaluable sample.
struct CycleFit {
  CyclePrediction prediction;
  std::vector<SampleGeometry> geometry;
  ErrorMetric ft, fn, fr;
};

CycleFit evaluate_fit(const CycleDataset& dataset, const SoilParameters& soil,
                      const FeasibilityMargins& margins = {});

CalibrationReport calibrate_single_stage(const CycleDataset& dataset,
                                         const CalibrationOptions& opts = {});

/// theta1 = [C_a, delta, k_c, k_phi, n] from the tangential force alone, with
/// the observed normal force standing in for F cos(delta). Throws
/// DegenerateDepths when no sample is in soil.
StageResult calibrate_stage1(const CycleDataset& dataset, const CalibrationOptions& opts = {});

/// theta2 = [gamma, C, phi] against the filtered normal force divided by
/// cos(delta*), with C_a* and delta* held fixed.
StageResult calibrate_stage2(const CycleDataset& dataset, const SoilParameters& fixed,
                             const CalibrationOptions& opts = {});

/// theta3 = [k_c, k_phi, n] on the tangential force alone, everything else
/// fixed. `fixed` also supplies the warm start.
StageResult calibrate_stage3(const CycleDataset& dataset, const SoilParameters& fixed,
                             const CalibrationOptions& opts = {});

CalibrationReport calibrate_multi_stage(const CycleDataset& dataset,
                                        const CalibrationOptions& opts = {});

struct NextCyclePrediction {
  SurfaceModel surface;  ///< surface the depths were measured against
  std::vector<TrajectorySample> samples;
  std::vector<SampleGeometry> geometry;
  CyclePrediction prediction;
};

/// Forces along `scenario`'s path. When a prior trajectory is given the
/// surface is first carved by it and depth, blade angle and swept load are
/// measured against the carved surface.
NextCyclePrediction predict_next_cycle(const SoilParameters& theta_star, const Scenario& scenario,
                                       std::optional<std::span<const TrajectorySample>>
                                           prior_cycle = std::nullopt);

}  // namespace feecal
