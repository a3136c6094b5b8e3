#include "feecal/calibration.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <utility>

#include "feecal/errors.hpp"

namespace feecal {

namespace {

using Theta = std::array<double, SoilParameters::kSize>;
using Clock = std::chrono::steady_clock;

// Slots of SoilParameters::to_array().
enum Slot : int { kGamma = 0, kCohesion, kAdhesion, kPhi, kDelta, kKc, kKphi, kN };

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double peak_abs(std::span<const double> series) {
  double peak = 0.0;
  for (double v : series) peak = std::max(peak, std::abs(v));
  return peak;
}

// Per-sample geometry of the training cycle plus the subset the objectives use.
struct Prepared {
  const CycleDataset* data = nullptr;
  std::vector<SampleGeometry> geometry;
  std::vector<std::size_t> in_soil;
  double alpha = 0.0;
};

Prepared prepare(const CycleDataset& dataset) {
  dataset.validate();
  Prepared p;
  p.data = &dataset;
  p.geometry = sample_geometry(dataset.samples, dataset.surface);
  p.alpha = dataset.surface.alpha();
  for (std::size_t i = 0; i < p.geometry.size(); ++i) {
    if (p.geometry[i].in_soil()) p.in_soil.push_back(i);
  }
  return p;
}

// Bearing factors of every in-soil sample for one (phi, delta). Finite
// differences revisit the same angles many times, so a few recent entries
// are kept.
class FactorCache {
 public:
  struct Entry {
    double phi = 0.0;
    double delta = 0.0;
    std::vector<BearingFactors> factors;  // aligned with Prepared::in_soil
    std::vector<char> ok;
  };

  FactorCache(const Prepared& prepared, const FeasibilityMargins& margins)
      : prepared_(prepared), margins_(margins) {}

  const Entry& get(double phi, double delta) {
    for (const Entry& e : entries_) {
      if (e.phi == phi && e.delta == delta) return e;
    }
    Entry e;
    e.phi = phi;
    e.delta = delta;
    e.factors.resize(prepared_.in_soil.size());
    e.ok.assign(prepared_.in_soil.size(), 0);
    for (std::size_t k = 0; k < prepared_.in_soil.size(); ++k) {
      const double rho = prepared_.geometry[prepared_.in_soil[k]].rho;
      try {
        if (rho < margins_.rho_min) continue;
        const double beta = solve_beta(prepared_.alpha, rho, phi, delta, margins_);
        e.factors[k] = bearing_factors_canonical(prepared_.alpha, beta, rho, phi, delta, margins_);
        e.ok[k] = 1;
      } catch (const Error&) {
        // Dropped from the objective for this (phi, delta).
      }
    }
    entries_.push_front(std::move(e));
    if (entries_.size() > kCapacity) entries_.pop_back();
    return entries_.front();
  }

 private:
  static constexpr std::size_t kCapacity = 8;
  const Prepared& prepared_;
  FeasibilityMargins margins_;
  std::deque<Entry> entries_;
};

// Stage parameters live in the unit box; this maps them onto the full vector.
struct Subspace {
  std::vector<int> slots;
  Theta lower{};
  Theta upper{};

  Subspace(std::vector<int> s, const ParameterBounds& bounds) : slots(std::move(s)) {
    for (std::size_t i = 0; i < SoilParameters::kSize; ++i) {
      lower[i] = bounds.ranges[i].min;
      upper[i] = bounds.ranges[i].max;
    }
  }

  Theta expand(const optim::Vector& u, Theta base) const {
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const int s = slots[k];
      base[s] = lower[s] + u[static_cast<Eigen::Index>(k)] * (upper[s] - lower[s]);
    }
    return base;
  }

  optim::Vector reduce(const Theta& theta) const {
    optim::Vector u(static_cast<Eigen::Index>(slots.size()));
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const int s = slots[k];
      const double width = upper[s] - lower[s];
      u[static_cast<Eigen::Index>(k)] = width > 0.0 ? (theta[s] - lower[s]) / width : 0.0;
    }
    return u.cwiseMax(0.0).cwiseMin(1.0);
  }

  optim::Box unit_box() const {
    const auto n = static_cast<Eigen::Index>(slots.size());
    return {optim::Vector::Zero(n), optim::Vector::Ones(n)};
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (int s : slots) out.emplace_back(SoilParameters::names()[s]);
    return out;
  }
};

SoilParameters to_soil(const Theta& theta) { return SoilParameters::from_array(theta); }

struct StageRun {
  StageResult result;
  Theta theta{};
};

// Multi-start over the subspace; `objective` sees the full parameter vector.
StageRun run_stage(std::string name, const Subspace& space, const Theta& base,
                   const std::function<double(const Theta&)>& objective,
                   const optim::SolverOptions& solver, std::span<const optim::Vector> warm = {}) {
  const auto start = Clock::now();
  const optim::Objective f = [&](const optim::Vector& u) { return objective(space.expand(u, base)); };
  const optim::SolveResult r = optim::multi_start(f, space.unit_box(), solver, warm);

  StageRun run;
  run.theta = space.expand(r.x_star, base);
  StageResult& s = run.result;
  s.name = std::move(name);
  s.parameter_names = space.names();
  for (int slot : space.slots) s.values.push_back(run.theta[slot]);
  s.objective = r.objective_value;
  s.iterations = r.iterations;
  s.function_evaluations = r.function_evaluations;
  s.starts_tried = r.starts_tried;
  s.converged = r.converged;
  s.stop_reason = optim::to_string(r.reason);
  s.wall_time_s = seconds_since(start);
  return run;
}

// Least-squares scale so the normalized objective is O(1) regardless of force magnitude.
double sse_scale(std::size_t count, double peak) {
  const double p = peak > 0.0 ? peak : 1.0;
  return static_cast<double>(std::max<std::size_t>(count, 1)) * p * p;
}

double stage1_tangential(const SampleGeometry& g, double f_n_obs, const SoilParameters& soil,
                         const LoaderParameters& loader) {
  return loader.omega * loader.b * bekker_pressure(g.depth, soil, loader) +
         f_n_obs * std::tan(soil.delta) + soil.adhesion_ca * loader.omega * g.lt;
}

const std::vector<int> kStage1Slots = {kAdhesion, kDelta, kKc, kKphi, kN};
const std::vector<int> kStage2Slots = {kGamma, kCohesion, kPhi};
const std::vector<int> kStage3Slots = {kKc, kKphi, kN};
const std::vector<int> kAllSlots = {kGamma, kCohesion, kAdhesion, kPhi, kDelta, kKc, kKphi, kN};

// Stage 1 body, shared with calibrate_multi_stage.
StageRun stage1(const Prepared& p, const Theta& base, const CalibrationOptions& opts) {
  if (p.in_soil.empty()) throw DegenerateDepths("no sample of the cycle is below the surface");
  const CycleDataset& d = *p.data;
  const double scale = sse_scale(p.in_soil.size(), peak_abs(d.f_t_obs));
  const auto objective = [&](const Theta& theta) {
    const SoilParameters soil = to_soil(theta);
    double sse = 0.0;
    for (std::size_t i : p.in_soil) {
      const double r = d.f_t_obs[i] - stage1_tangential(p.geometry[i], d.f_n_obs[i], soil, d.loader);
      sse += r * r;
    }
    return sse / scale;
  };
  StageRun run = run_stage("stage1", Subspace(kStage1Slots, opts.bounds), base, objective, opts.solver);

  const SoilParameters soil = to_soil(run.theta);
  std::vector<double> obs, pred;
  for (std::size_t i : p.in_soil) {
    obs.push_back(d.f_t_obs[i]);
    pred.push_back(stage1_tangential(p.geometry[i], d.f_n_obs[i], soil, d.loader));
  }
  run.result.target = "f_t";
  run.result.target_rmse = rmse(obs, pred);
  run.result.samples_used = p.in_soil.size();
  run.result.samples_excluded = d.size() - p.in_soil.size();
  return run;
}

StageRun stage2(const Prepared& p, const Theta& base, const CalibrationOptions& opts) {
  if (p.in_soil.empty()) throw DegenerateDepths("no sample of the cycle is below the surface");
  const CycleDataset& d = *p.data;
  const double delta = base[kDelta];
  const std::vector<double> filtered = gaussian_filter(d.f_n_obs, opts.gaussian_sigma);
  std::vector<double> target(p.in_soil.size());
  for (std::size_t k = 0; k < p.in_soil.size(); ++k) {
    target[k] = filtered[p.in_soil[k]] / std::cos(delta);
  }
  const double scale = sse_scale(p.in_soil.size(), peak_abs(target));
  FactorCache cache(p, opts.margins);

  const auto force = [&](const SoilParameters& soil, const FactorCache::Entry& e, std::size_t k) {
    const SampleGeometry& g = p.geometry[p.in_soil[k]];
    const double w = load_weight_from_area(g.area, soil.gamma, d.loader.omega);
    return fee_force(g.depth, w, e.factors[k], soil, d.loader);
  };
  const auto objective = [&](const Theta& theta) {
    const SoilParameters soil = to_soil(theta);
    const FactorCache::Entry& e = cache.get(soil.phi, soil.delta);
    double sse = 0.0;
    for (std::size_t k = 0; k < p.in_soil.size(); ++k) {
      if (!e.ok[k]) continue;
      const double r = target[k] - force(soil, e, k);
      sse += r * r;
    }
    return sse / scale;
  };
  StageRun run = run_stage("stage2", Subspace(kStage2Slots, opts.bounds), base, objective, opts.solver);

  const SoilParameters soil = to_soil(run.theta);
  const FactorCache::Entry& e = cache.get(soil.phi, soil.delta);
  std::vector<double> obs, pred;
  for (std::size_t k = 0; k < p.in_soil.size(); ++k) {
    if (!e.ok[k]) continue;
    obs.push_back(target[k]);
    pred.push_back(force(soil, e, k));
  }
  run.result.target = "fee_force";
  run.result.target_rmse = obs.empty() ? ErrorMetric{} : rmse(obs, pred);
  run.result.samples_used = obs.size();
  run.result.samples_excluded = d.size() - obs.size();
  return run;
}

StageRun stage3(const Prepared& p, const Theta& base, const CalibrationOptions& opts) {
  if (p.in_soil.empty()) throw DegenerateDepths("no sample of the cycle is below the surface");
  const CycleDataset& d = *p.data;
  const SoilParameters fixed = to_soil(base);
  FactorCache cache(p, opts.margins);
  const FactorCache::Entry& e = cache.get(fixed.phi, fixed.delta);

  // The earthmoving force does not depend on the compaction parameters.
  std::vector<std::size_t> used;
  std::vector<double> fee;
  for (std::size_t k = 0; k < p.in_soil.size(); ++k) {
    if (!e.ok[k]) continue;
    const SampleGeometry& g = p.geometry[p.in_soil[k]];
    const double w = load_weight_from_area(g.area, fixed.gamma, d.loader.omega);
    used.push_back(p.in_soil[k]);
    fee.push_back(fee_force(g.depth, w, e.factors[k], fixed, d.loader));
  }
  const double scale = sse_scale(used.size(), peak_abs(d.f_t_obs));
  const auto predict = [&](const SoilParameters& soil, std::size_t k) {
    const SampleGeometry& g = p.geometry[used[k]];
    return bucket_forces(fee[k], bekker_pressure(g.depth, soil, d.loader), g.lt, soil, d.loader).f_t;
  };
  const auto objective = [&](const Theta& theta) {
    const SoilParameters soil = to_soil(theta);
    double sse = 0.0;
    for (std::size_t k = 0; k < used.size(); ++k) {
      const double r = d.f_t_obs[used[k]] - predict(soil, k);
      sse += r * r;
    }
    return sse / scale;
  };

  const Subspace space(kStage3Slots, opts.bounds);
  const optim::Vector warm = space.reduce(base);
  StageRun run = run_stage("stage3", space, base, objective, opts.solver, std::span(&warm, 1));
  // The unit-box round trip can move the incumbent by an ulp; keep it unless
  // the solver strictly improved on it.
  if (!(objective(run.theta) < objective(base))) {
    run.theta = base;
    run.result.values.clear();
    for (int slot : space.slots) run.result.values.push_back(base[slot]);
    run.result.objective = objective(base);
  }

  const SoilParameters soil = to_soil(run.theta);
  std::vector<double> obs, pred;
  for (std::size_t k = 0; k < used.size(); ++k) {
    obs.push_back(d.f_t_obs[used[k]]);
    pred.push_back(predict(soil, k));
  }
  run.result.target = "f_t";
  run.result.target_rmse = obs.empty() ? ErrorMetric{} : rmse(obs, pred);
  run.result.samples_used = used.size();
  run.result.samples_excluded = d.size() - used.size();
  return run;
}

CalibrationReport finish_report(std::string method, const CycleDataset& dataset, const Theta& theta,
                                std::vector<StageResult> stages, const CalibrationOptions& opts,
                                Clock::time_point start) {
  CalibrationReport report;
  report.method = std::move(method);
  report.theta_star = to_soil(theta);
  report.stages = std::move(stages);
  for (const StageResult& s : report.stages) report.function_evaluations += s.function_evaluations;

  const CycleFit fit = evaluate_fit(dataset, report.theta_star, opts.margins);
  report.rmse_ft = fit.ft;
  report.rmse_fn = fit.fn;
  report.rmse_fr = fit.fr;
  report.samples_total = dataset.size();
  for (const SamplePrediction& s : fit.prediction.samples) {
    report.fitted_ft.push_back(s.force.f_t);
    report.fitted_fn.push_back(s.force.f_n);
    if (!s.in_soil) ++report.samples_out_of_soil;
    if (!s.valid) ++report.samples_invalid;
  }
  report.wall_time_s = seconds_since(start);
  return report;
}

Theta center_theta(const CalibrationOptions& opts) { return opts.bounds.center().to_array(); }

}  // namespace

void CalibrationOptions::validate() const {
  if (!(lambda_weight >= 0.0 && lambda_weight <= 1.0)) {
    throw InvalidArgument("lambda_weight must lie in [0, 1]");
  }
  if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma)) {
    throw InvalidArgument("gaussian_sigma must be finite and >= 0");
  }
  bounds.validate();
  solver.validate();
  margins.validate();
}

std::vector<double> gaussian_filter(std::span<const double> series, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("gaussian sigma must be finite and >= 0");
  }
  std::vector<double> out(series.begin(), series.end());
  if (sigma == 0.0 || series.empty()) return out;

  const auto radius = static_cast<long>(std::floor(4.0 * sigma + 0.5));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long k = -radius; k <= radius; ++k) {
    const double x = static_cast<double>(k) / sigma;
    kernel[static_cast<std::size_t>(k + radius)] = std::exp(-0.5 * x * x);
    total += kernel[static_cast<std::size_t>(k + radius)];
  }
  for (double& w : kernel) w /= total;

  const auto n = static_cast<long>(series.size());
  const long period = 2 * n;
  const auto mirror = [&](long i) {
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
  };
  for (long i = 0; i < n; ++i) {
    double acc = 0.0;
    for (long k = -radius; k <= radius; ++k) {
      acc += kernel[static_cast<std::size_t>(k + radius)] *
             series[static_cast<std::size_t>(mirror(i + k))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

ErrorMetric rmse(std::span<const double> observed, std::span<const double> predicted) {
  if (observed.empty()) throw EmptySeries("rmse of an empty series");
  if (observed.size() != predicted.size()) {
    throw InvalidArgument("rmse series lengths differ: " + std::to_string(observed.size()) +
                          " vs " + std::to_string(predicted.size()));
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double r = observed[i] - predicted[i];
    sse += r * r;
  }
  ErrorMetric m;
  m.absolute = std::sqrt(sse / static_cast<double>(observed.size()));
  m.peak = peak_abs(observed);
  if (m.peak > 0.0) {
    m.percent = 100.0 * m.absolute / m.peak;
  } else {
    m.percent = m.absolute == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return m;
}

double resultant(double f_t, double f_n) { return std::hypot(f_t, f_n); }

CycleFit evaluate_fit(const CycleDataset& dataset, const SoilParameters& soil,
                      const FeasibilityMargins& margins) {
  dataset.validate();
  CycleFit fit;
  fit.geometry = sample_geometry(dataset.samples, dataset.surface);
  const std::vector<WedgeState> wedges = wedge_states(fit.geometry, soil.gamma, dataset.loader.omega);
  fit.prediction =
      predict_cycle_forces(wedges, soil, dataset.loader, dataset.surface.alpha(), margins);

  std::vector<double> ot, on, orr, pt, pn, pr;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const SamplePrediction& s = fit.prediction.samples[i];
    if (!s.valid) continue;
    ot.push_back(dataset.f_t_obs[i]);
    on.push_back(dataset.f_n_obs[i]);
    orr.push_back(resultant(dataset.f_t_obs[i], dataset.f_n_obs[i]));
    pt.push_back(s.force.f_t);
    pn.push_back(s.force.f_n);
    pr.push_back(resultant(s.force.f_t, s.force.f_n));
  }
  if (ot.empty()) throw EmptySeries("no sample of the cycle could be evaluated");
  fit.ft = rmse(ot, pt);
  fit.fn = rmse(on, pn);
  fit.fr = rmse(orr, pr);
  return fit;
}

CalibrationReport calibrate_single_stage(const CycleDataset& dataset,
                                         const CalibrationOptions& opts) {
  opts.validate();
  const auto start = Clock::now();
  const Prepared p = prepare(dataset);
  const CycleDataset& d = dataset;
  const double lambda = opts.lambda_weight;
  // One common scale keeps lambda the relative weight of the two series; a
  // series with zero weight must not reach the objective through it either.
  const double scale = sse_scale(p.in_soil.size(),
                                 std::max(lambda > 0.0 ? peak_abs(d.f_t_obs) : 0.0,
                                          lambda < 1.0 ? peak_abs(d.f_n_obs) : 0.0));
  FactorCache cache(p, opts.margins);

  std::size_t used = 0;
  const auto objective = [&](const Theta& theta) {
    const SoilParameters soil = to_soil(theta);
    const FactorCache::Entry& e = cache.get(soil.phi, soil.delta);
    double sse_t = 0.0;
    double sse_n = 0.0;
    used = 0;
    for (std::size_t k = 0; k < p.in_soil.size(); ++k) {
      if (!e.ok[k]) continue;
      ++used;
      const std::size_t i = p.in_soil[k];
      const SampleGeometry& g = p.geometry[i];
      const double w = load_weight_from_area(g.area, soil.gamma, d.loader.omega);
      const double f = fee_force(g.depth, w, e.factors[k], soil, d.loader);
      const ForcePrediction fp =
          bucket_forces(f, bekker_pressure(g.depth, soil, d.loader), g.lt, soil, d.loader);
      const double rt = d.f_t_obs[i] - fp.f_t;
      const double rn = d.f_n_obs[i] - fp.f_n;
      sse_t += rt * rt;
      sse_n += rn * rn;
    }
    return (lambda * sse_t + (1.0 - lambda) * sse_n) / scale;
  };
  StageRun run = run_stage("single", Subspace(kAllSlots, opts.bounds), center_theta(opts),
                           objective, opts.solver);
  objective(run.theta);
  run.result.target = "weighted";
  run.result.samples_used = used;
  run.result.samples_excluded = d.size() - used;

  CalibrationReport report =
      finish_report("single-stage", dataset, run.theta, {}, opts, start);
  run.result.target_rmse = report.rmse_fr;
  report.stages.push_back(std::move(run.result));
  report.function_evaluations = report.stages.front().function_evaluations;
  return report;
}

StageResult calibrate_stage1(const CycleDataset& dataset, const CalibrationOptions& opts) {
  opts.validate();
  const Prepared p = prepare(dataset);
  return stage1(p, center_theta(opts), opts).result;
}

StageResult calibrate_stage2(const CycleDataset& dataset, const SoilParameters& fixed,
                             const CalibrationOptions& opts) {
  opts.validate();
  const Prepared p = prepare(dataset);
  return stage2(p, fixed.to_array(), opts).result;
}

StageResult calibrate_stage3(const CycleDataset& dataset, const SoilParameters& fixed,
                             const CalibrationOptions& opts) {
  opts.validate();
  const Prepared p = prepare(dataset);
  return stage3(p, fixed.to_array(), opts).result;
}

CalibrationReport calibrate_multi_stage(const CycleDataset& dataset,
                                        const CalibrationOptions& opts) {
  opts.validate();
  const auto start = Clock::now();
  const Prepared p = prepare(dataset);

  std::vector<StageResult> stages;
  Theta theta = center_theta(opts);
  const auto run_checked = [&](int index, auto&& body) {
    try {
      StageRun run = body(theta);
      theta = run.theta;
      stages.push_back(std::move(run.result));
    } catch (const SolverFailure& e) {
      throw SolverFailure("stage " + std::to_string(index) + ": " + e.what());
    }
  };
  run_checked(1, [&](const Theta& t) { return stage1(p, t, opts); });
  run_checked(2, [&](const Theta& t) { return stage2(p, t, opts); });
  CalibrationOptions refine = opts;
  refine.lambda_weight = 1.0;
  run_checked(3, [&](const Theta& t) { return stage3(p, t, refine); });

  return finish_report("multi-stage", dataset, theta, std::move(stages), opts, start);
}

NextCyclePrediction predict_next_cycle(const SoilParameters& theta_star, const Scenario& scenario,
                                       std::optional<std::span<const TrajectorySample>>
                                           prior_cycle) {
  theta_star.validate();
  Scenario carved = scenario;
  if (prior_cycle) carved.surface = surface_after_cycle(scenario.surface, *prior_cycle);
  carved.validate();

  NextCyclePrediction out;
  out.surface = carved.surface;
  out.samples = carved.trajectory();
  out.geometry = sample_geometry(out.samples, carved.surface);
  const std::vector<WedgeState> wedges =
      wedge_states(out.geometry, theta_star.gamma, carved.loader.omega);
  out.prediction = predict_cycle_forces(wedges, theta_star, carved.loader, carved.surface.alpha(),
                                        carved.margins);
  return out;
}

}  // namespace feecal
