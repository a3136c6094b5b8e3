#include "feecal/soil.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include <boost/math/tools/minima.hpp>

#include "feecal/errors.hpp"

namespace feecal {

namespace {

constexpr double kPi = std::numbers::pi;

// Denominators of the cotangent form are rejected below this magnitude.
constexpr double kMachineThreshold = 64.0 * std::numeric_limits<double>::epsilon();

void require_finite(double value, std::string_view name) {
  if (!std::isfinite(value)) {
    throw InvalidArgument(std::string(name) + " must be finite");
  }
}

void check_margin(std::string_view term, double value, double margin) {
  if (!(std::abs(value) > margin)) {
    throw SingularGeometry(std::string(term), std::abs(value), margin);
  }
}

}  // namespace

std::array<double, SoilParameters::kSize> SoilParameters::to_array() const {
  return {gamma, cohesion_c, adhesion_ca, phi, delta, kc, kphi, n};
}

SoilParameters SoilParameters::from_array(std::span<const double, kSize> v) {
  return SoilParameters{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

const std::array<std::string_view, SoilParameters::kSize>& SoilParameters::names() {
  static const std::array<std::string_view, kSize> kNames{
      "gamma", "cohesion_c", "adhesion_ca", "phi", "delta", "kc", "kphi", "n"};
  return kNames;
}

void SoilParameters::validate() const {
  const auto values = to_array();
  for (std::size_t i = 0; i < kSize; ++i) require_finite(values[i], names()[i]);
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (cohesion_c < 0.0) throw InvalidArgument("cohesion_c must be non-negative");
  if (adhesion_ca < 0.0) throw InvalidArgument("adhesion_ca must be non-negative");
  if (phi < 0.0 || phi >= kPi / 2) throw InvalidArgument("phi must lie in [0, pi/2)");
  if (delta < 0.0 || delta >= kPi / 2) throw InvalidArgument("delta must lie in [0, pi/2)");
  if (kc < 0.0) throw InvalidArgument("kc must be non-negative");
  if (kphi < 0.0) throw InvalidArgument("kphi must be non-negative");
  if (!(n > 0.0)) throw InvalidArgument("n must be positive");
}

double Interval::clamp(double value) const { return std::clamp(value, min, max); }

ParameterBounds ParameterBounds::defaults() {
  ParameterBounds bounds;
  bounds.ranges = {Interval{1297.0, 2345.0}, Interval{0.0, 50000.0}, Interval{0.0, 50000.0},
                   Interval{0.0, 0.785},     Interval{0.0, 0.785},   Interval{0.0, 10000.0},
                   Interval{0.0, 5.0e6},     Interval{0.11, 1.53}};
  return bounds;
}

bool ParameterBounds::contains(const SoilParameters& soil) const {
  const auto values = soil.to_array();
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) {
    if (!ranges[i].contains(values[i])) return false;
  }
  return true;
}

SoilParameters ParameterBounds::clamp(const SoilParameters& soil) const {
  auto values = soil.to_array();
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) values[i] = ranges[i].clamp(values[i]);
  return SoilParameters::from_array(values);
}

SoilParameters ParameterBounds::center() const {
  std::array<double, SoilParameters::kSize> values{};
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) values[i] = ranges[i].center();
  return SoilParameters::from_array(values);
}

void ParameterBounds::validate() const {
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) {
    const auto name = SoilParameters::names()[i];
    require_finite(ranges[i].min, name);
    require_finite(ranges[i].max, name);
    if (ranges[i].min > ranges[i].max) {
      throw InvalidArgument("bounds for " + std::string(name) + " have min > max");
    }
  }
}

void LoaderParameters::validate() const {
  require_finite(omega, "omega");
  require_finite(b, "b");
  require_finite(wb, "wb");
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  if (!(b > 0.0)) throw InvalidArgument("b must be positive");
  if (wb < 0.0) throw InvalidArgument("wb must be non-negative");
}

void FeasibilityMargins::validate() const {
  for (double v : {eps1, eps2, denominator, rho_min, alpha_max}) {
    require_finite(v, "margin");
    if (!(v > 0.0)) throw InvalidArgument("margins must be positive");
  }
  if (alpha_max >= kPi / 2) throw InvalidArgument("alpha_max must be below pi/2");
}

BearingFactors bearing_factors_original(double alpha, double beta, double rho, double phi,
                                        double delta) {
  check_margin("sin(beta)", std::sin(beta), kMachineThreshold);
  check_margin("sin(beta + phi)", std::sin(beta + phi), kMachineThreshold);
  check_margin("sin(rho)", std::sin(rho), kMachineThreshold);
  check_margin("cos(alpha)", std::cos(alpha), kMachineThreshold);

  const double cot_beta = 1.0 / std::tan(beta);
  const double cot_beta_phi = 1.0 / std::tan(beta + phi);
  const double cot_rho = 1.0 / std::tan(rho);
  const double tan_alpha = std::tan(alpha);

  const double denom = std::cos(rho + delta) + std::sin(rho + delta) * cot_beta_phi;
  check_margin("cos(rho + delta) + sin(rho + delta) cot(beta + phi)", denom, kMachineThreshold);

  const double surcharge_num = std::cos(alpha) + std::sin(alpha) * cot_beta_phi;

  BearingFactors f;
  f.n_gamma = (cot_beta - tan_alpha) * surcharge_num / (2.0 * denom);
  f.n_c = (1.0 + cot_beta * cot_beta_phi) / denom;
  f.n_a = (1.0 - cot_rho * cot_beta_phi) / denom;
  f.n_q = surcharge_num / denom;
  return f;
}

BearingFactors bearing_factors_canonical(double alpha, double beta, double rho, double phi,
                                         double delta, const FeasibilityMargins& margins) {
  const double sin_beta = std::sin(beta);
  const double sin_rho = std::sin(rho);
  const double cos_alpha = std::cos(alpha);
  const double sin_beta_phi = std::sin(beta + phi);
  const double sin_total = std::sin(rho + delta + beta + phi);

  const double eps = margins.denominator;
  check_margin("sin(beta)", sin_beta, eps);
  check_margin("sin(rho)", sin_rho, eps);
  check_margin("cos(alpha)", cos_alpha, eps);
  check_margin("sin(beta + phi)", sin_beta_phi, eps);
  check_margin("sin(rho + delta + beta + phi)", sin_total, eps);

  const double sin_surcharge = std::sin(alpha + beta + phi);

  BearingFactors f;
  f.n_gamma = std::cos(alpha + beta) * sin_surcharge / (2.0 * cos_alpha * sin_beta * sin_total);
  f.n_c = std::cos(phi) / (sin_beta * sin_total);
  // The common sin(beta + phi) factor cancels; its margin is still enforced above.
  f.n_a = -std::cos(rho + beta + phi) / (sin_rho * sin_total);
  f.n_q = sin_surcharge / sin_total;
  return f;
}

double unit_weight_factor(double alpha, double beta, double rho, double phi, double delta) {
  return std::cos(alpha + beta) * std::sin(alpha + beta + phi) /
         (2.0 * std::cos(alpha) * std::sin(beta) * std::sin(rho + delta + beta + phi));
}

Interval feasible_beta_interval(double alpha, double rho, double phi, double delta,
                                const FeasibilityMargins& margins) {
  for (double v : {alpha, rho, phi, delta}) require_finite(v, "angle");
  if (alpha < 0.0 || alpha > margins.alpha_max) {
    throw InfeasibleGeometry("stockpile angle " + std::to_string(alpha) +
                             " rad outside [0, alpha_max]");
  }
  const double lower = margins.eps1;
  const double upper = std::min({kPi - rho - delta - phi - margins.eps2, kPi / 2 - alpha,
                                 kPi - std::asin(margins.denominator) - phi});
  if (!(upper >= lower)) {
    throw EmptyFeasibleSet("no admissible failure angle for rho=" + std::to_string(rho) +
                           ", phi=" + std::to_string(phi) + ", delta=" + std::to_string(delta) +
                           ", alpha=" + std::to_string(alpha));
  }
  return Interval{lower, upper};
}

double solve_beta(double alpha, double rho, double phi, double delta,
                  const FeasibilityMargins& margins) {
  const Interval window = feasible_beta_interval(alpha, rho, phi, delta, margins);
  const auto objective = [&](double beta) {
    return unit_weight_factor(alpha, beta, rho, phi, delta);
  };
  if (window.width() == 0.0) return window.min;

  // Coarse scan brackets the global minimum, Brent refines inside the bracket.
  constexpr int kScan = 48;
  const double step = window.width() / kScan;
  int best = 0;
  double best_value = objective(window.min);
  for (int k = 1; k <= kScan; ++k) {
    const double beta = k == kScan ? window.max : window.min + k * step;
    const double value = objective(beta);
    if (value < best_value) {
      best_value = value;
      best = k;
    }
  }
  const double lo = best == 0 ? window.min : window.min + (best - 1) * step;
  const double hi = best >= kScan - 1 ? window.max : window.min + (best + 1) * step;

  constexpr int kBits = std::numeric_limits<double>::digits / 2;
  std::uintmax_t max_iter = 200;
  auto [beta_star, value_star] =
      boost::math::tools::brent_find_minima(objective, lo, hi, kBits, max_iter);

  // Brent never evaluates the bracket ends; endpoint minima come from the scan.
  const double lo_value = objective(lo);
  const double hi_value = objective(hi);
  if (hi_value < value_star) {
    beta_star = hi;
    value_star = hi_value;
  }
  if (lo_value < value_star) {
    beta_star = lo;
    value_star = lo_value;
  }
  if (best_value < value_star) {
    beta_star = best == kScan ? window.max : window.min + best * step;
    value_star = best_value;
  }

  // Tie-break toward the smallest feasible angle.
  const double tie = 1e-12 * std::max(1.0, std::abs(value_star));
  const double floor_value = objective(window.min);
  if (floor_value <= value_star + tie) return window.min;
  return beta_star;
}

double bekker_pressure(double depth_d, const SoilParameters& soil, const LoaderParameters& loader) {
  if (depth_d < 0.0) throw InvalidArgument("depth must be non-negative");
  if (depth_d == 0.0) return 0.0;
  return (soil.kc / loader.b + soil.kphi) * std::pow(depth_d, soil.n);
}

double fee_force(double depth_d, double w_load, const BearingFactors& factors,
                 const SoilParameters& soil, const LoaderParameters& loader) {
  const double w = loader.omega;
  return depth_d * depth_d * w * soil.gamma * kGravity * factors.n_gamma +
         soil.cohesion_c * w * depth_d * factors.n_c +
         soil.adhesion_ca * w * depth_d * factors.n_a + w_load * factors.n_q;
}

double fee_force(const WedgeState& wedge, const SoilParameters& soil,
                 const LoaderParameters& loader, double alpha, const FeasibilityMargins& margins) {
  const BearingFactors factors =
      bearing_factors_canonical(alpha, wedge.beta, wedge.rho, soil.phi, soil.delta, margins);
  return fee_force(wedge.depth_d, wedge.w_load, factors, soil, loader);
}

ForcePrediction bucket_forces(double fee_force_f, double pressure_p, double lt,
                              const SoilParameters& soil, const LoaderParameters& loader) {
  ForcePrediction out;
  out.fee_force_f = fee_force_f;
  out.pressure_p = pressure_p;
  out.f_t = loader.omega * loader.b * pressure_p + fee_force_f * std::sin(soil.delta) +
            soil.adhesion_ca * loader.omega * lt;
  out.f_n = fee_force_f * std::cos(soil.delta);
  return out;
}

CyclePrediction predict_cycle_forces(std::span<const WedgeState> samples,
                                     const SoilParameters& soil, const LoaderParameters& loader,
                                     double alpha, const FeasibilityMargins& margins) {
  CyclePrediction out;
  out.samples.resize(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const WedgeState& wedge = samples[i];
    SamplePrediction& sample = out.samples[i];
    if (!(wedge.depth_d > 0.0)) continue;
    sample.in_soil = true;
    try {
      if (wedge.rho < margins.rho_min) {
        throw InfeasibleGeometry("blade angle " + std::to_string(wedge.rho) +
                                 " rad below rho_min");
      }
      const double beta = solve_beta(alpha, wedge.rho, soil.phi, soil.delta, margins);
      const BearingFactors factors =
          bearing_factors_canonical(alpha, beta, wedge.rho, soil.phi, soil.delta, margins);
      const double f = fee_force(wedge.depth_d, wedge.w_load, factors, soil, loader);
      const double p = bekker_pressure(wedge.depth_d, soil, loader);
      sample.force = bucket_forces(f, p, wedge.lt, soil, loader);
      sample.beta = beta;
      sample.lf = wedge.depth_d / std::sin(beta);
    } catch (const Error& e) {
      sample.valid = false;
      sample.force = ForcePrediction{};
      out.issues.push_back({i, e.what()});
    }
  }
  return out;
}

}  // namespace feecal
