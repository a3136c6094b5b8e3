#pragma once

// Soil-tool force model: bearing capacity factors, failure-surface angle
// selection, the earthmoving reaction force, Bekker compaction pressure and
// their composition into tangential/normal bucket forces.

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace feecal {

inline constexpr double kGravity = 9.80665;  // m/s^2

constexpr double deg_to_rad(double degrees) { return degrees * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double radians) { return radians * 180.0 / std::numbers::pi; }

/// The eight calibrated soil quantities, stored in base SI units.
struct SoilParameters {
  static constexpr std::size_t kSize = 8;

  double gamma = 1500.0;     ///< density, kg/m^3
  double cohesion_c = 0.0;   ///< N/m^2
  double adhesion_ca = 0.0;  ///< N/m^2
  double phi = 0.5;          ///< internal friction angle, rad
  double delta = 0.35;       ///< external (soil-steel) friction angle, rad
  double kc = 0.0;           ///< cohesive modulus of deformation, N/m^(n+1)
  double kphi = 0.0;         ///< frictional modulus of deformation, N/m^(n+2)
  double n = 1.0;            ///< sinkage exponent

  /// Order: gamma, C, C_a, phi, delta, k_c, k_phi, n.
  std::array<double, kSize> to_array() const;
  static SoilParameters from_array(std::span<const double, kSize> values);

  /// Throws InvalidArgument if any physical invariant is violated.
  void validate() const;

  static const std::array<std::string_view, kSize>& names();

  bool operator==(const SoilParameters&) const = default;
};

struct Interval {
  double min = 0.0;
  double max = 0.0;

  bool contains(double value) const { return value >= min && value <= max; }
  double clamp(double value) const;
  double center() const { return 0.5 * (min + max); }
  double width() const { return max - min; }
};

struct ParameterBounds {
  std::array<Interval, SoilParameters::kSize> ranges;

  /// gamma [1297, 2345] kg/m^3; C, C_a [0, 5e4] N/m^2; phi, delta [0, 0.785] rad;
  /// k_c [0, 1e4] N/m^(n+1); k_phi [0, 5e6] N/m^(n+2); n [0.11, 1.53].
  static ParameterBounds defaults();

  bool contains(const SoilParameters& soil) const;
  SoilParameters clamp(const SoilParameters& soil) const;
  SoilParameters center() const;
  void validate() const;
};

struct LoaderParameters {
  double omega = 1.2;  ///< bucket width, m
  double b = 0.03;     ///< cutting-edge thickness, m
  double wb = 350.0;   ///< bucket mass, kg

  void validate() const;
};

struct BearingFactors {
  double n_gamma = 0.0;
  double n_c = 0.0;
  double n_a = 0.0;
  double n_q = 0.0;
};

/// Instantaneous wedge geometry at one sample.
struct WedgeState {
  double depth_d = 0.0;  ///< m
  double rho = 0.0;      ///< blade angle to the surface, rad
  double lt = 0.0;       ///< blade length in soil, m
  double lf = 0.0;       ///< failure-surface length, m
  double beta = 0.0;     ///< failure-surface angle, rad
  double w_load = 0.0;   ///< surcharge weight, N
};

struct ForcePrediction {
  double fee_force_f = 0.0;  ///< N
  double pressure_p = 0.0;   ///< N/m^2
  double f_t = 0.0;          ///< N
  double f_n = 0.0;          ///< N
};

/// Angular margins that keep the factor denominators away from zero.
struct FeasibilityMargins {
  double eps1 = deg_to_rad(5.0);         ///< beta > eps1
  double eps2 = deg_to_rad(5.0);         ///< |rho + delta + beta + phi - pi| > eps2
  double denominator = 0.01745240643728351;  ///< sin(1 deg)
  double rho_min = deg_to_rad(10.0);
  double alpha_max = deg_to_rad(45.0);

  void validate() const;
};

/// Cotangent form of the four bearing capacity factors.
BearingFactors bearing_factors_original(double alpha, double beta, double rho, double phi,
                                        double delta);

/// Sine-cosine form; the production path. Throws SingularGeometry naming the
/// first denominator term whose magnitude is not above margins.denominator.
BearingFactors bearing_factors_canonical(double alpha, double beta, double rho, double phi,
                                         double delta, const FeasibilityMargins& margins = {});

/// Unit-weight factor alone, canonical form, no margin checks.
double unit_weight_factor(double alpha, double beta, double rho, double phi, double delta);

/// Admissible failure-surface angles for one configuration:
///   beta >= eps1,
///   rho + delta + beta + phi <= pi - eps2   (positive-denominator branch),
///   alpha + beta <= pi/2                    (closed wedge, N_gamma >= 0),
///   beta + phi <= pi - asin(denominator).
/// Throws EmptyFeasibleSet when lower > upper.
Interval feasible_beta_interval(double alpha, double rho, double phi, double delta,
                                const FeasibilityMargins& margins = {});

/// Failure-surface angle minimizing N_gamma over the feasible interval.
/// Flat objectives resolve to the smallest feasible angle.
double solve_beta(double alpha, double rho, double phi, double delta,
                  const FeasibilityMargins& margins = {});

/// (k_c / b + k_phi) * d^n.
double bekker_pressure(double depth_d, const SoilParameters& soil, const LoaderParameters& loader);

double fee_force(const WedgeState& wedge, const SoilParameters& soil,
                 const LoaderParameters& loader, double alpha,
                 const FeasibilityMargins& margins = {});

/// Earthmoving force with factors already evaluated.
double fee_force(double depth_d, double w_load, const BearingFactors& factors,
                 const SoilParameters& soil, const LoaderParameters& loader);

ForcePrediction bucket_forces(double fee_force_f, double pressure_p, double lt,
                              const SoilParameters& soil, const LoaderParameters& loader);

struct SamplePrediction {
  ForcePrediction force;
  double beta = 0.0;  ///< solved angle; 0 for out-of-soil samples
  double lf = 0.0;
  bool in_soil = false;
  bool valid = true;
};

struct SampleIssue {
  std::size_t index = 0;
  std::string message;
};

struct CyclePrediction {
  std::vector<SamplePrediction> samples;
  std::vector<SampleIssue> issues;

  bool ok() const { return issues.empty(); }
};

/// Per-sample beta solve, factors, earthmoving force, pressure and bucket
/// force composition. Samples with zero depth produce zero forces; a sample
/// that cannot be evaluated is flagged invalid and listed in `issues`.
/// The beta and lf fields of the inputs are ignored and recomputed.
CyclePrediction predict_cycle_forces(std::span<const WedgeState> samples,
                                     const SoilParameters& soil, const LoaderParameters& loader,
                                     double alpha, const FeasibilityMargins& margins = {});

}  // namespace feecal
