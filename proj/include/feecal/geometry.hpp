#pragma once

// Planar excavation geometry: stockpile surfaces, tip trajectories, wedge
// construction, swept surcharge and the surface left behind by a cycle.

#include <span>
#include <variant>
#include <vector>

#include "feecal/soil.hpp"

namespace feecal {

struct Point2 {
  double x = 0.0;  ///< m, horizontal
  double z = 0.0;  ///< m, vertical (up)

  bool operator==(const Point2&) const = default;
};

/// Undisturbed pile face through `origin`, rising at `alpha`.
struct SlopedLine {
  Point2 origin;
  double alpha = 0.0;
};

/// Excavated surface, vertices strictly increasing in x. Heights outside the
/// vertex span continue the end segments. `alpha` is the stockpile angle the
/// wedge model keeps using on this surface.
struct Polyline {
  std::vector<Point2> vertices;
  double alpha = 0.0;
};

class SurfaceModel {
 public:
  SurfaceModel() : SurfaceModel(sloped(Point2{}, 0.0)) {}

  static SurfaceModel sloped(Point2 origin, double alpha,
                             const FeasibilityMargins& margins = {});
  static SurfaceModel polyline(std::vector<Point2> vertices, double alpha,
                               const FeasibilityMargins& margins = {});

  bool is_sloped() const { return std::holds_alternative<SlopedLine>(shape_); }
  const SlopedLine& as_sloped() const { return std::get<SlopedLine>(shape_); }
  const Polyline& as_polyline() const { return std::get<Polyline>(shape_); }

  /// Stockpile angle fed to the bearing factors.
  double alpha() const;

  /// Surface height above x.
  double height_at(double x) const;

  /// Unit direction of the surface at x, pointing toward increasing x.
  Point2 direction_at(double x) const;

  /// Piecewise-linear breakpoints (empty for a sloped line).
  std::span<const Point2> vertices() const;

 private:
  using Shape = std::variant<SlopedLine, Polyline>;
  explicit SurfaceModel(Shape shape) : shape_(std::move(shape)) {}

  Shape shape_;
};

struct TrajectorySample {
  double t = 0.0;    ///< s
  Point2 tip;        ///< m
  double rho = 0.0;  ///< blade angle relative to the surface, rad
};

/// One loading cycle: trajectory with observed bucket forces aligned 1:1.
struct CycleDataset {
  std::vector<TrajectorySample> samples;
  std::vector<double> f_t_obs;
  std::vector<double> f_n_obs;
  SurfaceModel surface;
  LoaderParameters loader;

  std::size_t size() const { return samples.size(); }

  /// Throws InvalidArgument on length mismatch, non-finite values or
  /// decreasing time stamps.
  void validate() const;
};

/// Distance from the tip to the surface when the tip is below it, otherwise 0.
/// A sloped line uses the perpendicular distance, a polyline the minimum
/// distance over its segments.
double penetration_depth(Point2 tip, const SurfaceModel& surface);

/// L_t = d / sin(rho), L_f = d / sin(beta). Throws InfeasibleGeometry when the
/// tip is not below the surface, rho < rho_min or beta < eps1.
WedgeState wedge_from_sample(const TrajectorySample& sample, const SurfaceModel& surface,
                             double beta, double w_load, const FeasibilityMargins& margins = {});

/// Area of the soil region between the trajectory prefix and the surface,
/// closed by a vertical drop from the last tip to the surface. Zero when the
/// prefix never goes below the surface. Throws DegenerateRegion when the
/// closed region is self-intersecting.
double swept_area(std::span<const TrajectorySample> prefix, const SurfaceModel& surface);

/// gamma * g * omega * swept_area(prefix).
double swept_load_weight(std::span<const TrajectorySample> prefix, const SurfaceModel& surface,
                         double gamma, double omega);

/// gamma * g * omega * area, the single conversion shared by every caller.
double load_weight_from_area(double area, double gamma, double omega);

/// swept_area for every prefix [0, i] in one pass. Throws DegenerateRegion
/// when the trajectory moves backward in x while below the surface.
std::vector<double> cumulative_swept_area(std::span<const TrajectorySample> samples,
                                          const SurfaceModel& surface);

/// Soil-independent per-sample geometry of a cycle.
struct SampleGeometry {
  double depth = 0.0;  ///< m
  double rho = 0.0;    ///< rad
  double lt = 0.0;     ///< m; 0 out of soil
  double area = 0.0;   ///< swept area up to this sample, m^2

  bool in_soil() const { return depth > 0.0; }
};

std::vector<SampleGeometry> sample_geometry(std::span<const TrajectorySample> samples,
                                            const SurfaceModel& surface);

/// Wedge inputs for the force model; beta and lf are left for the solver.
std::vector<WedgeState> wedge_states(std::span<const SampleGeometry> geometry, double gamma,
                                     double omega);

struct QuadraticBezier {
  Point2 p0, p1, p2;

  Point2 point(double u) const;
  Point2 tangent(double u) const;
};

/// Angle between a path tangent and the local surface direction, clamped to rho_min.
double blade_angle(Point2 tangent, Point2 surface_direction, const FeasibilityMargins& margins = {});

/// n_samples points at uniform u over [0, 1], t = u * duration, rho from the
/// path tangent relative to `surface`.
std::vector<TrajectorySample> quadratic_bezier_path(const QuadraticBezier& curve,
                                                    std::size_t n_samples, double duration,
                                                    const SurfaceModel& surface,
                                                    const FeasibilityMargins& margins = {});

/// Lower envelope of the prior surface and the cycle's tip path. Returns the
/// prior surface unchanged when the path never goes below it. Throws
/// NonMonotonePath when x decreases by more than 1e-9 m inside the cut.
SurfaceModel surface_after_cycle(const SurfaceModel& prior,
                                 std::span<const TrajectorySample> cycle_trajectory);

}  // namespace feecal
