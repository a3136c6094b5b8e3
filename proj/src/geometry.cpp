#include "feecal/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "feecal/errors.hpp"

namespace feecal {

namespace {

constexpr double kBelowTolerance = 1e-12;   // m
constexpr double kMonotoneTolerance = 1e-9;  // m

double cross(Point2 a, Point2 b) { return a.x * b.z - a.z * b.x; }
double dot(Point2 a, Point2 b) { return a.x * b.x + a.z * b.z; }
Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.z - b.z}; }
Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.z + b.z}; }
Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.z}; }

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const Point2 foot = a + t * ab;
  return std::hypot(p.x - foot.x, p.z - foot.z);
}

double point_ray_distance(Point2 p, Point2 origin, Point2 direction) {
  const double len2 = dot(direction, direction);
  const double t = std::max(0.0, dot(p - origin, direction) / len2);
  const Point2 foot = origin + t * direction;
  return std::hypot(p.x - foot.x, p.z - foot.z);
}

// Positive part of the integral of a linear gap g(x) over one step of
// signed length dx, g0 at the start, g1 at the end.
double positive_trapezoid(double g0, double g1, double dx) {
  if (g0 >= 0.0 && g1 >= 0.0) return 0.5 * (g0 + g1) * dx;
  if (g0 <= 0.0 && g1 <= 0.0) return 0.0;
  const double t = g0 / (g0 - g1);
  return g0 > 0.0 ? 0.5 * g0 * t * dx : 0.5 * g1 * (1.0 - t) * dx;
}

// Surface breakpoints strictly inside (min(a, b), max(a, b)), ordered from a to b.
std::vector<double> interior_breakpoints(const SurfaceModel& surface, double a, double b) {
  std::vector<double> xs;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  for (const Point2& v : surface.vertices()) {
    if (v.x > lo && v.x < hi) xs.push_back(v.x);
  }
  if (a > b) std::reverse(xs.begin(), xs.end());
  return xs;
}

// Swept-area contribution of one straight path step with vertical closure.
// Returns nullopt when the step moves backward in x while below the surface.
std::optional<double> step_area(Point2 a, Point2 b, const SurfaceModel& surface) {
  const double dx = b.x - a.x;
  const double ga = surface.height_at(a.x) - a.z;
  const double gb = surface.height_at(b.x) - b.z;
  if (dx == 0.0) return 0.0;

  double area = 0.0;
  bool below = false;
  double x0 = a.x;
  double g0 = ga;
  auto piece = [&](double x1) {
    const double frac = (x1 - a.x) / dx;
    const double z1 = a.z + frac * (b.z - a.z);
    const double g1 = x1 == b.x ? gb : surface.height_at(x1) - z1;
    if (g0 > kBelowTolerance || g1 > kBelowTolerance) below = true;
    area += positive_trapezoid(g0, g1, x1 - x0);
    x0 = x1;
    g0 = g1;
  };
  for (double x : interior_breakpoints(surface, a.x, b.x)) piece(x);
  piece(b.x);

  if (below && dx < -kMonotoneTolerance) return std::nullopt;
  return area;
}

bool segments_cross(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
         ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0));
}

bool is_simple(const std::vector<Point2>& polygon) {
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a1 = polygon[i];
    const Point2 a2 = polygon[(i + 1) % n];
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_cross(a1, a2, polygon[j], polygon[(j + 1) % n])) return false;
    }
  }
  return true;
}

double shoelace(const std::vector<Point2>& polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) twice += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * twice;
}

// Point where a path step crosses the surface (gap changes sign).
Point2 crossing_point(Point2 a, Point2 b, const SurfaceModel& surface) {
  double lo = 0.0;
  double hi = 1.0;
  const auto gap = [&](double s) {
    const Point2 p = a + s * (b - a);
    return surface.height_at(p.x) - p.z;
  };
  const bool a_below = gap(0.0) > 0.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    if ((gap(mid) > 0.0) == a_below) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const Point2 p = a + 0.5 * (lo + hi) * (b - a);
  return {p.x, surface.height_at(p.x)};
}

// Surface vertices walked from x_from back to x_to (x_from >= x_to), exclusive.
void append_surface_back(std::vector<Point2>& polygon, const SurfaceModel& surface,
                         double x_from, double x_to) {
  const auto vs = surface.vertices();
  for (auto it = vs.rbegin(); it != vs.rend(); ++it) {
    if (it->x < x_from && it->x > x_to) polygon.push_back(*it);
  }
}

}  // namespace

SurfaceModel SurfaceModel::sloped(Point2 origin, double alpha, const FeasibilityMargins& margins) {
  if (!std::isfinite(origin.x) || !std::isfinite(origin.z) || !std::isfinite(alpha)) {
    throw InvalidArgument("sloped surface must be finite");
  }
  if (alpha < 0.0 || alpha >= margins.alpha_max) {
    throw InvalidArgument("stockpile angle must lie in [0, alpha_max)");
  }
  return SurfaceModel(SlopedLine{origin, alpha});
}

SurfaceModel SurfaceModel::polyline(std::vector<Point2> vertices, double alpha,
                                    const FeasibilityMargins& margins) {
  if (vertices.size() < 2) throw InvalidArgument("polyline needs at least 2 vertices");
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!std::isfinite(vertices[i].x) || !std::isfinite(vertices[i].z)) {
      throw InvalidArgument("polyline vertex " + std::to_string(i) + " is not finite");
    }
    if (i > 0 && !(vertices[i].x > vertices[i - 1].x)) {
      throw InvalidArgument("polyline vertices must be strictly increasing in x (vertex " +
                            std::to_string(i) + ")");
    }
  }
  if (!std::isfinite(alpha) || alpha < 0.0 || alpha >= margins.alpha_max) {
    throw InvalidArgument("stockpile angle must lie in [0, alpha_max)");
  }
  return SurfaceModel(Polyline{std::move(vertices), alpha});
}

double SurfaceModel::alpha() const {
  return std::visit([](const auto& s) { return s.alpha; }, shape_);
}

std::span<const Point2> SurfaceModel::vertices() const {
  if (const auto* poly = std::get_if<Polyline>(&shape_)) return poly->vertices;
  return {};
}

double SurfaceModel::height_at(double x) const {
  if (const auto* line = std::get_if<SlopedLine>(&shape_)) {
    return line->origin.z + (x - line->origin.x) * std::tan(line->alpha);
  }
  const auto& v = std::get<Polyline>(shape_).vertices;
  std::size_t i = 0;
  if (x >= v.back().x) {
    if (x == v.back().x) return v.back().z;
    i = v.size() - 2;
  } else if (x > v.front().x) {
    const auto it = std::upper_bound(v.begin(), v.end(), x,
                                     [](double value, const Point2& p) { return value < p.x; });
    i = static_cast<std::size_t>(it - v.begin()) - 1;
    if (x == v[i].x) return v[i].z;
  } else if (x == v.front().x) {
    return v.front().z;
  }
  const Point2 a = v[i];
  const Point2 b = v[i + 1];
  return a.z + (x - a.x) / (b.x - a.x) * (b.z - a.z);
}

Point2 SurfaceModel::direction_at(double x) const {
  if (const auto* line = std::get_if<SlopedLine>(&shape_)) {
    return {std::cos(line->alpha), std::sin(line->alpha)};
  }
  const auto& v = std::get<Polyline>(shape_).vertices;
  std::size_t i = 0;
  if (x >= v.back().x) {
    i = v.size() - 2;
  } else if (x > v.front().x) {
    const auto it = std::upper_bound(v.begin(), v.end(), x,
                                     [](double value, const Point2& p) { return value < p.x; });
    i = static_cast<std::size_t>(it - v.begin()) - 1;
  }
  const Point2 d = v[i + 1] - v[i];
  const double len = std::hypot(d.x, d.z);
  return {d.x / len, d.z / len};
}

void CycleDataset::validate() const {
  const std::size_t n = samples.size();
  if (f_t_obs.size() != n || f_n_obs.size() != n) {
    throw InvalidArgument("trajectory and force series lengths differ");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.tip.x) || !std::isfinite(s.tip.z) ||
        !std::isfinite(s.rho) || !std::isfinite(f_t_obs[i]) || !std::isfinite(f_n_obs[i])) {
      throw InvalidArgument("non-finite value at sample " + std::to_string(i));
    }
    if (i > 0 && s.t < samples[i - 1].t) {
      throw InvalidArgument("time decreases at sample " + std::to_string(i));
    }
  }
  loader.validate();
}

double penetration_depth(Point2 tip, const SurfaceModel& surface) {
  if (surface.is_sloped()) {
    const SlopedLine& line = surface.as_sloped();
    const double s = (tip.x - line.origin.x) * std::sin(line.alpha) -
                     (tip.z - line.origin.z) * std::cos(line.alpha);
    return s > 0.0 ? s : 0.0;
  }
  if (tip.z >= surface.height_at(tip.x)) return 0.0;
  const auto& v = surface.as_polyline().vertices;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    best = std::min(best, point_segment_distance(tip, v[i], v[i + 1]));
  }
  best = std::min(best, point_ray_distance(tip, v.front(), v.front() - v[1]));
  best = std::min(best, point_ray_distance(tip, v.back(), v.back() - v[v.size() - 2]));
  return best;
}

WedgeState wedge_from_sample(const TrajectorySample& sample, const SurfaceModel& surface,
                             double beta, double w_load, const FeasibilityMargins& margins) {
  const double d = penetration_depth(sample.tip, surface);
  if (!(d > 0.0)) throw InfeasibleGeometry("tip is not below the surface");
  if (sample.rho < margins.rho_min) {
    throw InfeasibleGeometry("blade angle " + std::to_string(sample.rho) + " rad below rho_min");
  }
  if (beta < margins.eps1) {
    throw InfeasibleGeometry("failure angle " + std::to_string(beta) + " rad below eps1");
  }
  if (w_load < 0.0) throw InvalidArgument("surcharge weight must be non-negative");
  WedgeState wedge;
  wedge.depth_d = d;
  wedge.rho = sample.rho;
  wedge.beta = beta;
  wedge.lt = d / std::sin(sample.rho);
  wedge.lf = d / std::sin(beta);
  wedge.w_load = w_load;
  return wedge;
}

double swept_area(std::span<const TrajectorySample> prefix, const SurfaceModel& surface) {
  // One closed polygon per below-surface run: path points, a vertical drop
  // (or exit crossing) back to the surface, surface vertices back to entry.
  double total = 0.0;
  std::vector<Point2> polygon;
  const auto gap = [&](Point2 p) { return surface.height_at(p.x) - p.z; };

  const auto close_run = [&](Point2 last_on_surface) {
    if (polygon.empty()) return;
    const double entry_x = polygon.front().x;
    polygon.push_back(last_on_surface);
    append_surface_back(polygon, surface, last_on_surface.x, entry_x);
    if (polygon.size() >= 3) {
      if (!is_simple(polygon)) throw DegenerateRegion("swept region is self-intersecting");
      total += std::abs(shoelace(polygon));
    }
    polygon.clear();
  };

  for (std::size_t i = 0; i < prefix.size(); ++i) {
    const Point2 p = prefix[i].tip;
    const bool below = gap(p) > 0.0;
    if (i > 0) {
      const Point2 q = prefix[i - 1].tip;
      const bool was_below = gap(q) > 0.0;
      if (below != was_below) {
        const Point2 c = crossing_point(q, p, surface);
        if (below) {
          polygon.push_back(c);
        } else {
          close_run(c);
        }
      }
    } else if (below) {
      polygon.push_back({p.x, surface.height_at(p.x)});
    }
    if (below) polygon.push_back(p);
  }
  if (!polygon.empty()) {
    const Point2 tip = prefix.back().tip;
    close_run({tip.x, surface.height_at(tip.x)});
  }
  return total;
}

double load_weight_from_area(double area, double gamma, double omega) {
  return gamma * kGravity * omega * area;
}

double swept_load_weight(std::span<const TrajectorySample> prefix, const SurfaceModel& surface,
                         double gamma, double omega) {
  return load_weight_from_area(swept_area(prefix, surface), gamma, omega);
}

std::vector<double> cumulative_swept_area(std::span<const TrajectorySample> samples,
                                          const SurfaceModel& surface) {
  std::vector<double> areas(samples.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto step = step_area(samples[i - 1].tip, samples[i].tip, surface);
    if (!step) {
      throw DegenerateRegion("trajectory moves backward below the surface at sample " +
                             std::to_string(i));
    }
    total += *step;
    areas[i] = total;
  }
  return areas;
}

std::vector<SampleGeometry> sample_geometry(std::span<const TrajectorySample> samples,
                                            const SurfaceModel& surface) {
  const std::vector<double> areas = cumulative_swept_area(samples, surface);
  std::vector<SampleGeometry> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    SampleGeometry& g = out[i];
    g.depth = penetration_depth(samples[i].tip, surface);
    g.rho = samples[i].rho;
    g.lt = g.depth > 0.0 ? g.depth / std::sin(g.rho) : 0.0;
    g.area = areas[i];
  }
  return out;
}

std::vector<WedgeState> wedge_states(std::span<const SampleGeometry> geometry, double gamma,
                                     double omega) {
  std::vector<WedgeState> out(geometry.size());
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    out[i].depth_d = geometry[i].depth;
    out[i].rho = geometry[i].rho;
    out[i].lt = geometry[i].lt;
    out[i].w_load = load_weight_from_area(geometry[i].area, gamma, omega);
  }
  return out;
}

Point2 QuadraticBezier::point(double u) const {
  const double v = 1.0 - u;
  return {v * v * p0.x + 2.0 * u * v * p1.x + u * u * p2.x,
          v * v * p0.z + 2.0 * u * v * p1.z + u * u * p2.z};
}

Point2 QuadraticBezier::tangent(double u) const {
  const Point2 t = 2.0 * (1.0 - u) * (p1 - p0) + 2.0 * u * (p2 - p1);
  if (t.x == 0.0 && t.z == 0.0) return p2 - p0;
  return t;
}

double blade_angle(Point2 tangent, Point2 surface_direction, const FeasibilityMargins& margins) {
  const double angle = std::atan2(std::abs(cross(surface_direction, tangent)),
                                  dot(surface_direction, tangent));
  return std::max(angle, margins.rho_min);
}

std::vector<TrajectorySample> quadratic_bezier_path(const QuadraticBezier& curve,
                                                    std::size_t n_samples, double duration,
                                                    const SurfaceModel& surface,
                                                    const FeasibilityMargins& margins) {
  if (n_samples < 2) throw InvalidArgument("a path needs at least 2 samples");
  if (!(duration > 0.0)) throw InvalidArgument("path duration must be positive");
  std::vector<TrajectorySample> out(n_samples);
  const double last = static_cast<double>(n_samples - 1);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double u = i + 1 == n_samples ? 1.0 : static_cast<double>(i) / last;
    TrajectorySample& s = out[i];
    s.t = u * duration;
    s.tip = curve.point(u);
    s.rho = blade_angle(curve.tangent(u), surface.direction_at(s.tip.x), margins);
  }
  return out;
}

namespace {

struct CutRun {
  std::vector<Point2> points;  // x nondecreasing

  double min_x() const { return points.front().x; }
  double max_x() const { return points.back().x; }

  // Lowest path height above x; nullopt outside the run.
  std::optional<double> height_at(double x) const {
    if (x < min_x() || x > max_x()) return std::nullopt;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < points.size(); ++j) {
      const Point2 a = points[j];
      const Point2 b = points[j + 1];
      if (x < a.x || x > b.x) continue;
      if (b.x == a.x) {
        best = std::min({best, a.z, b.z});
      } else if (x == a.x) {
        best = std::min(best, a.z);
      } else if (x == b.x) {
        best = std::min(best, b.z);
      } else {
        best = std::min(best, a.z + (x - a.x) / (b.x - a.x) * (b.z - a.z));
      }
    }
    return best;
  }
};

}  // namespace

SurfaceModel surface_after_cycle(const SurfaceModel& prior,
                                 std::span<const TrajectorySample> cycle_trajectory) {
  const auto gap = [&](Point2 p) { return prior.height_at(p.x) - p.z; };

  // A step cuts when either end, or a surface breakpoint above it, is below the surface.
  const auto step_cuts = [&](Point2 a, Point2 b) {
    if (gap(a) > kBelowTolerance || gap(b) > kBelowTolerance) return true;
    if (a.x == b.x) return false;
    for (double x : interior_breakpoints(prior, a.x, b.x)) {
      const double z = a.z + (x - a.x) / (b.x - a.x) * (b.z - a.z);
      if (prior.height_at(x) - z > kBelowTolerance) return true;
    }
    return false;
  };

  std::vector<CutRun> runs;
  const std::size_t n = cycle_trajectory.size();
  if (n == 1 && gap(cycle_trajectory[0].tip) > kBelowTolerance) {
    runs.push_back({{cycle_trajectory[0].tip}});
  }
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const Point2 a = cycle_trajectory[j].tip;
    const Point2 b = cycle_trajectory[j + 1].tip;
    if (!step_cuts(a, b)) continue;
    if (b.x < a.x - kMonotoneTolerance) {
      throw NonMonotonePath("trajectory doubles back in x at sample " + std::to_string(j + 1));
    }
    const Point2 b_mono{std::max(b.x, a.x), b.z};
    if (!runs.empty() && runs.back().points.back() == a) {
      runs.back().points.push_back(b_mono);
    } else {
      runs.push_back({{a, b_mono}});
    }
  }
  if (runs.empty()) return prior;

  std::vector<double> xs;
  for (const Point2& v : prior.vertices()) xs.push_back(v.x);
  double span_lo = std::numeric_limits<double>::infinity();
  double span_hi = -std::numeric_limits<double>::infinity();
  for (const CutRun& run : runs) {
    span_lo = std::min(span_lo, run.min_x());
    span_hi = std::max(span_hi, run.max_x());
    for (std::size_t j = 0; j < run.points.size(); ++j) {
      xs.push_back(run.points[j].x);
      if (j + 1 == run.points.size()) continue;
      const Point2 a = run.points[j];
      const Point2 b = run.points[j + 1];
      if (b.x == a.x) continue;
      // Envelope breakpoints where the path crosses the prior surface.
      std::vector<double> cuts{a.x};
      for (double x : interior_breakpoints(prior, a.x, b.x)) cuts.push_back(x);
      cuts.push_back(b.x);
      for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double x0 = cuts[k];
        const double x1 = cuts[k + 1];
        const double g0 = prior.height_at(x0) - (a.z + (x0 - a.x) / (b.x - a.x) * (b.z - a.z));
        const double g1 = prior.height_at(x1) - (a.z + (x1 - a.x) / (b.x - a.x) * (b.z - a.z));
        if ((g0 > 0.0 && g1 < 0.0) || (g0 < 0.0 && g1 > 0.0)) {
          xs.push_back(x0 + g0 / (g0 - g1) * (x1 - x0));
        }
      }
    }
  }
  xs.push_back(span_lo - 1.0);
  xs.push_back(span_hi + 1.0);
  std::sort(xs.begin(), xs.end());

  std::vector<Point2> vertices;
  for (double x : xs) {
    if (!vertices.empty() && x - vertices.back().x <= kBelowTolerance) continue;
    double z = prior.height_at(x);
    for (const CutRun& run : runs) {
      if (const auto path_z = run.height_at(x)) z = std::min(z, *path_z);
    }
    vertices.push_back({x, z});
  }

  bool changed = false;
  for (const Point2& v : vertices) {
    if (prior.height_at(v.x) - v.z > kBelowTolerance) {
      changed = true;
      break;
    }
  }
  if (!changed) return prior;
  return SurfaceModel::polyline(std::move(vertices), prior.alpha());
}

}  // namespace feecal
