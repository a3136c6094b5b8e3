#include "feecal/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "feecal/errors.hpp"

namespace feecal::optim {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Counts objective calls.
class Counted {
 public:
  explicit Counted(const Objective& f) : f_(f) {}

  double operator()(const Vector& x) {
    ++count_;
    return f_(x);
  }

  long count() const { return count_; }

 private:
  const Objective& f_;
  long count_ = 0;
};

double projected_gradient_norm(const Vector& x, const Vector& g, const Box& box) {
  double norm = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double moved = std::clamp(x[i] - g[i], box.lower[i], box.upper[i]);
    norm = std::max(norm, std::abs(moved - x[i]));
  }
  return norm;
}

struct Pair {
  Vector s;
  Vector y;
};

// Dense BFGS matrix rebuilt from theta * I and the stored pairs, oldest first.
Eigen::MatrixXd bfgs_matrix(const std::deque<Pair>& pairs, Eigen::Index n) {
  double theta = 1.0;
  if (!pairs.empty()) {
    const Pair& last = pairs.back();
    theta = last.y.squaredNorm() / last.s.dot(last.y);
  }
  Eigen::MatrixXd b = theta * Eigen::MatrixXd::Identity(n, n);
  for (const Pair& p : pairs) {
    const Vector bs = b * p.s;
    const double sbs = p.s.dot(bs);
    const double sy = p.s.dot(p.y);
    if (sbs <= 0.0 || sy <= 0.0) continue;
    b += p.y * p.y.transpose() / sy - bs * bs.transpose() / sbs;
  }
  return 0.5 * (b + b.transpose());
}

// Generalized Cauchy point: first local minimizer of the quadratic model along
// the projected steepest-descent path x(t) = P(x - t g).
Vector cauchy_point(const Vector& x, const Vector& g, const Eigen::MatrixXd& b, const Box& box) {
  const Eigen::Index n = x.size();
  std::vector<double> breaks(static_cast<std::size_t>(n), kInf);
  Vector d = -g;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (g[i] < 0.0) {
      breaks[i] = (x[i] - box.upper[i]) / g[i];
    } else if (g[i] > 0.0) {
      breaks[i] = (x[i] - box.lower[i]) / g[i];
    }
    if (breaks[i] <= 0.0) d[i] = 0.0;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index c) {
    return breaks[a] < breaks[c];
  });

  Vector z = x;
  double t_prev = 0.0;
  std::size_t k = 0;
  while (k < order.size() && breaks[order[k]] <= 0.0) ++k;

  while (true) {
    if (d.isZero(0.0)) return z;
    const Vector p = z - x;
    const Vector bd = b * d;
    const double slope = g.dot(d) + p.dot(bd);
    const double curvature = d.dot(bd);
    if (slope >= 0.0) return z;
    const double t_next = k < order.size() ? breaks[order[k]] : kInf;
    const double span = t_next - t_prev;
    if (curvature > 0.0) {
      const double dt = -slope / curvature;
      if (dt < span) return box.project(z + dt * d);
    }
    if (!std::isfinite(t_next)) {
      // Unbounded descent along a direction that never hits a bound; the
      // box is finite so this cannot happen once every free coordinate hits one.
      return z;
    }
    z = box.project(z + span * d);
    // Fix every coordinate whose breakpoint has been reached.
    while (k < order.size() && breaks[order[k]] <= t_next) {
      const Eigen::Index i = order[k];
      z[i] = g[i] < 0.0 ? box.upper[i] : box.lower[i];
      d[i] = 0.0;
      ++k;
    }
    t_prev = t_next;
  }
}

// Minimizes the model over the coordinates the Cauchy point left free.
Vector subspace_step(const Vector& x, const Vector& g, const Eigen::MatrixXd& b, const Vector& z,
                     const Box& box) {
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z[i] > box.lower[i] && z[i] < box.upper[i]) free.push_back(i);
  }
  if (free.empty()) return z;
  const Eigen::Index m = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd bff(m, m);
  Vector rhs(m);
  const Vector r = g + b * (z - x);
  for (Eigen::Index a = 0; a < m; ++a) {
    rhs[a] = -r[free[a]];
    for (Eigen::Index c = 0; c < m; ++c) bff(a, c) = b(free[a], free[c]);
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(bff);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return z;
  const Vector du = ldlt.solve(rhs);
  if (!du.allFinite()) return z;
  Vector target = z;
  for (Eigen::Index a = 0; a < m; ++a) target[free[a]] += du[a];
  return box.project(target);
}

struct LineSearch {
  Vector x;
  double f = 0.0;
  bool ok = false;
};

LineSearch projected_backtracking(Counted& f, const Vector& x, double fx, const Vector& g,
                                  const Vector& d, double step, const Box& box, int max_steps) {
  LineSearch out;
  for (int k = 0; k < max_steps; ++k) {
    const Vector trial = box.project(x + step * d);
    const Vector moved = trial - x;
    if (moved.lpNorm<Eigen::Infinity>() == 0.0) break;
    const double ft = f(trial);
    if (std::isfinite(ft) && ft <= fx + kArmijo * g.dot(moved) && ft <= fx) {
      out.x = trial;
      out.f = ft;
      out.ok = true;
      return out;
    }
    step *= 0.5;
  }
  return out;
}

}  // namespace

bool Box::contains(const Vector& x) const {
  if (x.size() != size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

Vector Box::project(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

void Box::validate() const {
  if (lower.size() != upper.size()) throw InvalidArgument("box bounds differ in size");
  if (lower.size() == 0) throw InvalidArgument("box has no dimensions");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i]) {
      throw InvalidArgument("box dimension " + std::to_string(i) + " is not a finite interval");
    }
  }
}

void SolverOptions::validate() const {
  if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
  if (!(gradient_tolerance > 0.0)) throw InvalidArgument("gradient_tolerance must be > 0");
  if (!(function_tolerance >= 0.0)) throw InvalidArgument("function_tolerance must be >= 0");
  if (!(finite_difference_step > 0.0)) throw InvalidArgument("finite_difference_step must be > 0");
  if (!(finite_difference_floor > 0.0)) throw InvalidArgument("finite_difference_floor must be > 0");
  if (n_starts < 1) throw InvalidArgument("n_starts must be >= 1");
  if (memory < 1) throw InvalidArgument("memory must be >= 1");
  if (max_line_search_steps < 1) throw InvalidArgument("max_line_search_steps must be >= 1");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::FunctionTolerance: return "function_tolerance";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::LineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

Vector finite_difference_gradient(const Objective& objective, const Vector& x, const Box& bounds,
                                  double relative_step, double step_floor, long* evaluations) {
  const Eigen::Index n = x.size();
  Vector grad(n);
  Vector probe = x;
  long count = 0;
  auto eval = [&](const Vector& at) {
    ++count;
    const double v = objective(at);
    if (!std::isfinite(v)) throw NonFiniteObjective("objective is not finite during differencing");
    return v;
  };
  std::optional<double> fx;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = std::max(relative_step * std::max(std::abs(x[i]), 1.0), step_floor);
    const double room_up = bounds.upper[i] - x[i];
    const double room_down = x[i] - bounds.lower[i];
    if (room_up >= h && room_down >= h) {
      probe[i] = x[i] + h;
      const double fp = eval(probe);
      probe[i] = x[i] - h;
      const double fm = eval(probe);
      grad[i] = (fp - fm) / (2.0 * h);
    } else if (std::max(room_up, room_down) <= 0.0) {
      grad[i] = 0.0;
    } else {
      if (!fx) fx = eval(x);
      const double step = room_up >= room_down ? std::min(h, room_up) : -std::min(h, room_down);
      probe[i] = x[i] + step;
      grad[i] = (eval(probe) - *fx) / step;
    }
    probe[i] = x[i];
  }
  if (evaluations) *evaluations += count;
  return grad;
}

SolveResult minimize_bounded(const Objective& objective, const Vector& x0, const Box& bounds,
                             const SolverOptions& opts) {
  bounds.validate();
  opts.validate();
  if (x0.size() != bounds.size()) throw InvalidArgument("x0 and bounds differ in size");
  if (!bounds.contains(x0)) throw InvalidArgument("x0 lies outside the bounds");

  Counted f(objective);
  long grad_evals = 0;
  auto gradient = [&](const Vector& at) {
    return finite_difference_gradient(objective, at, bounds, opts.finite_difference_step,
                                      opts.finite_difference_floor, &grad_evals);
  };

  SolveResult result;
  Vector x = x0;
  double fx = f(x);
  if (!std::isfinite(fx)) throw NonFiniteObjective("objective is not finite at the initial point");
  Vector g = gradient(x);
  std::deque<Pair> pairs;
  const Eigen::Index n = x.size();

  int iter = 0;
  double pg = projected_gradient_norm(x, g, bounds);
  StopReason reason = StopReason::MaxIterations;
  bool converged = false;

  while (true) {
    if (pg <= opts.gradient_tolerance) {
      reason = StopReason::GradientTolerance;
      converged = true;
      break;
    }
    if (iter >= opts.max_iterations) break;

    const Eigen::MatrixXd b = bfgs_matrix(pairs, n);
    const Vector z = cauchy_point(x, g, b, bounds);
    Vector target = subspace_step(x, g, b, z, bounds);
    Vector d = target - x;
    if (!(g.dot(d) < 0.0)) d = z - x;
    if (!(g.dot(d) < 0.0)) d = bounds.project(x - g) - x;

    // Without curvature information the model step can be arbitrarily long.
    const double step0 = pairs.empty() ? std::min(1.0, 1.0 / d.norm()) : 1.0;
    LineSearch ls =
        projected_backtracking(f, x, fx, g, d, step0, bounds, opts.max_line_search_steps);
    if (!ls.ok && !pairs.empty()) {
      pairs.clear();
      const Vector sd = bounds.project(x - g) - x;
      ls = projected_backtracking(f, x, fx, g, sd, std::min(1.0, 1.0 / sd.norm()), bounds,
                                  opts.max_line_search_steps);
    }
    if (!ls.ok) {
      reason = StopReason::LineSearchFailure;
      break;
    }

    Vector g_new;
    try {
      g_new = gradient(ls.x);
    } catch (const NonFiniteObjective&) {
      // Keep the last point with a usable gradient.
      reason = StopReason::LineSearchFailure;
      break;
    }
    ++iter;
    const Vector s = ls.x - x;
    const Vector y = g_new - g;
    const double f_old = fx;
    x = ls.x;
    fx = ls.f;
    g = g_new;
    pg = projected_gradient_norm(x, g, bounds);

    const double sy = s.dot(y);
    if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
      pairs.push_back({s, y});
      if (static_cast<int>(pairs.size()) > opts.memory) pairs.pop_front();
    }

    const double scale = std::max({std::abs(f_old), std::abs(fx), 1.0});
    if ((f_old - fx) <= opts.function_tolerance * scale) {
      if (pg <= opts.gradient_tolerance) {
        reason = StopReason::GradientTolerance;
      } else {
        reason = StopReason::FunctionTolerance;
      }
      converged = true;
      break;
    }
  }

  result.x_star = x;
  result.objective_value = fx;
  result.iterations = iter;
  result.gradient_norm = pg;
  result.converged = converged;
  result.reason = reason;
  result.starts_tried = 1;
  result.function_evaluations = f.count() + grad_evals;
  return result;
}

SolveResult multi_start(const Objective& objective, const Box& bounds, const SolverOptions& opts,
                        std::span<const Vector> warm_starts) {
  bounds.validate();
  opts.validate();
  const Eigen::Index n = bounds.size();

  std::vector<Vector> starts;
  for (const Vector& w : warm_starts) {
    if (w.size() != n) throw InvalidArgument("warm start has the wrong dimension");
    starts.push_back(bounds.project(w));
  }
  starts.push_back(bounds.center());

  const int lhs = opts.n_starts - 1;
  if (lhs > 0) {
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vector> points(static_cast<std::size_t>(lhs), Vector(n));
    std::vector<int> strata(static_cast<std::size_t>(lhs));
    for (Eigen::Index i = 0; i < n; ++i) {
      std::iota(strata.begin(), strata.end(), 0);
      std::shuffle(strata.begin(), strata.end(), rng);
      for (int k = 0; k < lhs; ++k) {
        const double u = (strata[k] + unit(rng)) / lhs;
        points[k][i] = bounds.lower[i] + u * (bounds.upper[i] - bounds.lower[i]);
      }
    }
    for (Vector& p : points) starts.push_back(bounds.project(p));
  }

  std::optional<SolveResult> best;
  long evaluations = 0;
  std::string failures;
  for (const Vector& x0 : starts) {
    try {
      SolveResult r = minimize_bounded(objective, x0, bounds, opts);
      evaluations += r.function_evaluations;
      if (!best || r.objective_value < best->objective_value) best = std::move(r);
    } catch (const Error& e) {
      evaluations += 1;
      if (!failures.empty()) failures += "; ";
      failures += e.what();
    }
  }
  if (!best) throw SolverFailure("every start failed: " + failures);
  best->starts_tried = static_cast<int>(starts.size());
  best->function_evaluations = evaluations;
  return *best;
}

}  // namespace feecal::optim
