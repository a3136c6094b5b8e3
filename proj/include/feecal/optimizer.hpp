#pragma once

// Bound-constrained smooth minimization: limited-memory BFGS with gradient
// projection onto a box, finite-difference gradients and deterministic
// multi-start.

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include <Eigen/Dense>

namespace feecal::optim {

using Vector = Eigen::VectorXd;
using Objective = std::function<double(const Vector&)>;

struct Box {
  Vector lower;
  Vector upper;

  Eigen::Index size() const { return lower.size(); }
  bool contains(const Vector& x) const;
  Vector project(const Vector& x) const;
  Vector center() const { return 0.5 * (lower + upper); }

  /// Throws InvalidArgument on size mismatch, non-finite ends or lower > upper.
  void validate() const;
};

struct SolverOptions {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-5;        ///< on the projected-gradient inf-norm
  double function_tolerance = 2.220446049250313e-9;  ///< relative decrease per iteration
  double finite_difference_step = 1e-6;   ///< relative, central differences
  double finite_difference_floor = 1e-10;  ///< absolute lower limit of the step
  int n_starts = 8;
  std::uint64_t seed = 0;
  int memory = 10;
  int max_line_search_steps = 40;

  void validate() const;
};

enum class StopReason { GradientTolerance, FunctionTolerance, MaxIterations, LineSearchFailure };

std::string to_string(StopReason reason);

struct SolveResult {
  Vector x_star;
  double objective_value = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;  ///< projected-gradient inf-norm at x_star
  bool converged = false;
  StopReason reason = StopReason::MaxIterations;
  int starts_tried = 1;
  long function_evaluations = 0;
};

/// Central differences with step max(rel * max(|x_i|, 1), floor); the step
/// turns one-sided when a bound lies closer than the step. Throws
/// NonFiniteObjective if any evaluation is NaN or Inf.
Vector finite_difference_gradient(const Objective& objective, const Vector& x, const Box& bounds,
                                  double relative_step, double step_floor = 1e-10,
                                  long* evaluations = nullptr);

/// Every evaluated point is inside `bounds`. The objective never increases.
/// Throws NonFiniteObjective when the objective is not finite at x0.
SolveResult minimize_bounded(const Objective& objective, const Vector& x0, const Box& bounds,
                             const SolverOptions& opts = {});

/// Starts: each warm start (projected onto the box), then the box center,
/// then n_starts - 1 Latin-hypercube points drawn from opts.seed. Returns the
/// lowest objective, earlier start on ties, with evaluations summed over all
/// starts. Throws SolverFailure only if every start fails.
SolveResult multi_start(const Objective& objective, const Box& bounds, const SolverOptions& opts = {},
                        std::span<const Vector> warm_starts = {});

}  // namespace feecal::optim
