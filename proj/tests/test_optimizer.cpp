#include <cmath>

#include <doctest.h>

#include "feecal/errors.hpp"
#include "feecal/optimizer.hpp"

using namespace feecal::optim;
using doctest::Approx;

namespace {

Box box(double lo, double hi, int n) {
  return {Vector::Constant(n, lo), Vector::Constant(n, hi)};
}

}  // namespace

TEST_CASE("quadratic inside and outside the box") {
  const Objective f = [](const Vector& x) { return (x.array() - 0.3).square().sum(); };
  SolveResult r = minimize_bounded(f, Vector::Constant(3, -0.8), box(-1, 1, 3));
  CHECK(r.converged);
  CHECK((r.x_star.array() - 0.3).abs().maxCoeff() < 1e-6);

  Box b{Vector(3), Vector(3)};
  b.lower << -1, 0.5, -1;
  b.upper << 0.1, 1, 1;
  r = minimize_bounded(f, b.project(Vector::Zero(3)), b);
  CHECK_THROWS_AS(minimize_bounded(f, Vector::Zero(3), b), feecal::InvalidArgument);
  CHECK(r.x_star[0] == Approx(0.1).epsilon(1e-9));
  CHECK(r.x_star[1] == Approx(0.5).epsilon(1e-9));
  CHECK(r.x_star[2] == Approx(0.3).epsilon(1e-6));
}

TEST_CASE("rosenbrock in a box") {
  const Objective f = [](const Vector& x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const SolveResult r = minimize_bounded(f, x0, box(-2, 2, 2));
  CHECK(std::abs(r.x_star[0] - 1) < 1e-4);
  CHECK(std::abs(r.x_star[1] - 1) < 1e-4);
}

TEST_CASE("finite differences") {
  const Box b = box(-10, 10, 3);
  Vector a(3), x(3);
  a << 1.5, -2.0, 0.25;
  x << 0.3, -4.0, 7.0;
  Vector g = finite_difference_gradient([&](const Vector& v) { return a.dot(v); }, x, b, 1e-6);
  CHECK((g - a).cwiseAbs().maxCoeff() < 1e-8);
  g = finite_difference_gradient([](const Vector& v) { return v.squaredNorm(); }, x, b, 1e-6);
  CHECK((g - 2 * x).cwiseAbs().maxCoeff() < 1e-7);
  const Box one = box(-1, 1, 1);
  long evals = 0;
  g = finite_difference_gradient([](const Vector& v) { return std::exp(v[0]); }, Vector::Zero(1), one,
                                 1e-6, 1e-10, &evals);
  CHECK(std::abs(g[0] - 1.0) < 1e-8);
  CHECK(evals == 2);
  // At a bound the step turns one-sided and stays inside the box.
  g = finite_difference_gradient(
      [&](const Vector& v) {
        CHECK(one.contains(v));
        return v[0] * v[0];
      },
      Vector::Constant(1, 1.0), one, 1e-6);
  CHECK(g[0] == Approx(2.0).epsilon(1e-5));
  CHECK_THROWS_AS(finite_difference_gradient([](const Vector&) { return NAN; }, Vector::Zero(1),
                                             one, 1e-6),
                  feecal::NonFiniteObjective);
}

TEST_CASE("multi-start") {
  // Shallow basin near -1.5, global one near 2.2.
  const Objective f = [](const Vector& x) {
    const double v = x[0];
    return 0.5 - std::exp(-4 * (v + 1.5) * (v + 1.5)) * 0.6 - std::exp(-3 * (v - 2.2) * (v - 2.2));
  };
  const Box b = box(-3, 3, 1);
  double best = 0, fbest = 1e9;
  for (int k = 0; k <= 60000; ++k) {
    const double v = -3 + 6.0 * k / 60000;
    const double fv = f(Vector::Constant(1, v));
    if (fv < fbest) fbest = fv, best = v;
  }
  SolverOptions o;
  o.n_starts = 8;
  o.seed = 4;
  const Vector warm = Vector::Constant(1, -1.4);
  const SolveResult r = multi_start(f, b, o, std::span<const Vector>(&warm, 1));
  CHECK(r.x_star[0] == Approx(best).epsilon(1e-3));
  CHECK(r.objective_value <= fbest + 1e-9);
  const SolveResult again = multi_start(f, b, o, std::span<const Vector>(&warm, 1));
  CHECK(again.x_star == r.x_star);
  CHECK(again.function_evaluations == r.function_evaluations);

  o.n_starts = 1;
  const SolveResult single = multi_start(f, b, o);
  const SolveResult direct = minimize_bounded(f, b.center(), b, o);
  CHECK(single.x_star == direct.x_star);
  CHECK(single.function_evaluations == direct.function_evaluations);
}

TEST_CASE("objective never increases and stays in the box") {
  int outside = 0;
  const Box b = box(0, 1, 4);
  const Objective f = [&](const Vector& x) {
    if (!b.contains(x)) ++outside;
    return std::sin(3 * x[0]) + x.squaredNorm() - x[3];
  };
  const Vector x0 = Vector::Constant(4, 0.9);
  const SolveResult r = minimize_bounded(f, x0, b);
  CHECK(outside == 0);
  CHECK(r.objective_value <= f(x0));
  CHECK_THROWS_AS(minimize_bounded([](const Vector&) { return INFINITY; }, x0, b),
                  feecal::NonFiniteObjective);
  Box bad = b;
  bad.lower[1] = 2;
  CHECK_THROWS_AS(bad.validate(), feecal::InvalidArgument);
}
