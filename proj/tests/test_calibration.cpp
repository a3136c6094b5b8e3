#include <cmath>
#include <numeric>

#include <doctest.h>

#include "feecal/calibration.hpp"
#include "feecal/errors.hpp"

using namespace feecal;
using doctest::Approx;

namespace {

const CycleDataset& noiseless() {
  static const CycleDataset d = simulate_cycle(Scenario::default_training(), default_truth());
  return d;
}

SoilParameters with_compaction(SoilParameters s, const StageResult& stage) {
  s.kc = stage.values[2];
  s.kphi = stage.values[3];
  s.n = stage.values[4];
  return s;
}

}  // namespace

TEST_CASE("gaussian filter") {
  const std::vector<double> flat(30, 4.5);
  for (double v : gaussian_filter(flat, 3.0)) CHECK(v == Approx(4.5).epsilon(1e-14));
  const std::vector<double> ramp{1, 5, 2, 8, 3};
  CHECK(gaussian_filter(ramp, 0.0) == ramp);

  const double sigma = 2.0;
  const int n = 41, c = 20, radius = static_cast<int>(4 * sigma + 0.5);
  std::vector<double> impulse(n, 0.0);
  impulse[c] = 1.0;
  const auto out = gaussian_filter(impulse, sigma);
  double norm = 0;
  for (int k = -radius; k <= radius; ++k) norm += std::exp(-0.5 * k * k / (sigma * sigma));
  for (int i = 0; i < n; ++i) {
    const int k = i - c;
    const double expect = std::abs(k) <= radius ? std::exp(-0.5 * k * k / (sigma * sigma)) / norm : 0.0;
    CHECK(out[i] == Approx(expect).epsilon(1e-12).scale(1e-12));
  }

  // Edge handling: mirror that repeats the edge sample, checked by a direct convolution.
  const std::vector<double> s{3, -1, 4, 1, -5, 9, 2, 6};
  const auto got = gaussian_filter(s, 1.5);
  const int r = static_cast<int>(4 * 1.5 + 0.5), m = static_cast<int>(s.size());
  for (int i = 0; i < m; ++i) {
    double acc = 0, w = 0;
    for (int k = -r; k <= r; ++k) {
      int j = i + k;
      while (j < 0 || j >= m) j = j < 0 ? -j - 1 : 2 * m - j - 1;
      const double g = std::exp(-0.5 * k * k / 2.25);
      acc += g * s[j];
      w += g;
    }
    CHECK(got[i] == Approx(acc / w).epsilon(1e-12));
  }
}

TEST_CASE("rmse and resultant") {
  const std::vector<double> a{1, -4, 2, 3};
  ErrorMetric e = rmse(a, a);
  CHECK(e.absolute == 0.0);
  CHECK(e.percent == 0.0);
  std::vector<double> b = a;
  for (double& v : b) v += 2.5;
  e = rmse(a, b);
  CHECK(e.absolute == Approx(2.5));
  CHECK(e.peak == 4.0);
  CHECK(e.percent == Approx(62.5));
  CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), EmptySeries);
  CHECK_THROWS_AS(rmse(a, std::vector<double>{1}), InvalidArgument);
  CHECK(std::isinf(rmse(std::vector<double>{0, 0}, std::vector<double>{1, 1}).percent));

  CHECK(resultant(3, 4) == 5.0);
  CHECK(resultant(0, 0) == 0.0);
  CHECK(resultant(50, 86.60) == Approx(100.0).epsilon(1e-3));
}

TEST_CASE("percent rule back-computes consistent peaks") {
  // (absolute N, fraction) pairs for tangential, normal and resultant rows.
  const double pt = 96.2 / 0.090, pn = 137.7 / 0.114, pr = 139.2 / 0.086;
  CHECK(std::hypot(pt, pn) == Approx(pr).epsilon(0.005));
}

TEST_CASE("noiseless multi-stage round trip") {
  const CycleDataset& d = noiseless();
  const CalibrationReport r = calibrate_multi_stage(d);
  REQUIRE(r.stages.size() == 3);
  CHECK(r.rmse_fr.percent <= 1.0);
  CHECK(r.stages[0].target_rmse.percent <= 1.0);
  CHECK(r.fitted_ft.size() == d.size());
  CHECK(ParameterBounds::defaults().contains(r.theta_star));
  CHECK(r.function_evaluations ==
        r.stages[0].function_evaluations + r.stages[1].function_evaluations +
            r.stages[2].function_evaluations);
  CHECK(r.samples_out_of_soil == 31);

  SUBCASE("stage three leaves the normal force alone") {
    const SoilParameters before = with_compaction(r.theta_star, r.stages[0]);
    const CycleFit pre = evaluate_fit(d, before), post = evaluate_fit(d, r.theta_star);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(pre.prediction.samples[i].force.f_n == post.prediction.samples[i].force.f_n);
    }
    CHECK(post.ft.absolute <= pre.ft.absolute);
  }

  SUBCASE("stage three from an optimum stays put") {
    const StageResult s3 = calibrate_stage3(d, r.theta_star);
    CHECK(s3.values[0] == Approx(r.theta_star.kc).epsilon(1e-6));
    CHECK(s3.values[2] == Approx(r.theta_star.n).epsilon(1e-6));
  }

  SUBCASE("same seed gives the same report") {
    const CalibrationReport again = calibrate_multi_stage(d);
    CHECK(again.theta_star == r.theta_star);
    CHECK(again.function_evaluations == r.function_evaluations);
  }

  SUBCASE("prediction on the training path reproduces the fit") {
    const NextCyclePrediction p = predict_next_cycle(r.theta_star, Scenario::default_training());
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(p.prediction.samples[i].force.f_t == r.fitted_ft[i]);
      CHECK(p.prediction.samples[i].force.f_n == r.fitted_fn[i]);
    }
  }
}

TEST_CASE("stage two with the first subset at truth") {
  const SoilParameters truth = default_truth();
  SoilParameters fixed = ParameterBounds::defaults().center();
  fixed.adhesion_ca = truth.adhesion_ca;
  fixed.delta = truth.delta;
  const StageResult s2 = calibrate_stage2(noiseless(), fixed);
  CHECK(s2.target == "fee_force");
  CHECK(s2.target_rmse.percent <= 1.0);

  SUBCASE("heavier soil fits heavier") {
    SoilParameters heavy = truth;
    heavy.gamma = 2 * truth.gamma;
    CalibrationOptions o;
    o.bounds.ranges[0] = {1000.0, 4500.0};
    const CycleDataset d2 = simulate_cycle(Scenario::default_training(), heavy);
    CHECK(calibrate_stage2(d2, fixed, o).values[0] > calibrate_stage2(noiseless(), fixed, o).values[0]);
  }
}

TEST_CASE("single-stage weight semantics") {
  CalibrationOptions o;
  o.lambda_weight = 1.0;
  o.solver.n_starts = 2;
  CycleDataset d = noiseless();
  const CalibrationReport a = calibrate_single_stage(d, o);
  for (double& v : d.f_n_obs) v = 3.0 * v + 500.0;
  const CalibrationReport b = calibrate_single_stage(d, o);
  CHECK(a.theta_star == b.theta_star);
}

TEST_CASE("stage one uses the observed normal force") {
  const StageResult s1 = calibrate_stage1(noiseless());
  CycleDataset d = noiseless();
  for (double& v : d.f_n_obs) v *= 1.5;
  CHECK(calibrate_stage1(d).values != s1.values);
}

TEST_CASE("degenerate inputs") {
  Scenario s = Scenario::default_training();
  s.path = QuadraticBezier{{-1.0, 0.5}, {0.0, 0.6}, {0.5, 0.9}};
  const CycleDataset above = simulate_cycle(s, default_truth());
  CHECK_THROWS_AS(calibrate_stage1(above), DegenerateDepths);
  CHECK_THROWS_AS(calibrate_multi_stage(above), DegenerateDepths);

  CalibrationOptions bad;
  bad.lambda_weight = 1.5;
  CHECK_THROWS_AS(calibrate_multi_stage(noiseless(), bad), InvalidArgument);

  SUBCASE("prior cycle above the surface changes nothing") {
    const auto prior = s.trajectory();
    const SoilParameters t = default_truth();
    const NextCyclePrediction a = predict_next_cycle(t, Scenario::held_out());
    const NextCyclePrediction b = predict_next_cycle(t, Scenario::held_out(), prior);
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
      CHECK(a.prediction.samples[i].force.f_t == b.prediction.samples[i].force.f_t);
    }
  }
}
