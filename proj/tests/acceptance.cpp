// Acceptance criteria for the force model, the calibration pipeline and the
// optimizer. Prints one PASS/FAIL line per criterion. The exit status is zero
// when the failing set equals the set named with --expect-fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include "feecal/calibration.hpp"
#include "feecal/errors.hpp"
#include "feecal/optimizer.hpp"
#include "feecal/synthetic.hpp"

using namespace feecal;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances and budgets.
constexpr int kFormTuples = 100000;
constexpr double kFormRelTol = 1e-10;
constexpr double kFormSeconds = 10.0;
constexpr int kBetaConfigs = 1000;
constexpr double kGridStepDeg = 0.01;
constexpr double kBetaValueTol = 1e-9;
constexpr double kBetaSeconds = 30.0;
constexpr double kNoiselessTrainPct = 1.0;
constexpr double kNoiselessHeldOutPct = 3.0;
constexpr double kNoisyPct = 15.0;
constexpr double kNoise = 0.05;
constexpr std::uint64_t kNoiseSeed = 42;
constexpr double kRoundTripSeconds = 300.0;
constexpr double kPipelineRefineTol = 1e-3;  // relative to peak F_R
constexpr int kRandomPaths = 30;
constexpr double kQuadTol = 1e-6;
constexpr double kRosenTol = 1e-4;
constexpr double kGradRelTol = 1e-6;
constexpr double kPeakIdentityTol = 0.005;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  std::string id;
  bool pass;
};
std::vector<Outcome> outcomes;

void report(const std::string& id, bool pass, const std::string& what) {
  std::printf("[%s] %s %s\n", pass ? "PASS" : "FAIL", id.c_str(), what.c_str());
  std::fflush(stdout);
  outcomes.push_back({id, pass});
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> resultant_series(std::span<const double> t, std::span<const double> n) {
  std::vector<double> r(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) r[i] = resultant(t[i], n[i]);
  return r;
}

// ---------------------------------------------------------------------------

void ac1() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double m = deg_to_rad(5.0);
  // Distance of an angle from the nearest multiple of pi.
  const auto clear = [&](double a) { return std::abs(std::remainder(a, kPi)) >= m; };
  double worst = 0.0;
  int n = 0;
  while (n < kFormTuples) {
    const double alpha = deg_to_rad(45.0) * u(rng);
    const double rho = deg_to_rad(10.0 + 160.0 * u(rng));
    const double phi = 0.785 * u(rng), delta = 0.785 * u(rng);
    const double beta = deg_to_rad(5.0 + 170.0 * u(rng));
    if (!(clear(beta) && clear(rho) && clear(beta + phi) && clear(rho + delta + beta + phi) &&
          std::abs(rho + delta + beta + phi - kPi) >= m && std::cos(alpha) >= std::sin(m))) {
      continue;
    }
    const BearingFactors a = bearing_factors_original(alpha, beta, rho, phi, delta);
    const BearingFactors b = bearing_factors_canonical(alpha, beta, rho, phi, delta);
    const double pa[] = {a.n_gamma, a.n_c, a.n_a, a.n_q};
    const double pb[] = {b.n_gamma, b.n_c, b.n_a, b.n_q};
    for (int k = 0; k < 4; ++k) {
      const double scale = std::max(std::abs(pa[k]), std::abs(pb[k]));
      if (scale > 0.0) worst = std::max(worst, std::abs(pa[k] - pb[k]) / scale);
    }
    ++n;
  }
  const double t = since(start);
  report("AC1", worst <= kFormRelTol && t < kFormSeconds,
         fmt("algebraic-form equivalence: worst relative difference %.2e over %d tuples "
             "(tol %.0e), %.2f s (limit %.0f s)",
             worst, n, kFormRelTol, t, kFormSeconds));
}

void ac2() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const FeasibilityMargins mg;
  const double step = deg_to_rad(kGridStepDeg);
  int n = 0, bad_arg = 0, bad_val = 0;
  double worst_arg = 0.0, worst_val = -1e300;
  while (n < kBetaConfigs) {
    const double alpha = mg.alpha_max * u(rng);
    const double rho = deg_to_rad(10.0 + 110.0 * u(rng));
    const double phi = 0.785 * u(rng), delta = 0.785 * u(rng);
    // Exhaustive grid over multiples of the step that satisfy every constraint.
    double gbest = 0.0, fbest = INFINITY;
    for (int k = 1; k * step < kPi; ++k) {
      const double b = k * step;
      if (b < mg.eps1 || rho + delta + b + phi > kPi - mg.eps2 || alpha + b > kPi / 2 ||
          b + phi > kPi - std::asin(mg.denominator)) {
        continue;
      }
      const double v = unit_weight_factor(alpha, b, rho, phi, delta);
      if (v < fbest) fbest = v, gbest = b;
    }
    if (!std::isfinite(fbest)) continue;
    const double beta = solve_beta(alpha, rho, phi, delta);
    const double fb = unit_weight_factor(alpha, beta, rho, phi, delta);
    const double darg = std::abs(beta - gbest);
    worst_arg = std::max(worst_arg, darg);
    worst_val = std::max(worst_val, fb - fbest);
    if (darg > step * (1 + 1e-9)) ++bad_arg;
    if (fb > fbest + kBetaValueTol) ++bad_val;
    ++n;
  }
  const double t = since(start);
  report("AC2", bad_arg == 0 && bad_val == 0 && t < kBetaSeconds,
         fmt("beta optimality: %d configs, worst |beta*-grid| %.4f deg (limit %.2f), worst "
             "N_gamma(beta*)-grid min %.2e (limit %.0e), %d/%d misses, %.2f s",
             n, rad_to_deg(worst_arg), kGridStepDeg, worst_val, kBetaValueTol, bad_arg, bad_val, t));
}

// Shared data for the round-trip criteria.
struct RoundTrip {
  CycleDataset clean, noisy;
  CalibrationReport multi_clean, multi_noisy, single_clean, single_noisy;
  double multi_clean_s = 0, multi_noisy_s = 0;
};

ErrorMetric held_out_error(const SoilParameters& theta) {
  const Scenario h = Scenario::held_out();
  const CycleDataset truth = simulate_cycle(h, default_truth());
  const NextCyclePrediction p = predict_next_cycle(theta, h);
  std::vector<double> obs, pred;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!p.prediction.samples[i].valid) continue;
    obs.push_back(resultant(truth.f_t_obs[i], truth.f_n_obs[i]));
    pred.push_back(resultant(p.prediction.samples[i].force.f_t, p.prediction.samples[i].force.f_n));
  }
  return rmse(obs, pred);
}

void ac3(RoundTrip& rt) {
  const ErrorMetric h = held_out_error(rt.multi_clean.theta_star);
  const double pct = rt.multi_clean.rmse_fr.percent;
  report("AC3",
         rt.clean.size() == 281 && pct <= kNoiselessTrainPct && h.percent <= kNoiselessHeldOutPct &&
             rt.multi_clean_s < kRoundTripSeconds,
         fmt("noiseless round trip: %zu samples, training F_R %.3f%% (limit %.0f%%), held-out "
             "F_R %.3f%% (limit %.0f%%), %.2f s",
             rt.clean.size(), pct, kNoiselessTrainPct, h.percent, kNoiselessHeldOutPct,
             rt.multi_clean_s));
}

void ac4(RoundTrip& rt) {
  const double pct = rt.multi_noisy.rmse_fr.percent;
  report("AC4", pct <= kNoisyPct && rt.multi_noisy_s < kRoundTripSeconds,
         fmt("noisy round trip (%.0f%% noise, seed %llu): F_R %.3f%% (limit %.0f%%), %.2f s",
             100 * kNoise, static_cast<unsigned long long>(kNoiseSeed), pct, kNoisyPct,
             rt.multi_noisy_s));
}

void ac5(RoundTrip& rt) {
  const long mc = rt.multi_clean.function_evaluations, sc = rt.single_clean.function_evaluations;
  const long mn = rt.multi_noisy.function_evaluations, sn = rt.single_noisy.function_evaluations;
  report("AC5", mc <= sc && mn <= sn,
         fmt("evaluation economy: noiseless multi %ld vs single %ld, noisy multi %ld vs single %ld",
             mc, sc, mn, sn));
}

void ac6(RoundTrip& rt) {
  bool ok = true;
  std::string detail;
  for (auto [data, rep, label] : {std::tuple{&rt.clean, &rt.multi_clean, "noiseless"},
                                  std::tuple{&rt.noisy, &rt.multi_noisy, "noisy"}}) {
    SoilParameters before = rep->theta_star;
    const StageResult& s1 = rep->stages.at(0);
    before.kc = s1.values[2];
    before.kphi = s1.values[3];
    before.n = s1.values[4];
    const CycleFit pre = evaluate_fit(*data, before), post = evaluate_fit(*data, rep->theta_star);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < data->size(); ++i) {
      if (pre.prediction.samples[i].force.f_n != post.prediction.samples[i].force.f_n) ++changed;
    }
    ok = ok && post.ft.absolute <= pre.ft.absolute && changed == 0;
    detail += fmt("%s F^T RMSE %.3f -> %.3f N, F^N samples changed %zu; ", label, pre.ft.absolute,
                  post.ft.absolute, changed);
  }
  report("AC6", ok, "stage-3 contract: " + detail);
}

// Margin audit of one cycle prediction.
int margin_violations(const CyclePrediction& p, std::span<const SampleGeometry> geo,
                      const SoilParameters& s, double alpha, const FeasibilityMargins& mg) {
  int bad = 0;
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    const SamplePrediction& sp = p.samples[i];
    if (!std::isfinite(sp.force.f_t) || !std::isfinite(sp.force.f_n)) ++bad;
    if (!sp.in_soil) continue;
    const double b = sp.beta, r = geo[i].rho;
    const double total = r + s.delta + b + s.phi;
    const bool fine = b >= mg.eps1 && total <= kPi - mg.eps2 && r >= mg.rho_min &&
                      std::abs(std::sin(b)) > mg.denominator && std::abs(std::sin(r)) > mg.denominator &&
                      std::cos(alpha) > mg.denominator &&
                      std::abs(std::sin(b + s.phi)) > mg.denominator &&
                      std::abs(std::sin(total)) > mg.denominator;
    if (!fine) ++bad;
  }
  return bad;
}

void ac7() {
  const SoilParameters truth = default_truth();
  std::vector<Scenario> paths{Scenario::default_training(), Scenario::held_out()};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < kRandomPaths; ++k) {
    Scenario s = Scenario::default_training();
    const double x2 = 1.4 + 0.8 * u(rng);
    s.path = QuadraticBezier{{-0.4 + 0.3 * u(rng), 0.05 * u(rng)},
                             {0.6 + 0.8 * u(rng), -0.3 * u(rng)},
                             {x2, x2 * std::tan(deg_to_rad(30.0))}};
    paths.push_back(s);
  }

  int feasible = 0, skipped = 0, bad_margin = 0, samples = 0;
  std::size_t shared = 0, mismatched = 0;
  double pipeline_worst = 0.0;
  for (const Scenario& s : paths) {
    const auto traj = s.trajectory();
    const auto geo = sample_geometry(traj, s.surface);
    const auto pred = predict_cycle_forces(wedge_states(geo, truth.gamma, s.loader.omega), truth,
                                           s.loader, s.surface.alpha(), s.margins);
    if (!pred.ok()) {
      ++skipped;  // outside the feasible set; not a trajectory the criterion covers
      continue;
    }
    ++feasible;
    samples += static_cast<int>(traj.size());
    bad_margin += margin_violations(pred, geo, truth, s.surface.alpha(), s.margins);

    // x2 refinement. Swept load is taken from one fine reference path shared
    // by both samplings, so the comparison isolates the force model.
    Scenario fine = s;
    fine.sample_rate = 2.0 * s.sample_rate;
    const std::size_t n1 = s.sample_count(), n2 = fine.sample_count();
    if (n2 != 2 * n1 - 1) continue;
    const QuadraticBezier& curve = std::get<QuadraticBezier>(s.path);
    const std::size_t nref = 4 * (n2 - 1) + 1;
    const double span = static_cast<double>(n1 - 1) / s.sample_rate;
    const auto ref = quadratic_bezier_path(curve, nref, span, s.surface, s.margins);
    const auto ref_area = cumulative_swept_area(ref, s.surface);
    const auto forces_at = [&](const Scenario& sc, std::size_t stride) {
      const auto tr = sc.trajectory();
      auto g = sample_geometry(tr, sc.surface);
      for (std::size_t i = 0; i < g.size(); ++i) g[i].area = ref_area[i * stride];
      return std::pair{tr, predict_cycle_forces(wedge_states(g, truth.gamma, sc.loader.omega), truth,
                                                sc.loader, sc.surface.alpha(), sc.margins)};
    };
    const auto [t1, p1] = forces_at(s, 8);
    const auto [t2, p2] = forces_at(fine, 4);
    for (std::size_t i = 0; i < n1; ++i) {
      ++shared;
      if (t1[i].t != t2[2 * i].t || p1.samples[i].force.f_t != p2.samples[2 * i].force.f_t ||
          p1.samples[i].force.f_n != p2.samples[2 * i].force.f_n) {
        ++mismatched;
      }
    }

    // Full pipeline, each sampling with its own polygonal swept area.
    const CycleDataset c1 = simulate_cycle(s, truth), c2 = simulate_cycle(fine, truth);
    const auto r1 = resultant_series(c1.f_t_obs, c1.f_n_obs);
    const auto r2 = resultant_series(c2.f_t_obs, c2.f_n_obs);
    const double peak = *std::max_element(r1.begin(), r1.end());
    for (std::size_t i = 0; i < n1; ++i) {
      pipeline_worst = std::max(pipeline_worst, std::abs(r1[i] - r2[2 * i]) / peak);
    }
  }
  report("AC7",
         feasible >= 2 && bad_margin == 0 && mismatched == 0 && pipeline_worst <= kPipelineRefineTol,
         fmt("continuity: %d feasible paths (%d infeasible skipped), %d samples, %d non-finite or "
             "margin violations; x2 refinement %zu/%zu shared stamps identical; full pipeline "
             "worst shift %.2e of peak F_R (limit %.0e)",
             feasible, skipped, samples, bad_margin, shared - mismatched, shared, pipeline_worst,
             kPipelineRefineTol));
}

ErrorMetric cycle2_error(const SoilParameters& theta, const Scenario& cycle2,
                         std::span<const TrajectorySample> prior, const CycleDataset& truth,
                         bool adaptive) {
  const NextCyclePrediction p = adaptive ? predict_next_cycle(theta, cycle2, prior)
                                         : predict_next_cycle(theta, cycle2);
  std::vector<double> obs, pred;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const SamplePrediction& s = p.prediction.samples[i];
    obs.push_back(resultant(truth.f_t_obs[i], truth.f_n_obs[i]));
    // An unevaluable sample counts as a zero-force prediction.
    pred.push_back(s.valid ? resultant(s.force.f_t, s.force.f_n) : 0.0);
  }
  return rmse(obs, pred);
}

void ac8(RoundTrip& rt) {
  const Scenario cycle1 = Scenario::default_training();
  const auto traj1 = cycle1.trajectory();
  Scenario cycle2 = cycle1;
  cycle2.path = QuadraticBezier{{0.0, -0.02}, {1.5, -0.3}, {2.2, 2.2 * std::tan(deg_to_rad(30.0))}};

  // Ground truth for cycle 2 is simulated on the surface cycle 1 left behind.
  Scenario carved = cycle2;
  carved.surface = surface_after_cycle(cycle1.surface, traj1);
  const CycleDataset truth2 = simulate_cycle(carved, default_truth());

  bool ok = true;
  std::string detail;
  for (auto [rep, label] : {std::pair{&rt.multi_clean, "noiseless"}, std::pair{&rt.multi_noisy, "noisy"}}) {
    const ErrorMetric a = cycle2_error(rep->theta_star, cycle2, traj1, truth2, true);
    const ErrorMetric n = cycle2_error(rep->theta_star, cycle2, traj1, truth2, false);
    ok = ok && a.absolute <= n.absolute;
    detail += fmt("%s theta: polyline %.1f N (%.2f%%) vs sloped line %.1f N (%.2f%%); ", label,
                  a.absolute, a.percent, n.absolute, n.percent);
  }
  report("AC8", ok, "dual-cycle adaptive depth: " + detail);
}

void ac9() {
  using namespace optim;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  // Separable quadratic, centre outside the box in some coordinates.
  double quad_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6;
    Vector c(n), lo(n), hi(n);
    for (int i = 0; i < n; ++i) {
      c[i] = -3 + 6 * u(rng);
      lo[i] = -2 + 2 * u(rng);
      hi[i] = lo[i] + 0.2 + 2 * u(rng);
    }
    const Box box{lo, hi};
    const Objective f = [&](const Vector& x) { return (x - c).squaredNorm(); };
    const SolveResult r = minimize_bounded(f, box.center(), box);
    quad_err = std::max(quad_err, (r.x_star - box.project(c)).cwiseAbs().maxCoeff());
  }

  const Objective rosen = [](const Vector& x) {
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  const Box rbox{Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)};
  double rosen_err = 0.0;
  for (auto [a, b] : {std::pair{-1.2, 1.0}, std::pair{-1.9, -1.9}, std::pair{1.9, -1.5}}) {
    Vector x0(2);
    x0 << a, b;
    const SolveResult r = minimize_bounded(rosen, x0, rbox);
    rosen_err = std::max(rosen_err, (r.x_star - Vector::Ones(2)).cwiseAbs().maxCoeff());
  }

  // Smooth test set with analytic gradients.
  struct Case {
    Objective f;
    std::function<Vector(const Vector&)> g;
  };
  Eigen::MatrixXd A(4, 4);
  A << 4, 1, 0, 0.5, 1, 3, 0.2, 0, 0, 0.2, 2, 0.1, 0.5, 0, 0.1, 1;
  const std::vector<Case> cases{
      {[&](const Vector& x) { return 0.5 * x.dot(A * x); }, [&](const Vector& x) { return Vector(A * x); }},
      {[](const Vector& x) {
         double s = 0;
         for (int i = 0; i + 1 < x.size(); ++i) s += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
         return s;
       },
       [](const Vector& x) {
         Vector g = Vector::Zero(x.size());
         for (int i = 0; i + 1 < x.size(); ++i) {
           const double t = x[i + 1] - x[i] * x[i];
           g[i] += -400 * x[i] * t - 2 * (1 - x[i]);
           g[i + 1] += 200 * t;
         }
         return g;
       }},
      {[](const Vector& x) { return std::exp(x.sum() / 4) + x.array().exp().sum(); },
       [](const Vector& x) {
         return Vector((x.array().exp() + std::exp(x.sum() / 4) / 4).matrix());
       }},
      {[](const Vector& x) { return std::sin(x[0]) * std::cos(x[1]) + x[2] * x[2] * x[3]; },
       [](const Vector& x) {
         Vector g(4);
         g << std::cos(x[0]) * std::cos(x[1]), -std::sin(x[0]) * std::sin(x[1]), 2 * x[2] * x[3],
             x[2] * x[2];
         return g;
       }},
  };
  const Box gbox{Vector::Constant(4, -2.0), Vector::Constant(4, 2.0)};
  double grad_err = 0.0;
  int points = 0;
  for (const Case& c : cases) {
    for (int k = 0; k < 50; ++k) {
      Vector x(4);
      for (int i = 0; i < 4; ++i) x[i] = -1.9 + 3.8 * u(rng);
      const Vector exact = c.g(x);
      const Vector fd = finite_difference_gradient(c.f, x, gbox, 1e-6);
      grad_err = std::max(grad_err, (fd - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff());
      ++points;
    }
  }
  report("AC9", quad_err <= kQuadTol && rosen_err <= kRosenTol && grad_err <= kGradRelTol,
         fmt("optimizer sanity: projected quadratic err %.1e (tol %.0e), Rosenbrock err %.1e (tol "
             "%.0e), finite-difference gradient rel err %.1e over %d points (tol %.0e)",
             quad_err, kQuadTol, rosen_err, kRosenTol, grad_err, points, kGradRelTol));
}

void ac10(RoundTrip& rt) {
  // Published (absolute N, fraction) pairs for the tangential, normal and resultant rows.
  const double pt = 96.2 / 0.090, pn = 137.7 / 0.114, pr = 139.2 / 0.086;
  const double published = std::abs(std::hypot(pt, pn) / pr - 1.0);

  // Our reports: the implied peak is recovered exactly, and the identity is checked.
  double recover = 0.0, identity = 0.0;
  std::string detail;
  for (auto [data, rep, label] : {std::tuple{&rt.clean, &rt.multi_clean, "noiseless"},
                                  std::tuple{&rt.noisy, &rt.multi_noisy, "noisy"}}) {
    const auto implied = [](const ErrorMetric& m) { return m.absolute / (m.percent / 100.0); };
    const double it = implied(rep->rmse_ft), in = implied(rep->rmse_fn), ir = implied(rep->rmse_fr);
    double mt = 0, mn = 0, mr = 0;
    std::size_t at = 0, an = 0;
    for (std::size_t i = 0; i < data->size(); ++i) {
      if (std::abs(data->f_t_obs[i]) > mt) mt = std::abs(data->f_t_obs[i]), at = i;
      if (std::abs(data->f_n_obs[i]) > mn) mn = std::abs(data->f_n_obs[i]), an = i;
      mr = std::max(mr, resultant(data->f_t_obs[i], data->f_n_obs[i]));
    }
    recover = std::max({recover, std::abs(it / mt - 1), std::abs(in / mn - 1), std::abs(ir / mr - 1)});
    const double gap = std::abs(std::hypot(it, in) / ir - 1.0);
    identity = std::max(identity, gap);
    detail += fmt("%s sqrt(%.0f^2+%.0f^2)=%.0f vs %.0f (%.1f%%, F^T peak at t=%.2f s, F^N peak at "
                  "t=%.2f s); ",
                  label, it, in, std::hypot(it, in), ir, 100 * gap, data->samples[at].t,
                  data->samples[an].t);
  }
  report("AC10",
         published <= kPeakIdentityTol && recover <= 1e-12 && identity <= kPeakIdentityTol,
         fmt("metrics consistency: published pairs agree to %.2f%%; implied peaks match series "
             "peaks to %.1e; own reports: ",
             100 * published, recover) + detail + fmt("tol %.1f%%", 100 * kPeakIdentityTol));
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> expected;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--expect-fail") expected.insert(argv[++i]);
  }
  const auto total = Clock::now();
  try {
    ac1();
    ac2();

    RoundTrip rt;
    rt.clean = simulate_cycle(Scenario::default_training(), default_truth());
    rt.noisy = add_noise(rt.clean, kNoise, kNoiseSeed);
    auto t = Clock::now();
    rt.multi_clean = calibrate_multi_stage(rt.clean);
    rt.multi_clean_s = since(t);
    t = Clock::now();
    rt.multi_noisy = calibrate_multi_stage(rt.noisy);
    rt.multi_noisy_s = since(t);
    rt.single_clean = calibrate_single_stage(rt.clean);
    rt.single_noisy = calibrate_single_stage(rt.noisy);

    ac3(rt);
    ac4(rt);
    ac5(rt);
    ac6(rt);
    ac7();
    ac8(rt);
    ac9();
    ac10(rt);
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }

  int failed = 0, unexpected = 0;
  for (const Outcome& o : outcomes) {
    if (!o.pass) ++failed;
    if (o.pass == expected.contains(o.id)) ++unexpected;
  }
  std::printf("%zu criteria, %d passed, %d failed (%zu declared known failures), %.1f s\n",
              outcomes.size(), static_cast<int>(outcomes.size()) - failed, failed, expected.size(),
              since(total));
  return unexpected == 0 ? 0 : 1;
}
