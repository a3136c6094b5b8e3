#include "feecal/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

#include "feecal/errors.hpp"

namespace feecal {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

double peak_abs(const std::vector<double>& series) {
  double peak = 0.0;
  for (double v : series) peak = std::max(peak, std::abs(v));
  return peak;
}

}  // namespace

std::size_t Scenario::sample_count() const {
  if (const auto* samples = std::get_if<std::vector<TrajectorySample>>(&path)) {
    return samples->size();
  }
  // The epsilon keeps 4.67 s * 60 Hz = 280.2 from rounding the wrong way on
  // exact products such as 2 s * 60 Hz.
  return static_cast<std::size_t>(std::floor(duration * sample_rate + 1e-9)) + 1;
}

std::vector<TrajectorySample> Scenario::trajectory() const {
  if (const auto* samples = std::get_if<std::vector<TrajectorySample>>(&path)) {
    return *samples;
  }
  const std::size_t n = sample_count();
  const double span = static_cast<double>(n - 1) / sample_rate;
  return quadratic_bezier_path(std::get<QuadraticBezier>(path), n, span, surface, margins);
}

void Scenario::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw InvalidArgument("scenario.sample_rate must be positive and finite");
  }
  loader.validate();
  margins.validate();
  if (std::holds_alternative<QuadraticBezier>(path)) {
    if (!(duration > 0.0) || !std::isfinite(duration)) {
      throw InvalidArgument("scenario.duration must be positive and finite");
    }
    if (sample_count() < 2) throw InvalidArgument("scenario needs at least 2 samples");
  } else if (std::get<std::vector<TrajectorySample>>(path).empty()) {
    throw InvalidArgument("scenario has an empty trajectory");
  }
}

Scenario Scenario::default_training() {
  Scenario s;
  s.surface = SurfaceModel::sloped({0.0, 0.0}, deg_to_rad(30.0));
  s.path = QuadraticBezier{{-0.3, 0.02}, {1.3, -0.05}, {1.9, 1.09}};
  return s;
}

Scenario Scenario::held_out() {
  Scenario s = default_training();
  s.path = QuadraticBezier{{-0.2, 0.0}, {1.0, 0.0}, {1.6, 0.9}};
  return s;
}

CycleDataset simulate_cycle(const Scenario& scenario, const SoilParameters& truth) {
  scenario.validate();
  truth.validate();

  CycleDataset data;
  data.samples = scenario.trajectory();
  data.surface = scenario.surface;
  data.loader = scenario.loader;

  const std::vector<SampleGeometry> geometry = sample_geometry(data.samples, scenario.surface);
  const std::vector<WedgeState> wedges =
      wedge_states(geometry, truth.gamma, scenario.loader.omega);
  const CyclePrediction prediction = predict_cycle_forces(
      wedges, truth, scenario.loader, scenario.surface.alpha(), scenario.margins);
  if (!prediction.ok()) {
    std::vector<SampleErrors::Entry> entries;
    for (const SampleIssue& issue : prediction.issues) {
      entries.push_back({issue.index, issue.message});
    }
    throw SampleErrors(std::move(entries));
  }

  data.f_t_obs.reserve(data.samples.size());
  data.f_n_obs.reserve(data.samples.size());
  for (const SamplePrediction& p : prediction.samples) {
    data.f_t_obs.push_back(p.force.f_t);
    data.f_n_obs.push_back(p.force.f_n);
  }
  return data;
}

CycleDataset add_noise(const CycleDataset& dataset, double relative_sigma, std::uint64_t seed) {
  if (!(relative_sigma >= 0.0) || !std::isfinite(relative_sigma)) {
    throw InvalidArgument("relative_sigma must be finite and >= 0");
  }
  CycleDataset noisy = dataset;
  if (relative_sigma == 0.0) return noisy;

  std::mt19937_64 rng(seed);
  for (std::vector<double>* series : {&noisy.f_t_obs, &noisy.f_n_obs}) {
    const double sigma = relative_sigma * peak_abs(*series);
    if (sigma == 0.0) continue;
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : *series) v += noise(rng);
  }
  return noisy;
}

std::string_view to_string(PresetGroup group) {
  switch (group) {
    case PresetGroup::SoilType: return "soil_type";
    case PresetGroup::SoilState: return "soil_state";
    case PresetGroup::ContactMaterial: return "contact_material";
    case PresetGroup::PressureSinkage: return "pressure_sinkage";
  }
  return "unknown";
}

bool SoilPreset::matches(std::string_view key) const {
  if (iequals(name, key)) return true;
  return std::any_of(aliases.begin(), aliases.end(),
                     [&](const std::string& a) { return iequals(a, key); });
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Interval kpa(double lo, double hi) { return {lo * 1e3, hi * 1e3}; }

SoilPreset uscs(std::string name, std::string code, std::string full, double g_lo, double g_hi,
                double c_kpa, double phi_deg) {
  SoilPreset p;
  p.name = std::move(name);
  p.aliases = {std::move(code), std::move(full)};
  p.group = PresetGroup::SoilType;
  p.gamma = Interval{g_lo, g_hi};
  p.cohesion_c = kpa(c_kpa, c_kpa);
  p.phi = deg_to_rad(phi_deg);
  p.source = "USCS soil type table";
  return p;
}

SoilPreset state(std::string name, std::optional<Interval> gamma, Interval c_kpa,
                 bool adhesion_too) {
  SoilPreset p;
  p.name = std::move(name);
  p.group = PresetGroup::SoilState;
  p.gamma = gamma;
  p.cohesion_c = kpa(c_kpa.min, c_kpa.max);
  if (adhesion_too) p.adhesion_ca = p.cohesion_c;
  p.source = "soil state table";
  return p;
}

SoilPreset contact(std::string name, std::optional<double> delta_deg,
                   std::optional<Interval> ratio) {
  SoilPreset p;
  p.name = std::move(name);
  p.group = PresetGroup::ContactMaterial;
  if (delta_deg) p.delta = deg_to_rad(*delta_deg);
  p.delta_over_phi = ratio;
  p.source = "external friction by contact material";
  return p;
}

SoilPreset bekker(std::string name, std::vector<std::string> aliases, double kc_kn, double kphi_kn,
                  double n, std::string source) {
  SoilPreset p;
  p.name = std::move(name);
  p.aliases = std::move(aliases);
  p.group = PresetGroup::PressureSinkage;
  p.kc = kc_kn * 1e3;
  p.kphi = kphi_kn * 1e3;
  p.n = n;
  p.source = std::move(source);
  return p;
}

std::vector<SoilPreset> build_catalog() {
  std::vector<SoilPreset> c;
  c.push_back(uscs("Well-graded gravel", "GW", "Well-graded gravel, fine to coarse gravel", 1631, 1937, 0, 40));
  c.push_back(uscs("Poorly graded gravel", "GP", "Poorly graded gravel", 1631, 1937, 0, 38));
  c.push_back(uscs("Silty gravel", "GM", "Silty gravel", 1297, 1500, 0, 36));
  c.push_back(uscs("Clayey gravel", "GC", "Clayey gravel", 1297, 1500, 0, 34));
  c.push_back(uscs("Clayey gravel with fines", "GC-CL", "Clayey gravel with fines", 1297, 1500, 3, 29));
  c.push_back(uscs("Well-graded sand", "SW", "Well-graded sand, fine to coarse sand", 1410, 2279, 0, 38));
  c.push_back(uscs("Poorly graded sand", "SP", "Poorly graded sand", 1410, 2279, 0, 36));
  c.push_back(uscs("Silty sand", "SM", "Silty sand", 1378, 2371, 0, 34));
  c.push_back(uscs("Clayey sand", "SC", "Clayey sand", 1378, 2371, 0, 32));
  c.push_back(uscs("Silt", "ML", "Silt", 1300, 1380, 0, 33));
  c.push_back(uscs("Clay of low plasticity", "CL", "Clay of low plasticity, lean clay", 1330, 1390, 20, 27));
  c.push_back(uscs("Clay of high plasticity", "CH", "Clay of high plasticity, fat clay", 1330, 1470, 25, 22));
  c.push_back(uscs("Organic silt", "OL", "Organic silt, organic clay", 1330, 1500, 10, 25));
  c.push_back(uscs("Organic clay", "OH", "Organic clay, organic silt", 1330, 1500, 10, 22));
  c.push_back(uscs("Silt of high plasticity", "MH", "Silt of high plasticity, elastic silt", 1300, 1380, 5, 24));

  c.push_back(state("Soft and very soft cohesive soil", std::nullopt, {0, 12}, true));
  c.push_back(state("Cohesive soil with medium consistency", std::nullopt, {12, 24}, true));
  c.push_back(state("Stiff cohesive soil", std::nullopt, {24, 48}, true));
  c.push_back(state("Hard cohesive soil", std::nullopt, {48, 96}, true));
  c.push_back(state("Very Soft Soil", Interval{1631, 1937}, {0, 10}, false));
  c.push_back(state("Soft Soil", Interval{1733, 2039}, {10, 25}, false));
  c.push_back(state("Firm Soil", Interval{1784, 2141}, {25, 50}, false));
  c.push_back(state("Stiff Soil", Interval{1835, 2243}, {50, 100}, false));
  c.push_back(state("Very Stiff Soil", Interval{2141, 2243}, {100, 200}, false));
  c.push_back(state("Hard Soil", Interval{2039, 2345}, {200, kInf}, false));

  c.push_back(contact("Steel Piles (NAVFAC)", 20.0, std::nullopt));
  c.push_back(contact("USACE", std::nullopt, Interval{0.67, 0.83}));
  c.push_back(contact("Steel (Broms)", 20.0, std::nullopt));
  c.push_back(contact("Concrete (Broms)", std::nullopt, Interval{0.75, 0.75}));
  c.push_back(contact("Timber (Broms)", std::nullopt, Interval{2.0 / 3.0, 2.0 / 3.0}));
  c.push_back(contact("Lindeburg", std::nullopt, Interval{2.0 / 3.0, 2.0 / 3.0}));
  c.push_back(contact("Concrete Walls (Coulomb)", std::nullopt, Interval{2.0 / 3.0, 2.0 / 3.0}));

  const std::string tracked = "tracked vehicles on soft soils";
  const std::string lunar = "lunar trafficability";
  const std::string planetary = "planetary soils";
  c.push_back(bekker("Dry Loose Sand", {}, 0.0, 1.58e3, 1.01, tracked));
  c.push_back(bekker("Dry Compact Sand", {}, 9.57e1, 3.27e3, 1.15, tracked));
  c.push_back(bekker("Dry Sand LLL", {"Dry Sand Lunar Logistics Load"}, 0.99, 1.52e3, 1.10, tracked));
  c.push_back(bekker("Heavy Clay WES 40", {"Heavy Clay"}, 1.84, 1.03e2, 0.11, tracked));
  c.push_back(bekker("Lean Clay WES 32", {"Lean Clay"}, 1.52, 1.19e2, 0.15, tracked));
  c.push_back(bekker("LETE Sand", {}, 1.02e2, 5.30e3, 0.79, tracked));
  c.push_back(bekker("LETE Sand 2nd", {}, 6.94, 5.06e2, 0.71, tracked));
  c.push_back(bekker("Sandy Loam", {}, 1.19e1, 6.74e2, 0.81, tracked));
  c.push_back(bekker("Soft Snow", {}, 6.16, 1.49e2, 1.53, tracked));
  c.push_back(bekker("Soil Type A", {"Lunar Type A"}, 0.0, 8.20e2, 1.00, lunar));
  c.push_back(bekker("Soil Type B", {"Lunar Type B"}, 1.40, 8.20e2, 1.00, lunar));
  c.push_back(bekker("Soil Type C", {"Lunar Type C"}, 2.80, 8.20e2, 1.00, lunar));
  c.push_back(bekker("Moon", {}, 0.14, 8.20e2, 1.00, planetary));
  c.push_back(bekker("Mars (MSS-A)", {"Mars"}, 1.87e1, 7.63e2, 0.63, planetary));
  c.push_back(bekker("Earth (Dry Sand)", {}, 0.99, 1.52e3, 1.10, planetary));
  c.push_back(bekker("Earth (Clay)", {}, 1.31e1, 6.92e2, 0.50, planetary));
  return c;
}

}  // namespace

const std::vector<SoilPreset>& preset_catalog() {
  static const std::vector<SoilPreset> catalog = build_catalog();
  return catalog;
}

const SoilPreset& find_preset(std::string_view key) {
  for (const SoilPreset& p : preset_catalog()) {
    if (p.matches(key)) return p;
  }
  throw InvalidArgument("unknown soil preset '" + std::string(key) + "'");
}

double nominal(const Interval& range) {
  return std::isfinite(range.max) ? range.center() : range.min;
}

SoilParameters make_truth(const SoilPreset& strength, const SoilPreset& compaction,
                          std::optional<double> delta) {
  if (!strength.gamma || !strength.cohesion_c || !strength.phi) {
    throw InvalidArgument("preset '" + strength.name + "' lacks density, cohesion or friction");
  }
  if (!compaction.kc || !compaction.kphi || !compaction.n) {
    throw InvalidArgument("preset '" + compaction.name + "' lacks pressure-sinkage values");
  }
  SoilParameters soil;
  soil.gamma = nominal(*strength.gamma);
  soil.cohesion_c = nominal(*strength.cohesion_c);
  soil.adhesion_ca = strength.adhesion_ca ? nominal(*strength.adhesion_ca) : 0.0;
  soil.phi = *strength.phi;
  soil.delta = delta.value_or(deg_to_rad(20.0));
  soil.kc = *compaction.kc;
  soil.kphi = *compaction.kphi;
  soil.n = *compaction.n;
  soil.validate();
  return soil;
}

SoilParameters default_truth() {
  return make_truth(find_preset("Well-graded sand"), find_preset("Dry Sand LLL"));
}

}  // namespace feecal
