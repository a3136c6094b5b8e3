#include "feecal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "feecal/errors.hpp"

namespace feecal::io {

namespace {

// The overloads below would otherwise hide the public ones.
using io::to_json;

constexpr const char* kCycleHeader[] = {"t_s", "x_m", "z_m", "rho_rad", "ft_obs_N", "fn_obs_N"};
constexpr std::size_t kCycleColumns = 6;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double parse_double(const std::string& cell, const std::string& where) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw InvalidArgument(where + ": '" + cell + "' is not a finite number");
  }
  return value;
}

// Column positions by header name.
struct Header {
  std::vector<std::string> names;

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    return std::nullopt;
  }

  std::size_t require(const std::string& name, const std::string& file) const {
    const auto i = find(name);
    if (!i) throw InvalidArgument(file + ": missing column '" + name + "'");
    return *i;
  }
};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json point(Point2 p) { return json::array({p.x, p.z}); }

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be rejected.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw InvalidArgument(where_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw InvalidArgument(path(key) + " is required");
    }
    used_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_number()) throw InvalidArgument(path(key) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw InvalidArgument(path(key) + " must be finite");
    return d;
  }

  /// `<stem>_rad`, or `<stem>_deg` converted to radians.
  double angle(const std::string& stem, std::optional<double> fallback = std::nullopt) {
    const std::string rad = stem + "_rad";
    const std::string deg = stem + "_deg";
    if (has(rad) && has(deg)) {
      throw InvalidArgument(where_ + ": give only one of '" + rad + "' and '" + deg + "'");
    }
    if (has(deg)) return deg_to_rad(number(deg));
    return number(rad, fallback);
  }

  std::optional<double> optional_angle(const std::string& stem) {
    if (!has(stem + "_rad") && !has(stem + "_deg")) return std::nullopt;
    return angle(stem);
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw InvalidArgument(path(key) + " is required");
    }
    used_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_string()) throw InvalidArgument(path(key) + " must be a string");
    return v.get<std::string>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw InvalidArgument(path(key) + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw InvalidArgument(path(key) + " must be an integer");
    return v.get<int>();
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    used_.insert(key);
    return &j_.at(key);
  }

  Point2 point(const std::string& key) {
    const json* v = child(key);
    if (!v) throw InvalidArgument(path(key) + " is required");
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
      throw InvalidArgument(path(key) + " must be an [x, z] pair of numbers");
    }
    return {(*v)[0].get<double>(), (*v)[1].get<double>()};
  }

  std::vector<double> numbers(const std::string& key) {
    const json* v = child(key);
    if (!v) throw InvalidArgument(path(key) + " is required");
    if (!v->is_array()) throw InvalidArgument(path(key) + " must be an array");
    std::vector<double> out;
    for (const json& e : *v) {
      if (!e.is_number()) throw InvalidArgument(path(key) + " must contain only numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) {
        throw InvalidArgument(where_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

// Unit-suffixed keys in SoilParameters::to_array order.
constexpr const char* kSoilKeys[] = {"gamma_kg_m3", "cohesion_c_pa", "adhesion_ca_pa", "phi_rad",
                                     "delta_rad",   "kc_n_m_n1",     "kphi_n_m_n2",    "n"};

// Same order; angles read through the _rad/_deg pair.
double read_soil_field(Fields& f, std::size_t i, std::optional<double> fallback) {
  const std::string key = kSoilKeys[i];
  if (key == "phi_rad") return f.angle("phi", fallback);
  if (key == "delta_rad") return f.angle("delta", fallback);
  return f.number(key, fallback);
}

LoaderParameters loader_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  LoaderParameters l;
  l.omega = f.number("omega_m", l.omega);
  l.b = f.number("b_m", l.b);
  l.wb = f.number("wb_kg", l.wb);
  f.finish();
  l.validate();
  return l;
}

FeasibilityMargins margins_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  FeasibilityMargins m;
  m.eps1 = f.angle("eps1", m.eps1);
  m.eps2 = f.angle("eps2", m.eps2);
  m.denominator = f.number("denominator", m.denominator);
  m.rho_min = f.angle("rho_min", m.rho_min);
  m.alpha_max = f.angle("alpha_max", m.alpha_max);
  f.finish();
  m.validate();
  return m;
}

json to_json(const FeasibilityMargins& m) {
  return {{"eps1_rad", m.eps1},
          {"eps2_rad", m.eps2},
          {"denominator", m.denominator},
          {"rho_min_rad", m.rho_min},
          {"alpha_max_rad", m.alpha_max}};
}

ParameterBounds bounds_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  ParameterBounds b = ParameterBounds::defaults();
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) {
    std::string key = kSoilKeys[i];
    const bool angular = key == "phi_rad" || key == "delta_rad";
    const std::string stem = angular ? key.substr(0, key.size() - 4) : key;
    std::optional<std::vector<double>> range;
    double factor = 1.0;
    if (angular && f.has(stem + "_deg")) {
      if (f.has(key)) throw InvalidArgument(where + ": give only one of '" + key + "' and '" + stem + "_deg'");
      range = f.numbers(stem + "_deg");
      factor = deg_to_rad(1.0);
      key = stem + "_deg";
    } else if (f.has(key)) {
      range = f.numbers(key);
    }
    if (!range) continue;
    if (range->size() != 2) throw InvalidArgument(f.path(key) + " must be [min, max]");
    b.ranges[i] = {(*range)[0] * factor, (*range)[1] * factor};
  }
  f.finish();
  b.validate();
  return b;
}

json to_json(const ParameterBounds& b) {
  json j = json::object();
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) {
    j[kSoilKeys[i]] = json::array({b.ranges[i].min, b.ranges[i].max});
  }
  return j;
}

optim::SolverOptions solver_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  optim::SolverOptions s;
  s.max_iterations = f.integer("max_iterations", s.max_iterations);
  s.gradient_tolerance = f.number("gradient_tolerance", s.gradient_tolerance);
  s.function_tolerance = f.number("function_tolerance", s.function_tolerance);
  s.finite_difference_step = f.number("finite_difference_step", s.finite_difference_step);
  s.n_starts = f.integer("n_starts", s.n_starts);
  s.memory = f.integer("memory", s.memory);
  s.seed = f.unsigned_integer("seed", s.seed);
  f.finish();
  s.validate();
  return s;
}

json to_json(const optim::SolverOptions& s) {
  return {{"max_iterations", s.max_iterations},
          {"gradient_tolerance", s.gradient_tolerance},
          {"function_tolerance", s.function_tolerance},
          {"finite_difference_step", s.finite_difference_step},
          {"n_starts", s.n_starts},
          {"memory", s.memory},
          {"seed", s.seed}};
}

json to_json(const StageResult& s) {
  json params = json::object();
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    const std::string& name = s.parameter_names[k];
    for (std::size_t i = 0; i < SoilParameters::kSize; ++i) {
      if (SoilParameters::names()[i] == name) params[kSoilKeys[i]] = s.values[k];
    }
  }
  return {{"name", s.name},
          {"parameters", params},
          {"objective", s.objective},
          {"iterations", s.iterations},
          {"function_evaluations", s.function_evaluations},
          {"starts_tried", s.starts_tried},
          {"converged", s.converged},
          {"stop_reason", s.stop_reason},
          {"wall_time_s", s.wall_time_s},
          {"target", s.target},
          {"target_rmse", to_json(s.target_rmse)},
          {"samples_used", s.samples_used},
          {"samples_excluded", s.samples_excluded}};
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw InvalidArgument("cannot format number");
  return std::string(buf, ptr);
}

std::string cycle_csv(const CycleDataset& dataset) {
  std::string out;
  for (std::size_t c = 0; c < kCycleColumns; ++c) {
    out += kCycleHeader[c];
    out += c + 1 < kCycleColumns ? ',' : '\n';
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const TrajectorySample& s = dataset.samples[i];
    for (double v : {s.t, s.tip.x, s.tip.z, s.rho, dataset.f_t_obs[i]}) {
      out += format_double(v);
      out += ',';
    }
    out += format_double(dataset.f_n_obs[i]);
    out += '\n';
  }
  return out;
}

CycleTable parse_cycle_csv(const std::string& text) {
  const std::vector<std::string> lines = lines_of(text);
  if (lines.empty()) throw InvalidArgument("cycle csv: empty file");
  const Header header{split(lines.front(), ',')};
  std::size_t col[kCycleColumns];
  for (std::size_t c = 0; c < kCycleColumns; ++c) col[c] = header.require(kCycleHeader[c], "cycle csv");
  for (std::size_t c = 0; c < kCycleColumns; ++c) {
    if (col[c] != c) {
      throw InvalidArgument(std::string("cycle csv: column '") + kCycleHeader[c] +
                            "' is out of order");
    }
  }
  CycleTable table;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split(lines[r], ',');
    const std::string where = "cycle csv line " + std::to_string(r + 1);
    if (cells.size() != header.names.size()) {
      throw InvalidArgument(where + ": expected " + std::to_string(header.names.size()) +
                            " fields, found " + std::to_string(cells.size()));
    }
    TrajectorySample s;
    s.t = parse_double(cells[0], where);
    s.tip.x = parse_double(cells[1], where);
    s.tip.z = parse_double(cells[2], where);
    s.rho = parse_double(cells[3], where);
    table.samples.push_back(s);
    table.f_t.push_back(parse_double(cells[4], where));
    table.f_n.push_back(parse_double(cells[5], where));
  }
  if (table.samples.empty()) throw InvalidArgument("cycle csv: no data rows");
  return table;
}

CycleTable read_cycle_csv(const std::filesystem::path& path) {
  try {
    return parse_cycle_csv(read_text(path));
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return csv.parent_path() / (csv.stem().string() + ".scenario.json");
}

std::string predicted_csv(const NextCyclePrediction& p) {
  std::string out = "t_s,x_m,z_m,rho_rad,depth_m,beta_rad,ft_pred_N,fn_pred_N,fr_pred_N,valid\n";
  for (std::size_t i = 0; i < p.samples.size(); ++i) {
    const TrajectorySample& s = p.samples[i];
    const SamplePrediction& f = p.prediction.samples[i];
    for (double v : {s.t, s.tip.x, s.tip.z, s.rho, p.geometry[i].depth, f.beta, f.force.f_t,
                     f.force.f_n, resultant(f.force.f_t, f.force.f_n)}) {
      out += format_double(v);
      out += ',';
    }
    out += f.valid ? "1\n" : "0\n";
  }
  return out;
}

ForceTable read_force_table(const std::filesystem::path& path) {
  const std::vector<std::string> lines = lines_of(read_text(path));
  const std::string file = path.string();
  if (lines.empty()) throw InvalidArgument(file + ": empty file");
  const Header header{split(lines.front(), ',')};
  const bool predicted = header.find("ft_pred_N").has_value();
  const std::size_t ct = header.require("t_s", file);
  const std::size_t cf = header.require(predicted ? "ft_pred_N" : "ft_obs_N", file);
  const std::size_t cn = header.require(predicted ? "fn_pred_N" : "fn_obs_N", file);
  ForceTable table;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const std::vector<std::string> cells = split(lines[r], ',');
    const std::string where = file + " line " + std::to_string(r + 1);
    if (cells.size() != header.names.size()) throw InvalidArgument(where + ": wrong field count");
    table.t.push_back(parse_double(cells[ct], where));
    table.f_t.push_back(parse_double(cells[cf], where));
    table.f_n.push_back(parse_double(cells[cn], where));
  }
  if (table.t.empty()) throw InvalidArgument(file + ": no data rows");
  return table;
}

json to_json(const SoilParameters& soil) {
  const auto v = soil.to_array();
  json j = json::object();
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) j[kSoilKeys[i]] = v[i];
  return j;
}

SoilParameters soil_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  std::array<double, SoilParameters::kSize> v{};
  for (std::size_t i = 0; i < SoilParameters::kSize; ++i) v[i] = read_soil_field(f, i, std::nullopt);
  f.finish();
  const SoilParameters soil = SoilParameters::from_array(v);
  soil.validate();
  return soil;
}

json to_json(const Scenario& s) {
  json surface;
  if (s.surface.is_sloped()) {
    surface = {{"type", "sloped"},
               {"origin_m", point(s.surface.as_sloped().origin)},
               {"alpha_rad", s.surface.alpha()}};
  } else {
    json vertices = json::array();
    for (Point2 v : s.surface.vertices()) vertices.push_back(point(v));
    surface = {{"type", "polyline"}, {"vertices_m", vertices}, {"alpha_rad", s.surface.alpha()}};
  }
  json path;
  if (const auto* b = std::get_if<QuadraticBezier>(&s.path)) {
    path = {{"type", "bezier"}, {"p0_m", point(b->p0)}, {"p1_m", point(b->p1)}, {"p2_m", point(b->p2)}};
  } else {
    json t = json::array(), x = json::array(), z = json::array(), rho = json::array();
    for (const TrajectorySample& p : std::get<std::vector<TrajectorySample>>(s.path)) {
      t.push_back(p.t);
      x.push_back(p.tip.x);
      z.push_back(p.tip.z);
      rho.push_back(p.rho);
    }
    path = {{"type", "samples"}, {"t_s", t}, {"x_m", x}, {"z_m", z}, {"rho_rad", rho}};
  }
  return {{"surface", surface},
          {"path", path},
          {"loader", {{"omega_m", s.loader.omega}, {"b_m", s.loader.b}, {"wb_kg", s.loader.wb}}},
          {"sample_rate_hz", s.sample_rate},
          {"duration_s", s.duration},
          {"margins", to_json(s.margins)}};
}

Scenario scenario_from_json(const json& j, const std::string& where) {
  Fields f(j, where);
  Scenario s = Scenario::default_training();
  if (const json* m = f.child("margins")) s.margins = margins_from_json(*m, where + ".margins");
  if (const json* l = f.child("loader")) s.loader = loader_from_json(*l, where + ".loader");
  s.sample_rate = f.number("sample_rate_hz", s.sample_rate);
  s.duration = f.number("duration_s", s.duration);

  if (const json* sj = f.child("surface")) {
    Fields sf(*sj, where + ".surface");
    const std::string type = sf.string("type");
    const double alpha = sf.angle("alpha");
    if (type == "sloped") {
      s.surface = SurfaceModel::sloped(sf.point("origin_m"), alpha, s.margins);
    } else if (type == "polyline") {
      const json* vj = sf.child("vertices_m");
      if (!vj || !vj->is_array()) throw InvalidArgument(sf.path("vertices_m") + " must be an array");
      std::vector<Point2> vertices;
      for (const json& v : *vj) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
          throw InvalidArgument(sf.path("vertices_m") + " entries must be [x, z] pairs");
        }
        vertices.push_back({v[0].get<double>(), v[1].get<double>()});
      }
      s.surface = SurfaceModel::polyline(std::move(vertices), alpha, s.margins);
    } else {
      throw InvalidArgument(sf.path("type") + " must be 'sloped' or 'polyline'");
    }
    sf.finish();
  }

  if (const json* pj = f.child("path")) {
    Fields pf(*pj, where + ".path");
    const std::string type = pf.string("type");
    if (type == "bezier") {
      s.path = QuadraticBezier{pf.point("p0_m"), pf.point("p1_m"), pf.point("p2_m")};
    } else if (type == "samples") {
      const auto t = pf.numbers("t_s");
      const auto x = pf.numbers("x_m");
      const auto z = pf.numbers("z_m");
      const auto rho = pf.numbers("rho_rad");
      if (x.size() != t.size() || z.size() != t.size() || rho.size() != t.size()) {
        throw InvalidArgument(where + ".path: t_s, x_m, z_m and rho_rad differ in length");
      }
      std::vector<TrajectorySample> samples;
      for (std::size_t i = 0; i < t.size(); ++i) samples.push_back({t[i], {x[i], z[i]}, rho[i]});
      s.path = std::move(samples);
    } else {
      throw InvalidArgument(pf.path("type") + " must be 'bezier' or 'samples'");
    }
    pf.finish();
  }
  f.finish();
  s.validate();
  return s;
}

json to_json(const ErrorMetric& m) {
  return {{"absolute_n", m.absolute}, {"percent", number_or_null(m.percent)}, {"peak_n", m.peak}};
}

json to_json(const CalibrationReport& r, const CycleDataset& dataset) {
  json stages = json::array();
  for (const StageResult& s : r.stages) stages.push_back(to_json(s));
  json t = json::array();
  for (const TrajectorySample& s : dataset.samples) t.push_back(s.t);
  return {{"schema_version", kSchemaVersion},
          {"method", r.method},
          {"theta_star", to_json(r.theta_star)},
          {"stages", stages},
          {"rmse", {{"ft", to_json(r.rmse_ft)}, {"fn", to_json(r.rmse_fn)}, {"fr", to_json(r.rmse_fr)}}},
          {"percent_rule", "peak_abs_observed"},
          {"function_evaluations", r.function_evaluations},
          {"wall_time_s", r.wall_time_s},
          {"samples", {{"total", r.samples_total},
                       {"out_of_soil", r.samples_out_of_soil},
                       {"invalid", r.samples_invalid}}},
          {"fitted", {{"t_s", t}, {"ft_n", r.fitted_ft}, {"fn_n", r.fitted_fn}}}};
}

SoilParameters report_theta(const json& report) {
  if (!report.is_object() || !report.contains("theta_star")) {
    throw InvalidArgument("report: missing 'theta_star'");
  }
  return soil_from_json(report.at("theta_star"), "report.theta_star");
}

json metrics_json(const ForceTable& predicted, const ForceTable& observed) {
  if (predicted.t.size() != observed.t.size()) {
    throw InvalidArgument("predicted and observed differ in length: " +
                          std::to_string(predicted.t.size()) + " vs " +
                          std::to_string(observed.t.size()));
  }
  std::vector<double> pr, orr;
  for (std::size_t i = 0; i < predicted.t.size(); ++i) {
    pr.push_back(resultant(predicted.f_t[i], predicted.f_n[i]));
    orr.push_back(resultant(observed.f_t[i], observed.f_n[i]));
  }
  return {{"schema_version", kSchemaVersion},
          {"samples", predicted.t.size()},
          {"percent_rule", "peak_abs_observed"},
          {"rmse",
           {{"ft", to_json(rmse(observed.f_t, predicted.f_t))},
            {"fn", to_json(rmse(observed.f_n, predicted.f_n))},
            {"fr", to_json(rmse(orr, pr))}}}};
}

json to_json(const SoilPreset& p) {
  const auto range = [](const std::optional<Interval>& r) -> json {
    if (!r) return nullptr;
    return json::array({r->min, number_or_null(r->max)});
  };
  const auto value = [](const std::optional<double>& v) -> json {
    return v ? json(*v) : json(nullptr);
  };
  return {{"name", p.name},
          {"aliases", p.aliases},
          {"group", std::string(to_string(p.group))},
          {"gamma_kg_m3", range(p.gamma)},
          {"cohesion_c_pa", range(p.cohesion_c)},
          {"adhesion_ca_pa", range(p.adhesion_ca)},
          {"phi_rad", value(p.phi)},
          {"delta_rad", value(p.delta)},
          {"delta_over_phi", range(p.delta_over_phi)},
          {"kc_n_m_n1", value(p.kc)},
          {"kphi_n_m_n2", value(p.kphi)},
          {"n", value(p.n)},
          {"source", p.source}};
}

json preset_catalog_json() {
  json rows = json::array();
  for (const SoilPreset& p : preset_catalog()) rows.push_back(to_json(p));
  return {{"schema_version", kSchemaVersion},
          {"units", "SI: kg/m^3, N/m^2, rad, N/m^(n+1), N/m^(n+2)"},
          {"presets", rows}};
}

SoilParameters TruthSpec::resolve() const {
  if (parameters) return *parameters;
  return make_truth(find_preset(strength), find_preset(compaction), delta);
}

RunConfig config_from_json(const json& j) {
  Fields f(j, "config");
  const int version = f.integer("schema_version", -1);
  if (version != kSchemaVersion) {
    throw InvalidArgument("config.schema_version must be " + std::to_string(kSchemaVersion));
  }
  RunConfig c;
  if (const json* s = f.child("scenario")) c.scenario = scenario_from_json(*s, "config.scenario");

  if (const json* t = f.child("truth")) {
    Fields tf(*t, "config.truth");
    if (const json* p = tf.child("parameters")) {
      c.truth.parameters = soil_from_json(*p, "config.truth.parameters");
    }
    c.truth.strength = tf.string("strength_preset", c.truth.strength);
    c.truth.compaction = tf.string("compaction_preset", c.truth.compaction);
    c.truth.delta = tf.optional_angle("delta");
    tf.finish();
  }

  c.noise = f.number("noise", c.noise);
  if (c.noise < 0.0) throw InvalidArgument("config.noise must be >= 0");
  c.seed = f.unsigned_integer("seed", c.seed);
  c.output_dir = f.string("output_dir", c.output_dir);

  if (const json* cal = f.child("calibration")) {
    Fields cf(*cal, "config.calibration");
    c.method = cf.string("method", c.method);
    c.calibration.lambda_weight = cf.number("lambda", c.calibration.lambda_weight);
    c.calibration.gaussian_sigma = cf.number("gaussian_sigma_samples", c.calibration.gaussian_sigma);
    if (const json* s = cf.child("solver")) {
      c.calibration.solver = solver_from_json(*s, "config.calibration.solver");
    }
    if (const json* b = cf.child("bounds")) {
      c.calibration.bounds = bounds_from_json(*b, "config.calibration.bounds");
    }
    cf.finish();
  }
  c.calibration.margins = c.scenario.margins;
  if (c.method != "single" && c.method != "multi") {
    throw InvalidArgument("config.calibration.method must be 'single' or 'multi'");
  }
  f.finish();
  c.calibration.validate();
  // Resolving now surfaces unknown preset names as config errors.
  c.truth.resolve();
  return c;
}

RunConfig read_config(const std::filesystem::path& path) {
  return config_from_json(read_json(path));
}

json to_json(const RunConfig& c) {
  json truth = json::object();
  if (c.truth.parameters) {
    truth["parameters"] = to_json(*c.truth.parameters);
  } else {
    truth["strength_preset"] = c.truth.strength;
    truth["compaction_preset"] = c.truth.compaction;
    if (c.truth.delta) truth["delta_rad"] = *c.truth.delta;
  }
  return {{"schema_version", kSchemaVersion},
          {"scenario", to_json(c.scenario)},
          {"truth", truth},
          {"noise", c.noise},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"calibration",
           {{"method", c.method},
            {"lambda", c.calibration.lambda_weight},
            {"gaussian_sigma_samples", c.calibration.gaussian_sigma},
            {"solver", to_json(c.calibration.solver)},
            {"bounds", to_json(c.calibration.bounds)}}}};
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace feecal::io
