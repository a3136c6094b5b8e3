#pragma once

// Analytic stand-in for a physics simulator: excavation scenarios, noiseless
// forward simulation from known soil parameters, sensor-noise injection and
// the bundled literature soil catalog.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "feecal/geometry.hpp"
#include "feecal/soil.hpp"

namespace feecal {

struct Scenario {
  SurfaceModel surface;
  std::variant<QuadraticBezier, std::vector<TrajectorySample>> path;
  LoaderParameters loader;
  double sample_rate = 60.0;  ///< Hz
  double duration = 4.67;     ///< s
  FeasibilityMargins margins;

  /// floor(duration * sample_rate) + 1 for a Bezier path, else the explicit count.
  std::size_t sample_count() const;

  /// Samples t_i = i / sample_rate along the path.
  std::vector<TrajectorySample> trajectory() const;

  void validate() const;

  /// Sloped pile at 30 deg, one pass reaching about 0.3 m depth. The record
  /// ends as the tip breaks out of the pile.
  static Scenario default_training();

  /// Different Bezier pass over the same pile, unseen during calibration.
  static Scenario held_out();
};

/// Noiseless observed forces from `truth`. Throws SampleErrors listing every
/// sample that could not be evaluated.
CycleDataset simulate_cycle(const Scenario& scenario, const SoilParameters& truth);

/// Zero-mean Gaussian noise with sigma = relative_sigma * peak |series|, drawn
/// per series from a seeded mt19937_64 (tangential first, then normal).
CycleDataset add_noise(const CycleDataset& dataset, double relative_sigma, std::uint64_t seed);

enum class PresetGroup { SoilType, SoilState, ContactMaterial, PressureSinkage };

std::string_view to_string(PresetGroup group);

/// One catalog row in base SI units. Unreported quantities are empty.
/// An open-ended range stores +inf as its max.
struct SoilPreset {
  std::string name;
  std::vector<std::string> aliases;  ///< USCS code, full description, ...
  PresetGroup group = PresetGroup::SoilType;
  std::optional<Interval> gamma;        ///< kg/m^3
  std::optional<Interval> cohesion_c;   ///< N/m^2
  std::optional<Interval> adhesion_ca;  ///< N/m^2
  std::optional<double> phi;            ///< rad
  std::optional<double> delta;          ///< rad
  std::optional<Interval> delta_over_phi;
  std::optional<double> kc;    ///< N/m^(n+1)
  std::optional<double> kphi;  ///< N/m^(n+2)
  std::optional<double> n;
  std::string source;

  bool matches(std::string_view key) const;
};

const std::vector<SoilPreset>& preset_catalog();

/// Case-insensitive match on name or alias. Throws InvalidArgument if absent.
const SoilPreset& find_preset(std::string_view key);

/// Midpoint of a range; the lower end when the range is open above.
double nominal(const Interval& range);

/// Strength quantities from a soil-type or soil-state row, compaction from a
/// pressure-sinkage row. delta defaults to the steel value of 20 deg; missing
/// adhesion is zero.
SoilParameters make_truth(const SoilPreset& strength, const SoilPreset& compaction,
                          std::optional<double> delta = std::nullopt);

/// Well-graded sand with Dry Sand LLL compaction, the default ground truth.
SoilParameters default_truth();

}  // namespace feecal
