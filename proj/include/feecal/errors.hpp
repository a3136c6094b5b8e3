#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace feecal {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or configuration value violates its documented invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A trigonometric denominator fell inside its singularity margin.
class SingularGeometry : public Error {
 public:
  SingularGeometry(std::string term, double magnitude, double margin)
      : Error("singular geometry: |" + term + "| = " + std::to_string(magnitude) +
              " is not above margin " + std::to_string(margin)),
        term_(std::move(term)),
        magnitude_(magnitude),
        margin_(margin) {}

  const std::string& term() const noexcept { return term_; }
  double magnitude() const noexcept { return magnitude_; }
  double margin() const noexcept { return margin_; }

 private:
  std::string term_;
  double magnitude_;
  double margin_;
};

/// The continuity constraints leave no admissible failure-surface angle.
class EmptyFeasibleSet : public Error {
 public:
  using Error::Error;
};

/// Blade or wedge angles fall below their minimum margins.
class InfeasibleGeometry : public Error {
 public:
  using Error::Error;
};

/// The swept-load polygon is self-intersecting.
class DegenerateRegion : public Error {
 public:
  using Error::Error;
};

/// The trajectory doubles back in x inside the excavated span.
class NonMonotonePath : public Error {
 public:
  using Error::Error;
};

/// The objective returned NaN or Inf where it must be finite.
class NonFiniteObjective : public Error {
 public:
  using Error::Error;
};

class EmptySeries : public Error {
 public:
  using Error::Error;
};

/// Every sample of a cycle is out of soil, so depth-driven terms are unidentifiable.
class DegenerateDepths : public Error {
 public:
  using Error::Error;
};

/// Every start of a solve failed.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// One or more samples of a cycle could not be evaluated.
class SampleErrors : public Error {
 public:
  struct Entry {
    std::size_t index;
    std::string message;
  };

  explicit SampleErrors(std::vector<Entry> entries)
      : Error(describe(entries)), entries_(std::move(entries)) {}

  const std::vector<Entry>& entries() const noexcept { return entries_; }

 private:
  static std::string describe(const std::vector<Entry>& entries) {
    std::string text = std::to_string(entries.size()) + " sample(s) failed";
    if (!entries.empty()) {
      text += "; first at index " + std::to_string(entries.front().index) + ": " +
              entries.front().message;
    }
    return text;
  }

  std::vector<Entry> entries_;
};

}  // namespace feecal
