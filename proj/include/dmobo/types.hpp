#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace dmobo {

using Rng = std::mt19937_64;

// Objectives in minimization orientation.
using ObjectiveVector = std::vector<double>;
using FrontSet = std::vector<ObjectiveVector>;

// Marks an evaluation that produced no usable objectives.
struct FailureMarker {
  std::string reason;
  friend bool operator==(const FailureMarker&, const FailureMarker&) = default;
};

using Outcome = std::variant<ObjectiveVector, FailureMarker>;

inline bool is_failure(const Outcome& o) { return std::holds_alternative<FailureMarker>(o); }

inline const ObjectiveVector* objectives_of(const Outcome& o) {
  return std::get_if<ObjectiveVector>(&o);
}

// Converts non-finite objective vectors into failures.
inline Outcome sanitize(Outcome o) {
  if (auto* y = std::get_if<ObjectiveVector>(&o)) {
    for (double v : *y) {
      if (!std::isfinite(v)) return FailureMarker{"non-finite objective"};
    }
  }
  return o;
}

}  // namespace dmobo
