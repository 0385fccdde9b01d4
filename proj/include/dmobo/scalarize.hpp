#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "indicators.hpp"
#include "types.hpp"

namespace dmobo {

/// Nonnegative weights summing to one.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("weight vector must be non-empty");
    double sum = 0.0;
    for (double v : w_) {
      if (!(v >= 0.0)) throw std::invalid_argument("weights must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to one");
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }

 private:
  std::vector<double> w_;
};

// Componentwise reference minimum used by Chebyshev and PBI.
using UtopiaPoint = std::vector<double>;

/// w_i = log(1 - u_i) / sum_j log(1 - u_j); uniform on the simplex when the
/// u_i are i.i.d. U(0,1).
inline WeightVector weights_from_uniforms(std::span<const double> u) {
  std::vector<double> w(u.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] = std::log1p(-u[i]);
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  // Division leaves the sum within a few ulps of one; pin it exactly.
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  w.back() = std::max(0.0, w.back() + (1.0 - total));
  return WeightVector(std::move(w));
}

inline WeightVector sample_simplex_weights(std::size_t num_objectives, Rng& rng) {
  if (num_objectives == 0) throw std::invalid_argument("need at least one objective");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> u(num_objectives);
  while (true) {
    bool degenerate = false;
    double sum = 0.0;
    for (double& v : u) {
      v = unif(rng);
      if (v >= 1.0) degenerate = true;
      sum += std::log1p(-v);
    }
    if (!degenerate && sum < 0.0) return weights_from_uniforms(u);
  }
}

inline double scalarize_linear(std::span<const double> y, const WeightVector& w) {
  require_same_length(y, w.values());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += w[i] * y[i];
  return s;
}

inline double scalarize_chebyshev(std::span<const double> y, const WeightVector& w,
                                  std::span<const double> z) {
  require_same_length(y, w.values());
  require_same_length(y, z);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s = std::max(s, w[i] * std::abs(y[i] - z[i]));
  return s;
}

/// Penalty-boundary intersection d1 + theta * d2 with v = z - y and
/// d1 = |v.w| / |w|. With `signed_d1`, uses the conventional
/// d1 = (y - z).w / |w| instead.
inline double scalarize_pbi(std::span<const double> y, const WeightVector& w,
                            std::span<const double> z, double theta = 5.0,
                            bool signed_d1 = false) {
  require_same_length(y, w.values());
  require_same_length(y, z);
  double norm = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) norm += w[i] * w[i];
  norm = std::sqrt(norm);
  if (norm == 0.0) throw std::invalid_argument("PBI requires a nonzero weight vector");
  std::vector<double> v(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) v[i] = signed_d1 ? y[i] - z[i] : z[i] - y[i];
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * w[i];
  const double d1 = signed_d1 ? dot / norm : std::abs(dot / norm);
  double d2 = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double r = v[i] - d1 * w[i] / norm;
    d2 += r * r;
  }
  return d1 + theta * std::sqrt(d2);
}

enum class ScalarizationKind { linear, chebyshev, pbi };

inline std::string to_string(ScalarizationKind k) {
  switch (k) {
    case ScalarizationKind::linear: return "L";
    case ScalarizationKind::chebyshev: return "CH";
    case ScalarizationKind::pbi: return "PBI";
  }
  return "?";
}

inline ScalarizationKind scalarization_kind_from_string(const std::string& s) {
  if (s == "L" || s == "linear") return ScalarizationKind::linear;
  if (s == "CH" || s == "chebyshev") return ScalarizationKind::chebyshev;
  if (s == "PBI" || s == "pbi") return ScalarizationKind::pbi;
  throw ConfigError("unknown scalarization '" + s + "'");
}

struct Scalarizer {
  ScalarizationKind kind = ScalarizationKind::linear;
  double theta = 5.0;
  bool signed_pbi = false;

  double operator()(std::span<const double> y, const WeightVector& w,
                    std::span<const double> z) const {
    switch (kind) {
      case ScalarizationKind::linear: return scalarize_linear(y, w);
      case ScalarizationKind::chebyshev: return scalarize_chebyshev(y, w, z);
      case ScalarizationKind::pbi: return scalarize_pbi(y, w, z, theta, signed_pbi);
    }
    return 0.0;
  }
};

}  // namespace dmobo
