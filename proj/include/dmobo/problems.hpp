#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "indicators.hpp"
#include "space.hpp"
#include "types.hpp"

namespace dmobo {

struct ProblemInstance {
  std::string name;
  std::shared_ptr<const SearchSpace> space;
  std::size_t num_objectives = 0;
  std::function<Outcome(const Configuration&)> evaluate;
  // Uniform-ish samples of the analytic Pareto front; empty when unknown.
  std::function<FrontSet(std::size_t n, Rng& rng)> true_pf_sampler;
  std::vector<std::string> properties;
};

// ---------------------------------------------------------------------------
// DTLZ 1-7, minimization, x in [0,1]^n, M objectives, k = n - M + 1 tail variables.

namespace dtlz_detail {

using std::numbers::pi;

inline double g_rastrigin(std::span<const double> tail) {
  double s = 0.0;
  for (double x : tail) s += (x - 0.5) * (x - 0.5) - std::cos(20.0 * pi * (x - 0.5));
  return 100.0 * (static_cast<double>(tail.size()) + s);
}

inline double g_sphere(std::span<const double> tail) {
  double s = 0.0;
  for (double x : tail) s += (x - 0.5) * (x - 0.5);
  return s;
}

// f_i = (1 + g) * prod_{j < M-1-i} cos(theta_j) * [sin(theta_{M-1-i}) if i > 0]
inline ObjectiveVector spherical(std::span<const double> theta, double g, std::size_t m) {
  ObjectiveVector f(m, 1.0 + g);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j + 1 + i < m; ++j) f[i] *= std::cos(theta[j]);
    if (i > 0) f[i] *= std::sin(theta[m - 1 - i]);
  }
  return f;
}

inline ObjectiveVector evaluate(int k, std::span<const double> x, std::size_t m) {
  const std::size_t n = x.size();
  const auto head = x.subspan(0, m - 1);
  const auto tail = x.subspan(m - 1, n - m + 1);
  std::vector<double> theta(m - 1);
  switch (k) {
    case 1: {
      const double g = g_rastrigin(tail);
      ObjectiveVector f(m, 0.5 * (1.0 + g));
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j + 1 + i < m; ++j) f[i] *= head[j];
        if (i > 0) f[i] *= 1.0 - head[m - 1 - i];
      }
      return f;
    }
    case 2:
    case 3: {
      const double g = k == 2 ? g_sphere(tail) : g_rastrigin(tail);
      for (std::size_t j = 0; j + 1 < m; ++j) theta[j] = head[j] * pi / 2.0;
      return spherical(theta, g, m);
    }
    case 4: {
      const double g = g_sphere(tail);
      for (std::size_t j = 0; j + 1 < m; ++j) theta[j] = std::pow(head[j], 100.0) * pi / 2.0;
      return spherical(theta, g, m);
    }
    case 5:
    case 6: {
      double g = 0.0;
      if (k == 5) {
        g = g_sphere(tail);
      } else {
        for (double v : tail) g += std::pow(v, 0.1);
      }
      theta[0] = head[0] * pi / 2.0;
      for (std::size_t j = 1; j + 1 < m; ++j)
        theta[j] = pi / (4.0 * (1.0 + g)) * (1.0 + 2.0 * g * head[j]);
      return spherical(theta, g, m);
    }
    case 7: {
      double s = 0.0;
      for (double v : tail) s += v;
      const double g = 1.0 + 9.0 / static_cast<double>(tail.size()) * s;
      ObjectiveVector f(m);
      double h = static_cast<double>(m);
      for (std::size_t i = 0; i + 1 < m; ++i) {
        f[i] = head[i];
        h -= f[i] / (1.0 + g) * (1.0 + std::sin(3.0 * pi * f[i]));
      }
      f[m - 1] = (1.0 + g) * h;
      return f;
    }
    default:
      throw ConfigError("DTLZ index must be in 1..7");
  }
}

// Non-dominated x-intervals of each leading DTLZ7 variable: phi(x) = x(1 + sin 3 pi x)
// is a strict running maximum there. Endpoints are rounded inwards.
inline constexpr std::array<std::array<double, 2>, 2> kDtlz7Regions{{
    {0.0, 0.25141183},
    {0.63162654, 0.85940085},
}};

inline bool in_dtlz7_region(double v) {
  for (const auto& r : kDtlz7Regions)
    if (v >= r[0] && v <= r[1]) return true;
  return false;
}

}  // namespace dtlz_detail

inline std::vector<double> as_reals(const Configuration& c) {
  std::vector<double> x;
  x.reserve(c.values.size());
  for (const auto& v : c.values) {
    auto* d = std::get_if<double>(&v);
    if (!d) throw StructuralError("expected a continuous configuration");
    x.push_back(*d);
  }
  return x;
}

inline ProblemInstance dtlz(int k, std::size_t num_inputs = 8, std::size_t num_objectives = 3) {
  if (k < 1 || k > 7) throw ConfigError("DTLZ index must be in 1..7, got " + std::to_string(k));
  if (num_objectives < 2) throw ConfigError("DTLZ needs at least two objectives");
  if (num_inputs < num_objectives)
    throw ConfigError("DTLZ requires num_inputs >= num_objectives");

  std::vector<ParameterSpec> params;
  for (std::size_t i = 0; i < num_inputs; ++i)
    params.push_back(ParameterSpec::continuous("x" + std::to_string(i), 0.0, 1.0));

  ProblemInstance p;
  p.name = "dtlz" + std::to_string(k);
  p.space = std::make_shared<const SearchSpace>(std::move(params));
  p.num_objectives = num_objectives;
  const std::size_t m = num_objectives, n = num_inputs;
  p.evaluate = [k, m, n](const Configuration& c) -> Outcome {
    const auto x = as_reals(c);
    if (x.size() != n) throw StructuralError("DTLZ input has wrong dimension");
    return dtlz_detail::evaluate(k, x, m);
  };

  static const std::array<std::vector<std::string>, 7> kProperties{{
      {"P1"}, {"P2"}, {"P1", "P2"}, {"P2", "P4"}, {"P3"}, {"P3"}, {"P2", "P5"}}};
  p.properties = kProperties[static_cast<std::size_t>(k - 1)];

  p.true_pf_sampler = [k, m, n](std::size_t count, Rng& rng) {
    FrontSet out;
    out.reserve(count);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (out.size() < count) {
      switch (k) {
        case 1: {  // simplex sum f = 0.5
          ObjectiveVector f(m);
          double s = 0.0;
          for (double& v : f) s += (v = expo(rng));
          for (double& v : f) v = 0.5 * v / s;
          out.push_back(std::move(f));
          break;
        }
        case 2:
        case 3:
        case 4: {  // positive octant of the unit sphere
          ObjectiveVector f(m);
          double s = 0.0;
          for (double& v : f) {
            v = std::abs(normal(rng));
            s += v * v;
          }
          s = std::sqrt(s);
          if (s == 0.0) continue;
          for (double& v : f) v /= s;
          out.push_back(std::move(f));
          break;
        }
        case 5:
        case 6: {  // degenerate curve: g = 0, first angle free
          std::vector<double> x(n, k == 5 ? 0.5 : 0.0);
          x[0] = unif(rng);
          out.push_back(dtlz_detail::evaluate(k, x, m));
          break;
        }
        case 7: {  // rejection onto the disjoint non-dominated regions
          std::vector<double> x(n, 0.0);
          bool ok = true;
          for (std::size_t i = 0; i + 1 < m; ++i) {
            x[i] = unif(rng);
            ok = ok && dtlz_detail::in_dtlz7_region(x[i]);
          }
          if (!ok) continue;
          out.push_back(dtlz_detail::evaluate(k, x, m));
          break;
        }
      }
    }
    return out;
  };
  return p;
}

// ---------------------------------------------------------------------------
// Synthetic HPO-like problem: y1 is a bounded validation-loss surface, y2 a
// heavy-tailed training cost; a fixed 2% subset of configurations fails.

namespace synthetic_detail {

// FNV-1a over the configuration's value bytes and the problem seed.
inline std::uint64_t config_hash(const Configuration& c, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&seed, sizeof seed);
  for (const auto& v : c.values) {
    if (auto* d = std::get_if<double>(&v)) {
      const auto bits = std::bit_cast<std::uint64_t>(*d);
      mix(&bits, sizeof bits);
    } else if (auto* i = std::get_if<std::int64_t>(&v)) {
      mix(i, sizeof *i);
    } else {
      const auto& s = std::get<std::string>(v);
      mix(s.data(), s.size());
    }
    const unsigned char sep = 0xff;
    mix(&sep, 1);
  }
  return h;
}

}  // namespace synthetic_detail

inline constexpr double kSyntheticFailureRate = 0.02;

inline ProblemInstance synthetic_hpo(std::uint64_t seed = 0) {
  ProblemInstance p;
  p.name = "synthetic_hpo";
  p.space = std::make_shared<const SearchSpace>(std::vector<ParameterSpec>{
      ParameterSpec::continuous("learning_rate", 1e-5, 1e-1, Prior::log_uniform),
      ParameterSpec::continuous("dropout", 0.0, 0.5),
      ParameterSpec::integer("units", 16, 1024, Prior::log_uniform),
      ParameterSpec::categorical("optimizer", {"adam", "sgd", "rmsprop"}),
  });
  p.num_objectives = 2;
  auto space = p.space;
  p.evaluate = [seed, space](const Configuration& c) -> Outcome {
    if (!space->contains(c)) throw StructuralError("configuration outside synthetic_hpo space");
    Rng noise(synthetic_detail::config_hash(c, seed));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (unif(noise) < kSyntheticFailureRate) return FailureMarker{"training diverged"};

    const double u = std::log10(std::get<double>(c.values[0]));  // [-5, -1]
    const double dropout = std::get<double>(c.values[1]);
    const double units = static_cast<double>(std::get<std::int64_t>(c.values[2]));
    const std::string& opt = std::get<std::string>(c.values[3]);
    const double lr_opt = opt == "sgd" ? -2.0 : (opt == "rmsprop" ? -3.3 : -3.0);
    const double opt_gap = opt == "sgd" ? 0.04 : (opt == "rmsprop" ? 0.02 : 0.0);
    const double cost_factor = opt == "sgd" ? 0.8 : (opt == "rmsprop" ? 1.1 : 1.0);

    const double a = (u - lr_opt) / 1.2;
    const double b = (dropout - 0.15) / 0.2;
    const double cap = (std::log2(units) - 8.0) / 2.5;
    const double bowl = 1.0 - std::exp(-0.5 * (a * a + b * b + cap * cap));
    const double ripple = std::pow(std::sin(2.5 * u + 3.0 * dropout), 2);
    const double y1 = std::clamp(0.05 + 0.75 * bowl + 0.1 * ripple + opt_gap, 0.0, 1.0);

    std::lognormal_distribution<double> tail(0.0, 1.5);
    const double base = units / 16.0 * (1.0 + 2.0 * dropout) * cost_factor * (1.0 + 0.125 * (u + 5.0));
    const double y2 = base * tail(noise);
    return ObjectiveVector{y1, y2};
  };
  p.properties = {"outliers", "failures", "mixed-space"};
  return p;
}

/// Problem lookup by name: "dtlz1".."dtlz7" or "synthetic_hpo".
inline ProblemInstance make_problem(const std::string& name, std::size_t num_inputs = 8,
                                    std::size_t num_objectives = 3, std::uint64_t seed = 0) {
  if (name.size() == 5 && name.rfind("dtlz", 0) == 0 && name[4] >= '1' && name[4] <= '7')
    return dtlz(name[4] - '0', num_inputs, num_objectives);
  if (name == "synthetic_hpo") return synthetic_hpo(seed);
  throw ConfigError("unknown problem '" + name + "'");
}

}  // namespace dmobo
