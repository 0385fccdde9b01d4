#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace dmobo {

inline void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw StructuralError("objective vectors differ in length: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
}

/// True iff a is no worse than b everywhere and strictly better somewhere.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
  require_same_length(a, b);
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

// Indices (in input order) of the points no other point dominates.
inline std::vector<std::size_t> pareto_indices(const std::vector<ObjectiveVector>& points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Lexicographic order: a point can only be dominated by one sorted before it.
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool dominated = false;
    for (std::size_t k : kept) {
      if (dominates(points[k], points[idx])) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

/// Non-dominated subset; duplicates of a non-dominated point are all kept.
inline FrontSet extract_pareto_front(const std::vector<ObjectiveVector>& points) {
  FrontSet front;
  for (std::size_t i : pareto_indices(points)) front.push_back(points[i]);
  return front;
}

// ---------------------------------------------------------------------------
// Hypervolume

inline constexpr std::size_t kMaxExactHypervolumeDim = 5;

namespace detail {

using PointRefs = std::vector<const double*>;

inline double hv_sweep_2d(PointRefs pts, const double* ref) {
  std::sort(pts.begin(), pts.end(), [](const double* a, const double* b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  double volume = 0.0;
  double best_y = ref[1];
  for (const double* p : pts) {
    if (p[1] < best_y) {
      volume += (ref[0] - p[0]) * (best_y - p[1]);
      best_y = p[1];
    }
  }
  return volume;
}

inline PointRefs nondominated_prefix(const PointRefs& pts, std::size_t dim) {
  PointRefs kept;
  for (const double* p : pts) {
    bool dominated = false;
    for (const double* q : kept) {
      bool weak = true;
      for (std::size_t i = 0; i < dim; ++i) {
        if (q[i] > p[i]) {
          weak = false;
          break;
        }
      }
      if (weak) {
        dominated = true;
        break;
      }
    }
    if (dominated) continue;
    std::erase_if(kept, [&](const double* q) {
      for (std::size_t i = 0; i < dim; ++i)
        if (p[i] > q[i]) return false;
      return true;
    });
    kept.push_back(p);
  }
  return kept;
}

// Slices along the last coordinate; base case is either the 1-D interval or
// the 2-D sweep.
inline double hv_slice(PointRefs pts, const double* ref, std::size_t dim, bool sweep_base) {
  if (pts.empty()) return 0.0;
  if (dim == 1) {
    double lo = ref[0];
    for (const double* p : pts) lo = std::min(lo, p[0]);
    return ref[0] - lo;
  }
  if (dim == 2 && sweep_base) return hv_sweep_2d(std::move(pts), ref);
  const std::size_t last = dim - 1;
  std::sort(pts.begin(), pts.end(), [last](const double* a, const double* b) { return a[last] < b[last]; });
  double volume = 0.0;
  PointRefs active;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    active.push_back(pts[i]);
    const double upper = i + 1 < pts.size() ? pts[i + 1][last] : ref[last];
    const double thickness = upper - pts[i][last];
    if (thickness <= 0.0) continue;
    active = nondominated_prefix(active, last);
    volume += thickness * hv_slice(active, ref, last, sweep_base);
  }
  return volume;
}

inline PointRefs admissible(const FrontSet& front, std::span<const double> ref,
                            std::size_t* clipped) {
  PointRefs pts;
  std::size_t dropped = 0;
  for (const auto& p : front) {
    require_same_length(p, ref);
    bool inside = true;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!(p[i] <= ref[i])) {
        inside = false;
        break;
      }
    }
    if (inside) {
      pts.push_back(p.data());
    } else {
      ++dropped;
    }
  }
  if (clipped) *clipped = dropped;
  return pts;
}

}  // namespace detail

struct HypervolumeResult {
  double volume = 0.0;
  std::size_t clipped = 0;  // points excluded for exceeding the reference
};

/// Exact dominated volume of the union of boxes [a, ref]. Points that are not
/// componentwise <= ref are excluded and counted in `clipped`.
inline HypervolumeResult hypervolume_report(const FrontSet& front, std::span<const double> ref) {
  if (ref.size() > kMaxExactHypervolumeDim)
    throw UnsupportedDimensionError("exact hypervolume supports at most " +
                                    std::to_string(kMaxExactHypervolumeDim) + " objectives");
  HypervolumeResult r;
  auto pts = detail::admissible(front, ref, &r.clipped);
  if (pts.empty() || ref.empty()) return r;
  if (ref.size() == 2) {
    r.volume = detail::hv_sweep_2d(std::move(pts), ref.data());
  } else {
    r.volume = detail::hv_slice(std::move(pts), ref.data(), ref.size(), true);
  }
  return r;
}

inline double hypervolume(const FrontSet& front, std::span<const double> ref) {
  return hypervolume_report(front, ref).volume;
}

inline double hypervolume_2d_sweep(const FrontSet& front, std::span<const double> ref) {
  if (ref.size() != 2) throw UnsupportedDimensionError("sweep requires two objectives");
  return detail::hv_sweep_2d(detail::admissible(front, ref, nullptr), ref.data());
}

// Pure dimension slicing down to one dimension (no sweep shortcut).
inline double hypervolume_slicing(const FrontSet& front, std::span<const double> ref) {
  if (ref.size() > kMaxExactHypervolumeDim)
    throw UnsupportedDimensionError("exact hypervolume supports at most " +
                                    std::to_string(kMaxExactHypervolumeDim) + " objectives");
  return detail::hv_slice(detail::admissible(front, ref, nullptr), ref.data(), ref.size(), false);
}

// ---------------------------------------------------------------------------
// Distance-based indicators

inline double dplus(std::span<const double> yhat, std::span<const double> y) {
  require_same_length(yhat, y);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double d = std::max(yhat[i] - y[i], 0.0);
    s += d * d;
  }
  return std::sqrt(s);
}

/// Mean over front points of the smallest d+ to any target.
inline double gd_plus(const FrontSet& front, const FrontSet& targets) {
  if (front.empty() || targets.empty())
    throw UndefinedIndicatorError("GD+ requires non-empty front and target sets");
  double total = 0.0;
  for (const auto& yhat : front) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : targets) best = std::min(best, dplus(yhat, y));
    total += best;
  }
  return total / static_cast<double>(front.size());
}

/// Mean over targets of the smallest d+ from any front point.
inline double igd_plus(const FrontSet& front, const FrontSet& targets) {
  if (front.empty() || targets.empty())
    throw UndefinedIndicatorError("IGD+ requires non-empty front and target sets");
  double total = 0.0;
  for (const auto& y : targets) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& yhat : front) best = std::min(best, dplus(yhat, y));
    total += best;
  }
  return total / static_cast<double>(targets.size());
}

struct IndicatorReport {
  double hvi = 0.0;
  std::size_t clipped = 0;
  std::optional<double> gd_plus;
  std::optional<double> igd_plus;
  ObjectiveVector reference;
  std::string target_set;  // provenance of the targets, empty when none
};

inline IndicatorReport evaluate_front(const FrontSet& front, const ObjectiveVector& ref,
                                      const FrontSet* targets = nullptr,
                                      std::string target_name = {}) {
  IndicatorReport r;
  auto hv = hypervolume_report(front, ref);
  r.hvi = hv.volume;
  r.clipped = hv.clipped;
  r.reference = ref;
  if (targets && !targets->empty() && !front.empty()) {
    r.gd_plus = gd_plus(front, *targets);
    r.igd_plus = igd_plus(front, *targets);
    r.target_set = std::move(target_name);
  }
  return r;
}

}  // namespace dmobo
