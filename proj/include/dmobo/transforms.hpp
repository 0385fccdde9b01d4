#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace dmobo {

enum class TransformKind { identity, minmax_log, quantile_uniform };

inline std::string to_string(TransformKind k) {
  switch (k) {
    case TransformKind::identity: return "Id";
    case TransformKind::minmax_log: return "MML";
    case TransformKind::quantile_uniform: return "QU";
  }
  return "?";
}

inline TransformKind transform_kind_from_string(const std::string& s) {
  if (s == "Id" || s == "identity") return TransformKind::identity;
  if (s == "MML" || s == "minmax-log") return TransformKind::minmax_log;
  if (s == "QU" || s == "quantile-uniform") return TransformKind::quantile_uniform;
  throw ConfigError("unknown transform '" + s + "'");
}

// One record per trial; failures carry no objectives.
using ObjectiveMatrix = std::vector<Outcome>;

/// Columnwise objective normalization fitted on the finite rows of an
/// ObjectiveMatrix. Immutable once fitted.
class FittedTransform {
 public:
  static constexpr double kMinMaxLogEpsilon = 1e-9;

  static FittedTransform fit(TransformKind kind, const ObjectiveMatrix& y) {
    std::vector<const ObjectiveVector*> rows;
    for (const auto& o : y)
      if (auto* v = objectives_of(o)) rows.push_back(v);
    if (rows.empty()) throw CannotFitError("no finite objective rows to fit a transform on");
    const std::size_t no = rows.front()->size();
    for (auto* r : rows)
      if (r->size() != no) throw StructuralError("objective rows differ in length");

    FittedTransform t;
    t.kind_ = kind;
    t.columns_ = no;
    switch (kind) {
      case TransformKind::identity:
        break;
      case TransformKind::minmax_log:
        t.ymin_.assign(no, std::numeric_limits<double>::infinity());
        t.ymax_.assign(no, -std::numeric_limits<double>::infinity());
        for (auto* r : rows) {
          for (std::size_t i = 0; i < no; ++i) {
            t.ymin_[i] = std::min(t.ymin_[i], (*r)[i]);
            t.ymax_[i] = std::max(t.ymax_[i], (*r)[i]);
          }
        }
        break;
      case TransformKind::quantile_uniform:
        t.sorted_.assign(no, {});
        for (std::size_t i = 0; i < no; ++i) {
          auto& col = t.sorted_[i];
          col.reserve(rows.size());
          for (auto* r : rows) col.push_back((*r)[i]);
          std::sort(col.begin(), col.end());
        }
        break;
    }
    return t;
  }

  TransformKind kind() const { return kind_; }
  std::size_t columns() const { return columns_; }
  const std::vector<std::vector<double>>& sorted_samples() const { return sorted_; }
  const std::vector<double>& ymin() const { return ymin_; }
  const std::vector<double>& ymax() const { return ymax_; }
  double epsilon() const { return kMinMaxLogEpsilon; }

  ObjectiveVector apply(std::span<const double> y) const {
    check_width(y);
    ObjectiveVector out(y.begin(), y.end());
    switch (kind_) {
      case TransformKind::identity:
        break;
      case TransformKind::minmax_log:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = minmax_log(i, y[i]);
        break;
      case TransformKind::quantile_uniform:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = ecdf(i, y[i]);
        break;
    }
    return out;
  }

  /// ECDF image of objective upper bounds; only defined for QU.
  ObjectiveVector apply_to_bounds(std::span<const double> ub) const {
    if (kind_ != TransformKind::quantile_uniform)
      throw std::logic_error("bounds can only be mapped through a quantile-uniform transform");
    return apply(ub);
  }

  // F(v) = #{samples <= v} / n at sample values, 0 below the minimum, 1 at or
  // above the maximum, linear between adjacent distinct samples.
  double ecdf(std::size_t column, double v) const {
    const auto& s = sorted_[column];
    const double n = static_cast<double>(s.size());
    if (std::isnan(v)) return v;
    auto hi = std::upper_bound(s.begin(), s.end(), v);
    const auto count = static_cast<std::size_t>(hi - s.begin());
    if (count == 0) return 0.0;
    if (count == s.size()) return 1.0;
    const double lo_val = s[count - 1];
    const double f_lo = static_cast<double>(count) / n;
    if (v == lo_val) return f_lo;
    const double hi_val = *hi;
    const auto count_hi = static_cast<std::size_t>(std::upper_bound(hi, s.end(), hi_val) - s.begin());
    const double f_hi = static_cast<double>(count_hi) / n;
    return f_lo + (v - lo_val) / (hi_val - lo_val) * (f_hi - f_lo);
  }

 private:
  void check_width(std::span<const double> y) const {
    if (y.size() != columns_)
      throw StructuralError("objective vector has " + std::to_string(y.size()) +
                            " entries, transform expects " + std::to_string(columns_));
  }

  // log((y - y_min) / y_max + eps). A zero y_max falls back to 1 and values
  // below y_min clamp to log(eps) so the result stays finite.
  double minmax_log(std::size_t i, double y) const {
    double scale = std::abs(ymax_[i]);
    if (scale == 0.0) scale = 1.0;
    return std::log(std::max((y - ymin_[i]) / scale, 0.0) + kMinMaxLogEpsilon);
  }

  TransformKind kind_ = TransformKind::identity;
  std::size_t columns_ = 0;
  std::vector<std::vector<double>> sorted_;
  std::vector<double> ymin_, ymax_;
};

}  // namespace dmobo
