#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "errors.hpp"
#include "indicators.hpp"
#include "scalarize.hpp"
#include "space.hpp"
#include "surrogate.hpp"
#include "transforms.hpp"
#include "types.hpp"

namespace dmobo {

struct MoboConfig {
  std::size_t initial_points = 10;  // random suggestions before the surrogate is used
  std::optional<ObjectiveVector> upper_bounds;
  double gamma = 2.0;  // penalty strength
  TransformKind transform = TransformKind::quantile_uniform;
  Scalarizer scalarizer{};
  ForestConfig forest{};
  std::size_t pool_size = 8192;  // random candidates scored per suggest

  void validate(std::size_t num_objectives) const {
    if (initial_points < 1) throw ConfigError("initial_points must be >= 1");
    if (pool_size < 1) throw ConfigError("pool_size must be >= 1");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
    if (upper_bounds && upper_bounds->size() != num_objectives)
      throw ConfigError("upper_bounds must have one entry per objective");
    forest.validate();
  }
};

/// gamma * sum_i max(yu_i - ubu_i, 0) for one normalized row.
inline double bound_violation_penalty(std::span<const double> yu, std::span<const double> ubu,
                                      double gamma) {
  require_same_length(yu, ubu);
  double p = 0.0;
  for (std::size_t i = 0; i < yu.size(); ++i) p += std::max(yu[i] - ubu[i], 0.0);
  return gamma * p;
}

// Adds a row's own penalty to every one of its objectives.
inline ObjectiveVector apply_bound_penalty(std::span<const double> yu, std::span<const double> ubu,
                                           double gamma) {
  const double p = bound_violation_penalty(yu, ubu, gamma);
  ObjectiveVector out(yu.begin(), yu.end());
  for (double& v : out) v += p;
  return out;
}

/// Sequential multi-objective Bayesian optimizer: normalize, penalize,
/// scalarize with fresh random weights, impute failures, retrain a random
/// forest; suggest by minimizing mu - kappa * sigma over a random pool.
/// Single owner; not thread-safe.
class MoboOptimizer {
 public:
  MoboOptimizer(std::shared_ptr<const SearchSpace> space, std::size_t num_objectives,
                MoboConfig cfg, std::uint64_t seed)
      : MoboOptimizer(std::move(space), num_objectives, std::move(cfg), Rng(seed)) {}

  MoboOptimizer(std::shared_ptr<const SearchSpace> space, std::size_t num_objectives,
                MoboConfig cfg, Rng rng)
      : space_(std::move(space)), num_objectives_(num_objectives), cfg_(std::move(cfg)),
        rng_(std::move(rng)) {
    if (!space_ || space_->size() == 0) throw ConfigError("optimizer needs a non-empty space");
    if (num_objectives_ < 1) throw ConfigError("need at least one objective");
    cfg_.validate(num_objectives_);
  }

  void observe(std::span<const Configuration> x_new, std::span<const Outcome> y_new) {
    if (x_new.size() != y_new.size())
      throw StructuralError("observe: configuration and outcome counts differ");
    for (std::size_t i = 0; i < x_new.size(); ++i) {
      Outcome y = sanitize(y_new[i]);
      if (auto* v = objectives_of(y); v && v->size() != num_objectives_)
        throw StructuralError("observe: objective vector has wrong length");
      features_.push_back(encode(*space_, x_new[i]));
      x_.push_back(x_new[i]);
      y_.push_back(std::move(y));
    }
    refit();
  }

  Configuration suggest(double kappa) {
    if (x_.size() < cfg_.initial_points || !forest_) return sample(*space_, rng_);
    std::vector<Configuration> pool;
    pool.reserve(cfg_.pool_size);
    for (std::size_t i = 0; i < cfg_.pool_size; ++i) pool.push_back(sample(*space_, rng_));
    return std::move(pool[best_candidate(pool, kappa)]);
  }

  // Argmin of the LCB over a given pool; ties go to the lowest index.
  std::size_t best_candidate(std::span<const Configuration> pool, double kappa) const {
    if (!forest_) throw std::logic_error("no trained surrogate");
    if (pool.empty()) throw std::invalid_argument("empty candidate pool");
    std::vector<double> flat;
    flat.reserve(pool.size() * space_->size());
    for (const auto& c : pool) {
      const auto x = encode(*space_, c);
      flat.insert(flat.end(), x.begin(), x.end());
    }
    const auto preds = forest_->predict_batch(flat);
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < preds.size(); ++i) {
      const double score = preds[i].mu - kappa * preds[i].sigma;
      if (score < best_score) {
        best_score = score;
        best = i;
      }
    }
    return best;
  }

  /// Non-dominated subset of the raw finite objectives.
  FrontSet pareto_archive() const {
    std::vector<ObjectiveVector> finite;
    for (const auto& o : y_)
      if (auto* v = objectives_of(o)) finite.push_back(*v);
    return extract_pareto_front(finite);
  }

  const SearchSpace& space() const { return *space_; }
  const MoboConfig& config() const { return cfg_; }
  std::size_t num_objectives() const { return num_objectives_; }
  std::size_t size() const { return x_.size(); }
  const std::vector<Configuration>& configurations() const { return x_; }
  const ObjectiveMatrix& outcomes() const { return y_; }

  const std::optional<RegressionForest>& forest() const { return forest_; }
  void drop_forest() { forest_.reset(); }

  // State of the most recent observe: normalized and penalized rows (aligned
  // with outcomes(), empty for failures), scalarized targets (failures
  // imputed), weights and utopia point.
  const std::vector<ObjectiveVector>& normalized() const { return yu_; }
  const std::vector<ObjectiveVector>& penalized() const { return yp_; }
  const std::vector<double>& scalarized() const { return ys_; }
  const std::optional<WeightVector>& weights() const { return weights_; }
  const UtopiaPoint& utopia() const { return utopia_; }

 private:
  void refit() {
    yu_.assign(y_.size(), {});
    yp_.assign(y_.size(), {});
    ys_.clear();
    std::vector<std::size_t> finite;
    for (std::size_t i = 0; i < y_.size(); ++i)
      if (!is_failure(y_[i])) finite.push_back(i);
    if (finite.empty()) {
      forest_.reset();
      return;
    }

    const auto t = FittedTransform::fit(cfg_.transform, y_);
    for (std::size_t i : finite) yu_[i] = t.apply(std::get<ObjectiveVector>(y_[i]));

    const bool penalize = cfg_.upper_bounds && cfg_.transform == TransformKind::quantile_uniform;
    ObjectiveVector ubu;
    if (penalize) ubu = t.apply_to_bounds(*cfg_.upper_bounds);
    for (std::size_t i : finite) yp_[i] = penalize ? apply_bound_penalty(yu_[i], ubu, cfg_.gamma) : yu_[i];

    utopia_.assign(num_objectives_, std::numeric_limits<double>::infinity());
    for (std::size_t i : finite)
      for (std::size_t k = 0; k < num_objectives_; ++k) utopia_[k] = std::min(utopia_[k], yp_[i][k]);

    weights_ = sample_simplex_weights(num_objectives_, rng_);

    ys_.assign(y_.size(), 0.0);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i : finite) {
      ys_[i] = cfg_.scalarizer(yp_[i], *weights_, utopia_);
      worst = std::max(worst, ys_[i]);
    }
    for (std::size_t i = 0; i < y_.size(); ++i)
      if (is_failure(y_[i])) ys_[i] = worst;

    ForestConfig fc = cfg_.forest;
    fc.rng_seed = rng_();
    forest_ = RegressionForest::train(fc, features_, ys_);
  }

  std::shared_ptr<const SearchSpace> space_;
  std::size_t num_objectives_;
  MoboConfig cfg_;
  Rng rng_;

  std::vector<Configuration> x_;
  std::vector<std::vector<double>> features_;
  ObjectiveMatrix y_;

  std::vector<ObjectiveVector> yu_, yp_;
  std::vector<double> ys_;
  std::optional<WeightVector> weights_;
  UtopiaPoint utopia_;
  std::optional<RegressionForest> forest_;
};

}  // namespace dmobo
