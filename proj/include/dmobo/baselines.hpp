#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "indicators.hpp"
#include "space.hpp"
#include "types.hpp"

namespace dmobo {

inline Configuration random_search_step(const SearchSpace& space, Rng& rng) {
  return sample(space, rng);
}

class RandomSearch {
 public:
  RandomSearch(std::shared_ptr<const SearchSpace> space, std::uint64_t seed)
      : space_(std::move(space)), rng_(seed) {}

  Configuration ask() { return random_search_step(*space_, rng_); }
  void tell(const Configuration&, const Outcome&) {}

 private:
  std::shared_ptr<const SearchSpace> space_;
  Rng rng_;
};

/// Partition into non-domination ranks (domination-count bookkeeping). Entries are
/// indices into `points`, ascending within each front.
inline std::vector<std::vector<std::size_t>> fast_nondominated_sort(
    const std::vector<ObjectiveVector>& points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated_by_me(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (dominates(points[p], points[q])) {
        dominated_by_me[p].push_back(q);
        ++domination_count[q];
      } else if (dominates(points[q], points[p])) {
        dominated_by_me[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    if (domination_count[p] == 0) current.push_back(p);
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      for (std::size_t q : dominated_by_me[p])
        if (--domination_count[q] == 0) next.push_back(q);
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

/// Boundary points per objective get +inf; interior points sum neighbour gaps
/// normalized by the objective's range (zero-range objectives add nothing).
inline std::vector<double> crowding_distance(const std::vector<ObjectiveVector>& front) {
  const std::size_t n = front.size();
  if (n == 0) throw std::invalid_argument("crowding distance of an empty front");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, 0.0);
  if (n <= 2) return std::vector<double>(n, inf);
  const std::size_t m = front.front().size();
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < m; ++k) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return front[a][k] < front[b][k]; });
    const double lo = front[order.front()][k], hi = front[order.back()][k];
    d[order.front()] = inf;
    d[order.back()] = inf;
    if (hi - lo <= 0.0) continue;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (std::isinf(d[order[i]])) continue;
      d[order[i]] += (front[order[i + 1]][k] - front[order[i - 1]][k]) / (hi - lo);
    }
  }
  return d;
}

struct NsgaConfig {
  std::size_t population_size = 50;
  double crossover_prob = 0.9;
  std::optional<double> mutation_prob;  // defaults to 1 / number of parameters
  double eta_crossover = 15.0;
  double eta_mutation = 20.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (population_size < 4 || population_size % 2 != 0)
      throw ConfigError("population_size must be even and >= 4");
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(crossover_prob) || (mutation_prob && !prob(*mutation_prob)))
      throw ConfigError("probabilities must lie in [0, 1]");
    if (!(eta_crossover > 0.0) || !(eta_mutation > 0.0))
      throw ConfigError("distribution indices must be > 0");
  }
};

/// Steady-state NSGA-II: one child per ask, one insertion per tell, truncating
/// the pool by (rank, crowding) when it exceeds the population size. Failed
/// evaluations rank below every valid individual.
class Nsga2 {
 public:
  struct Individual {
    Configuration config;
    std::vector<double> x;  // encoded
    Outcome outcome;
  };

  Nsga2(std::shared_ptr<const SearchSpace> space, NsgaConfig cfg)
      : space_(std::move(space)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    mutation_prob_ = cfg_.mutation_prob.value_or(1.0 / static_cast<double>(space_->size()));
  }

  Configuration ask() {
    ++asked_;
    if (asked_ <= cfg_.population_size || pool_.empty()) return sample(*space_, rng_);
    const auto ranking = rank_pool();
    const Individual& a = pool_[tournament(ranking)];
    const Individual& b = pool_[tournament(ranking)];
    return make_child(a, b);
  }

  void tell(const Configuration& c, const Outcome& y) {
    pool_.push_back({c, encode(*space_, c), sanitize(y)});
    while (pool_.size() > cfg_.population_size) {
      const auto ranking = rank_pool();
      pool_.erase(pool_.begin() + static_cast<std::ptrdiff_t>(worst(ranking)));
    }
  }

  const std::vector<Individual>& pool() const { return pool_; }
  const NsgaConfig& config() const { return cfg_; }

  struct Ranking {
    std::vector<std::size_t> rank;
    std::vector<double> crowding;
  };

  // Valid individuals by non-domination; failures form one extra last front.
  Ranking rank_pool() const {
    Ranking r;
    r.rank.assign(pool_.size(), 0);
    r.crowding.assign(pool_.size(), 0.0);
    std::vector<std::size_t> valid, failed;
    std::vector<ObjectiveVector> pts;
    for (std::size_t i = 0; i < pool_.size(); ++i) {
      if (auto* y = objectives_of(pool_[i].outcome)) {
        valid.push_back(i);
        pts.push_back(*y);
      } else {
        failed.push_back(i);
      }
    }
    const auto fronts = fast_nondominated_sort(pts);
    for (std::size_t f = 0; f < fronts.size(); ++f) {
      std::vector<ObjectiveVector> members;
      for (std::size_t k : fronts[f]) members.push_back(pts[k]);
      const auto cd = crowding_distance(members);
      for (std::size_t j = 0; j < fronts[f].size(); ++j) {
        r.rank[valid[fronts[f][j]]] = f;
        r.crowding[valid[fronts[f][j]]] = cd[j];
      }
    }
    for (std::size_t i : failed) r.rank[i] = fronts.size();
    return r;
  }

 private:
  static bool better(const Ranking& r, std::size_t a, std::size_t b) {
    if (r.rank[a] != r.rank[b]) return r.rank[a] < r.rank[b];
    return r.crowding[a] > r.crowding[b];
  }

  std::size_t tournament(const Ranking& r) {
    std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
    const std::size_t a = pick(rng_), b = pick(rng_);
    return better(r, b, a) ? b : a;
  }

  // Highest rank, then smallest crowding; ties remove the newest.
  static std::size_t worst(const Ranking& r) {
    std::size_t w = 0;
    for (std::size_t i = 1; i < r.rank.size(); ++i)
      if (!better(r, i, w)) w = i;
    return w;
  }

  Configuration make_child(const Individual& p1, const Individual& p2) {
    const std::size_t d = space_->size();
    std::vector<double> x = p1.x;
    std::vector<bool> changed(d, false);
    Configuration child = p1.config;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    if (unif(rng_) < cfg_.crossover_prob) {
      for (std::size_t i = 0; i < d; ++i) {
        const auto& spec = (*space_)[i];
        if (spec.kind == ParamKind::categorical) {
          if (unif(rng_) < 0.5) {
            child.values[i] = p2.config.values[i];
            x[i] = p2.x[i];
          }
          continue;
        }
        if (unif(rng_) > 0.5 || std::abs(p1.x[i] - p2.x[i]) <= 1e-14) continue;
        x[i] = sbx(p1.x[i], p2.x[i], encoded_bounds(spec));
        changed[i] = true;
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (!(unif(rng_) < mutation_prob_)) continue;
      const auto& spec = (*space_)[i];
      if (spec.kind == ParamKind::categorical) {
        child.values[i] = sample_parameter(spec, rng_);
        continue;
      }
      x[i] = polynomial_mutation(x[i], encoded_bounds(spec));
      changed[i] = true;
    }
    for (std::size_t i = 0; i < d; ++i)
      if (changed[i]) child.values[i] = decode_value((*space_)[i], x[i]);
    return child;
  }

  // Bounded simulated binary crossover; returns one of the two offspring.
  double sbx(double a, double b, std::pair<double, double> bounds) {
    const auto [yl, yu] = bounds;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double y1 = std::min(a, b), y2 = std::max(a, b);
    const double eta = cfg_.eta_crossover;
    const double r = unif(rng_);
    auto betaq_for = [&](double beta) {
      const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
      return r <= 1.0 / alpha ? std::pow(r * alpha, 1.0 / (eta + 1.0))
                              : std::pow(1.0 / (2.0 - r * alpha), 1.0 / (eta + 1.0));
    };
    double c1 = 0.5 * ((y1 + y2) - betaq_for(1.0 + 2.0 * (y1 - yl) / (y2 - y1)) * (y2 - y1));
    double c2 = 0.5 * ((y1 + y2) + betaq_for(1.0 + 2.0 * (yu - y2) / (y2 - y1)) * (y2 - y1));
    c1 = std::clamp(c1, yl, yu);
    c2 = std::clamp(c2, yl, yu);
    return unif(rng_) < 0.5 ? c1 : c2;
  }

  double polynomial_mutation(double y, std::pair<double, double> bounds) {
    const auto [yl, yu] = bounds;
    if (yu <= yl) return y;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double eta = cfg_.eta_mutation;
    const double d1 = (y - yl) / (yu - yl), d2 = (yu - y) / (yu - yl);
    const double r = unif(rng_);
    const double pw = 1.0 / (eta + 1.0);
    double dq;
    if (r < 0.5) {
      const double val = 2.0 * r + (1.0 - 2.0 * r) * std::pow(1.0 - d1, eta + 1.0);
      dq = std::pow(val, pw) - 1.0;
    } else {
      const double val = 2.0 * (1.0 - r) + 2.0 * (r - 0.5) * std::pow(1.0 - d2, eta + 1.0);
      dq = 1.0 - std::pow(val, pw);
    }
    return std::clamp(y + dq * (yu - yl), yl, yu);
  }

  std::shared_ptr<const SearchSpace> space_;
  NsgaConfig cfg_;
  double mutation_prob_ = 0.0;
  Rng rng_;
  std::size_t asked_ = 0;
  std::vector<Individual> pool_;
};

}  // namespace dmobo
