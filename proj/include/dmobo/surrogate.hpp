#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "types.hpp"

namespace dmobo {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t min_samples_split = 2;
  double max_features = 1.0;  // fraction of features tried per split
  bool bootstrap = true;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (n_trees < 1) throw std::invalid_argument("forest needs at least one tree");
    if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
    if (!(max_features > 0.0 && max_features <= 1.0))
      throw std::invalid_argument("max_features must lie in (0, 1]");
  }
};

struct Prediction {
  double mu = 0.0;
  double sigma = 0.0;
};

/// Mean and population standard deviation of per-tree predictions. Exactly
/// zero dispersion when all trees agree.
inline Prediction aggregate_tree_predictions(std::span<const double> per_tree) {
  if (per_tree.empty()) throw std::invalid_argument("no tree predictions to aggregate");
  const double first = per_tree[0];
  bool same = true;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double p : per_tree) {
    same = same && p == first;
    ++k;
    const double delta = p - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (p - mean);
  }
  if (same) return {first, 0.0};
  return {mean, std::sqrt(std::max(m2, 0.0) / static_cast<double>(k))};
}

// Binary regression tree with random thresholds, stored as a flat node array.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;
    int left = -1;
    int right = -1;
  };

  double predict(const double* x) const {
    int i = 0;
    while (nodes_[i].feature >= 0) {
      const Node& n = nodes_[i];
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[i].value;
  }

  // Evaluates `count` rows (stride `dim`) into out[0..count). Branch-free
  // walk over compact arrays: leaves loop onto themselves, so every row takes
  // exactly depth steps.
  void predict_rows(const double* x, std::size_t dim, std::size_t count, double* out) const {
    constexpr std::size_t kBlock = 64;
    std::int32_t at[kBlock];
    for (std::size_t r0 = 0; r0 < count; r0 += kBlock) {
      const std::size_t m = std::min(kBlock, count - r0);
      const double* base = x + r0 * dim;
      for (std::size_t l = 0; l < m; ++l) at[l] = 0;
      for (int step = 0; step < depth_; ++step)
        for (std::size_t l = 0; l < m; ++l) {
          const std::int32_t i = at[l];
          at[l] = child_[i] + (base[l * dim + feat_[i]] > thr_[i] ? 1 : 0);
        }
      for (std::size_t l = 0; l < m; ++l) out[r0 + l] = nodes_[static_cast<std::size_t>(at[l])].value;
    }
  }

  const std::vector<Node>& nodes() const { return nodes_; }

  // x is row-major with `dim` columns; `idx` holds the (possibly repeated)
  // training rows for this tree and is reordered in place.
  static RegressionTree grow(const std::vector<double>& x, std::size_t dim,
                             const std::vector<double>& s, std::vector<std::size_t> idx,
                             const ForestConfig& cfg, Rng& rng) {
    RegressionTree tree;
    const std::size_t n_try = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.max_features * static_cast<double>(dim) - 1e-12)));
    std::vector<std::size_t> features(dim);
    std::iota(features.begin(), features.end(), 0);

    struct Task {
      int node;
      std::size_t begin, end;
    };
    std::vector<Task> stack;
    tree.nodes_.emplace_back();
    stack.push_back({0, 0, idx.size()});

    while (!stack.empty()) {
      Task t = stack.back();
      stack.pop_back();
      const std::size_t n = t.end - t.begin;
      double sum = 0.0, sumsq = 0.0;
      double lo = s[idx[t.begin]], hi = lo;
      for (std::size_t k = t.begin; k < t.end; ++k) {
        const double v = s[idx[k]];
        sum += v;
        sumsq += v * v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      tree.nodes_[t.node].value = lo == hi ? lo : sum / static_cast<double>(n);
      if (n < cfg.min_samples_split || lo == hi) continue;

      // Partial Fisher-Yates: the first n_try entries are the candidates.
      for (std::size_t k = 0; k < n_try && k + 1 < dim; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, dim - 1);
        std::swap(features[k], features[pick(rng)]);
      }

      int best_feature = -1;
      double best_threshold = 0.0;
      double best_score = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < n_try; ++c) {
        const std::size_t f = features[c];
        double fmin = x[idx[t.begin] * dim + f], fmax = fmin;
        for (std::size_t k = t.begin + 1; k < t.end; ++k) {
          const double v = x[idx[k] * dim + f];
          fmin = std::min(fmin, v);
          fmax = std::max(fmax, v);
        }
        if (fmin == fmax) continue;
        std::uniform_real_distribution<double> u(fmin, fmax);
        double thr = u(rng);
        if (!(thr < fmax)) thr = fmin;
        double sl = 0.0, sql = 0.0;
        std::size_t nl = 0;
        for (std::size_t k = t.begin; k < t.end; ++k) {
          if (x[idx[k] * dim + f] <= thr) {
            const double v = s[idx[k]];
            sl += v;
            sql += v * v;
            ++nl;
          }
        }
        const std::size_t nr = n - nl;
        const double sr = sum - sl, sqr = sumsq - sql;
        const double score = (sql - sl * sl / static_cast<double>(nl)) +
                             (sqr - sr * sr / static_cast<double>(nr));
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = thr;
        }
      }
      if (best_feature < 0) continue;  // every candidate feature constant

      auto mid = std::partition(idx.begin() + static_cast<std::ptrdiff_t>(t.begin),
                                idx.begin() + static_cast<std::ptrdiff_t>(t.end),
                                [&](std::size_t r) {
                                  return x[r * dim + static_cast<std::size_t>(best_feature)] <=
                                         best_threshold;
                                });
      const auto split = static_cast<std::size_t>(mid - idx.begin());
      const int left = static_cast<int>(tree.nodes_.size());
      tree.nodes_.emplace_back();
      tree.nodes_.emplace_back();
      Node& node = tree.nodes_[t.node];
      node.feature = best_feature;
      node.threshold = best_threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, split, t.end});
      stack.push_back({left, t.begin, split});
    }
    tree.compact();
    return tree;
  }

 private:
  void compact() {
    const std::size_t n = nodes_.size();
    feat_.resize(n);
    thr_.resize(n);
    child_.resize(n);
    std::vector<int> depth(n, 0);
    depth_ = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const Node& nd = nodes_[i];
      if (nd.feature < 0) {
        feat_[i] = 0;
        thr_[i] = std::numeric_limits<double>::infinity();
        child_[i] = static_cast<std::int32_t>(i);
      } else {
        feat_[i] = static_cast<std::uint32_t>(nd.feature);
        thr_[i] = nd.threshold;
        child_[i] = nd.left;  // right == left + 1
        depth[static_cast<std::size_t>(nd.left)] = depth[static_cast<std::size_t>(nd.right)] = depth[i] + 1;
        depth_ = std::max(depth_, depth[i] + 1);
      }
    }
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> feat_;
  std::vector<double> thr_;
  std::vector<std::int32_t> child_;
  int depth_ = 0;
};

/// Random-split regression forest; mean and inter-tree dispersion give the
/// LCB ingredients.
class RegressionForest {
 public:
  static RegressionForest train(const ForestConfig& cfg, const std::vector<std::vector<double>>& x,
                                const std::vector<double>& s) {
    cfg.validate();
    if (x.empty()) throw CannotTrainError("cannot train a forest on no data");
    if (x.size() != s.size()) throw StructuralError("feature and target counts differ");
    const std::size_t dim = x.front().size();
    std::vector<double> flat;
    flat.reserve(x.size() * dim);
    for (const auto& row : x) {
      if (row.size() != dim) throw StructuralError("feature vectors differ in length");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    for (double v : s)
      if (!std::isfinite(v)) throw CannotTrainError("training targets must be finite");

    RegressionForest forest;
    forest.dim_ = dim;
    forest.trees_.reserve(cfg.n_trees);
    Rng seeder(cfg.rng_seed);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
      Rng rng(seeder());
      if (cfg.bootstrap) {
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (auto& i : idx) i = pick(rng);
      } else {
        std::iota(idx.begin(), idx.end(), 0);
      }
      forest.trees_.push_back(RegressionTree::grow(flat, dim, s, idx, cfg, rng));
    }
    return forest;
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return trees_.size(); }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  std::vector<double> predict_per_tree(std::span<const double> x) const {
    check_dim(x);
    std::vector<double> out;
    out.reserve(trees_.size());
    for (const auto& t : trees_) out.push_back(t.predict(x.data()));
    return out;
  }

  /// Predictions for `rows` row-major feature vectors. Loops tree by tree for
  /// cache locality; per-row arithmetic matches predict().
  std::vector<Prediction> predict_batch(std::span<const double> flat) const {
    if (dim_ == 0 || flat.size() % dim_ != 0)
      throw StructuralError("batch size is not a multiple of the forest dimension");
    const std::size_t rows = flat.size() / dim_;
    std::vector<double> first(rows), mean(rows, 0.0), m2(rows, 0.0);
    std::vector<char> same(rows, 1);
    std::vector<double> per_tree(rows);
    trees_.front().predict_rows(flat.data(), dim_, rows, first.data());
    std::size_t k = 0;
    for (const auto& t : trees_) {
      ++k;
      const double kd = static_cast<double>(k);
      t.predict_rows(flat.data(), dim_, rows, per_tree.data());
      for (std::size_t r = 0; r < rows; ++r) {
        const double p = per_tree[r];
        same[r] = same[r] && p == first[r];
        const double delta = p - mean[r];
        mean[r] += delta / kd;
        m2[r] += delta * (p - mean[r]);
      }
    }
    std::vector<Prediction> out(rows);
    for (std::size_t r = 0; r < rows; ++r)
      out[r] = same[r] ? Prediction{first[r], 0.0}
                       : Prediction{mean[r], std::sqrt(std::max(m2[r], 0.0) / static_cast<double>(k))};
    return out;
  }

  Prediction predict(std::span<const double> x) const {
    check_dim(x);
    const double first = trees_.front().predict(x.data());
    bool same = true;
    double mean = 0.0, m2 = 0.0;
    std::size_t k = 0;
    for (const auto& t : trees_) {
      const double p = t.predict(x.data());
      same = same && p == first;
      ++k;
      const double delta = p - mean;
      mean += delta / static_cast<double>(k);
      m2 += delta * (p - mean);
    }
    if (same) return {first, 0.0};
    return {mean, std::sqrt(std::max(m2, 0.0) / static_cast<double>(k))};
  }

 private:
  void check_dim(std::span<const double> x) const {
    if (x.size() != dim_)
      throw StructuralError("feature vector has " + std::to_string(x.size()) +
                            " entries, forest expects " + std::to_string(dim_));
  }

  std::size_t dim_ = 0;
  std::vector<RegressionTree> trees_;
};

}  // namespace dmobo
