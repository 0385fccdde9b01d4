#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "archive.hpp"
#include "errors.hpp"
#include "mobo.hpp"
#include "space.hpp"
#include "types.hpp"

namespace dmobo {

using BlackBox = std::function<Outcome(const Configuration&)>;

/// Runs the black box; exceptions and non-finite objectives become failures.
inline Outcome evaluate_safely(const BlackBox& func, const Configuration& x) {
  try {
    return sanitize(func(x));
  } catch (const std::exception& e) {
    return FailureMarker{std::string("evaluation raised: ") + e.what()};
  } catch (...) {
    return FailureMarker{"evaluation raised a non-standard exception"};
  }
}

struct AgentConfig {
  int rank = 0;
  int num_agents = 1;
  double kappa = 1.96;      // mean of the exponential the initial kappa is drawn from
  double decay_rate = 0.25;
  std::int64_t period = 25;
  std::uint64_t seed_global = 0;
  MoboConfig mobo{};

  void validate() const {
    if (num_agents < 1) throw ConfigError("num_agents must be >= 1");
    if (rank < 0 || rank >= num_agents)
      throw ConfigError("agent rank " + std::to_string(rank) + " outside [0, " +
                        std::to_string(num_agents) + ")");
    if (period < 1) throw ConfigError("decay period must be >= 1");
    if (!(decay_rate >= 0.0)) throw ConfigError("decay rate must be >= 0");
    if (!(kappa > 0.0)) throw ConfigError("kappa must be > 0");
  }
};

/// kappa_t = kappa0 * exp(-lambda * (t mod T)).
inline double kappa_schedule(double kappa0, std::int64_t t, double lambda, std::int64_t period) {
  if (t < 0) throw std::invalid_argument("schedule step must be >= 0");
  if (period < 1) throw std::invalid_argument("schedule period must be >= 1");
  return kappa0 * std::exp(-lambda * static_cast<double>(t % period));
}

struct SeedProtocol {
  double kappa0 = 0.0;
  std::uint64_t seed_local = 0;
};

/// From the global stream: kappa0 ~ Exp(mean kappa) by inverse CDF, then
/// num_agents integers in [0, 2^63 - 1]; the rank-th becomes the local seed.
inline SeedProtocol derive_seeds(std::uint64_t seed_global, double kappa, int num_agents, int rank) {
  if (num_agents < 1 || rank < 0 || rank >= num_agents) throw ConfigError("invalid agent rank");
  Rng rng(seed_global);
  SeedProtocol s;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  s.kappa0 = -kappa * std::log1p(-unif(rng));
  std::uniform_int_distribution<std::uint64_t> ints(0, std::numeric_limits<std::int64_t>::max());
  for (int i = 0; i < num_agents; ++i) {
    const std::uint64_t v = ints(rng);
    if (i == rank) s.seed_local = v;
  }
  return s;
}

struct Proposal {
  Configuration config;
  std::optional<double> kappa;
};

/// One decentralized optimization agent: a private MoboOptimizer plus a cursor
/// on the shared archive.
class Agent {
 public:
  using ObserveHook = std::function<void(int rank, const std::vector<Trial>& batch)>;

  Agent(std::shared_ptr<const SearchSpace> space, std::size_t num_objectives, AgentConfig cfg,
        TrialArchive& archive)
      : cfg_((cfg.validate(), std::move(cfg))),
        seeds_(derive_seeds(cfg_.seed_global, cfg_.kappa, cfg_.num_agents, cfg_.rank)),
        optimizer_(std::move(space), num_objectives, cfg_.mobo, Rng(seeds_.seed_local)),
        archive_(archive),
        reader_(archive.register_reader()) {}

  int rank() const { return cfg_.rank; }
  double kappa0() const { return seeds_.kappa0; }
  std::uint64_t seed_local() const { return seeds_.seed_local; }
  std::int64_t step() const { return step_; }
  MoboOptimizer& optimizer() { return optimizer_; }
  const MoboOptimizer& optimizer() const { return optimizer_; }

  void set_observe_hook(ObserveHook hook) { hook_ = std::move(hook); }

  double current_kappa() const {
    return kappa_schedule(seeds_.kappa0, step_, cfg_.decay_rate, cfg_.period);
  }

  Proposal propose() {
    const double k = current_kappa();
    return {optimizer_.suggest(k), k};
  }

  /// Pulls other agents' new trials, publishes `own`, and observes the union.
  void complete(const Trial& own) {
    std::vector<Trial> batch;
    for (auto& t : archive_.read_new(reader_))
      if (t.agent_rank != cfg_.rank) batch.push_back(std::move(t));
    archive_.append(own);
    batch.push_back(own);
    ++step_;
    if (hook_) hook_(cfg_.rank, batch);
    observe_batch(batch);
  }

  /// Observes other agents' trials appended since the last read without
  /// publishing anything. Returns the number of trials delivered.
  std::size_t sync() {
    std::vector<Trial> batch;
    for (auto& t : archive_.read_new(reader_))
      if (t.agent_rank != cfg_.rank) batch.push_back(std::move(t));
    if (batch.empty()) return 0;
    if (hook_) hook_(cfg_.rank, batch);
    observe_batch(batch);
    return batch.size();
  }

 private:
  void observe_batch(std::vector<Trial>& batch) {
    std::vector<Configuration> xs;
    std::vector<Outcome> ys;
    xs.reserve(batch.size());
    ys.reserve(batch.size());
    for (auto& t : batch) {
      xs.push_back(std::move(t.config));
      ys.push_back(std::move(t.outcome));
    }
    optimizer_.observe(xs, ys);
  }

  AgentConfig cfg_;
  SeedProtocol seeds_;
  MoboOptimizer optimizer_;
  TrialArchive& archive_;
  ReaderId reader_;
  std::int64_t step_ = 0;
  ObserveHook hook_;
};

// ---------------------------------------------------------------------------
// Real-time execution

struct RunBudget {
  std::optional<std::size_t> evaluations;  // total across all workers
  std::optional<double> seconds;           // wall clock since the run started

  bool unlimited() const { return !evaluations && !seconds; }
};

/// Shared stop condition: evaluation slots are claimed atomically before an
/// evaluation starts.
class BudgetGate {
 public:
  explicit BudgetGate(RunBudget budget)
      : budget_(budget), start_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  bool try_claim() {
    if (budget_.seconds && elapsed() >= *budget_.seconds) return false;
    if (!budget_.evaluations) return true;
    std::size_t cur = claimed_.load();
    while (cur < *budget_.evaluations) {
      if (claimed_.compare_exchange_weak(cur, cur + 1)) return true;
    }
    return false;
  }

 private:
  RunBudget budget_;
  std::chrono::steady_clock::time_point start_;
  std::atomic<std::size_t> claimed_{0};
};

/// suggest -> evaluate -> read/append -> observe until the gate closes.
inline void agent_loop(Agent& agent, const BlackBox& func, BudgetGate& gate) {
  while (gate.try_claim()) {
    Trial t;
    t.agent_rank = agent.rank();
    t.local_step = agent.step();
    t.t_submit = gate.elapsed();
    Proposal p = agent.propose();
    t.kappa_used = p.kappa;
    t.outcome = evaluate_safely(func, p.config);
    t.config = std::move(p.config);
    t.t_complete = gate.elapsed();
    agent.complete(t);
  }
}

/// U(t): fraction of the W workers with a trial in flight (submit <= t < complete).
inline std::vector<double> utilization_curve(const std::vector<Trial>& trials, std::size_t workers,
                                             std::span<const double> grid) {
  if (workers == 0) throw std::invalid_argument("worker count must be >= 1");
  std::vector<double> out;
  out.reserve(grid.size());
  for (double t : grid) {
    std::set<int> busy;
    for (const auto& tr : trials)
      if (tr.t_submit <= t && t < tr.t_complete) busy.insert(tr.agent_rank);
    out.push_back(static_cast<double>(busy.size()) / static_cast<double>(workers));
  }
  return out;
}

}  // namespace dmobo
