#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "archive.hpp"
#include "baselines.hpp"
#include "dbo.hpp"
#include "errors.hpp"
#include "space.hpp"

namespace dmobo {

/// Any optimizer driven by W asynchronous workers. tell() is responsible for
/// publishing the trial to the archive.
class AsyncOptimizer {
 public:
  virtual ~AsyncOptimizer() = default;
  virtual std::size_t workers() const = 0;
  virtual Proposal ask(int worker) = 0;
  virtual void tell(int worker, const Trial& trial) = 0;
  virtual std::shared_ptr<TrialArchive> archive() const = 0;
};

/// Np independent agents sharing one archive.
class DboSwarm final : public AsyncOptimizer {
 public:
  DboSwarm(std::shared_ptr<const SearchSpace> space, std::size_t num_objectives, int num_agents,
           AgentConfig base, std::shared_ptr<TrialArchive> archive)
      : archive_(std::move(archive)) {
    if (num_agents < 1) throw ConfigError("need at least one agent");
    for (int r = 0; r < num_agents; ++r) {
      AgentConfig cfg = base;
      cfg.rank = r;
      cfg.num_agents = num_agents;
      agents_.push_back(std::make_unique<Agent>(space, num_objectives, cfg, *archive_));
    }
  }

  std::size_t workers() const override { return agents_.size(); }
  Proposal ask(int worker) override { return agents_.at(static_cast<std::size_t>(worker))->propose(); }
  void tell(int worker, const Trial& trial) override {
    agents_.at(static_cast<std::size_t>(worker))->complete(trial);
  }
  std::shared_ptr<TrialArchive> archive() const override { return archive_; }

  Agent& agent(int rank) { return *agents_.at(static_cast<std::size_t>(rank)); }

 private:
  std::shared_ptr<TrialArchive> archive_;
  std::vector<std::unique_ptr<Agent>> agents_;
};

/// A single ask/tell coordinator (random search, NSGA-II) shared by all
/// workers behind a mutex.
template <typename Coordinator>
class CentralOptimizer final : public AsyncOptimizer {
 public:
  CentralOptimizer(Coordinator coordinator, std::size_t workers, std::shared_ptr<TrialArchive> archive)
      : coordinator_(std::move(coordinator)), workers_(workers), archive_(std::move(archive)) {
    if (workers_ < 1) throw ConfigError("need at least one worker");
  }

  std::size_t workers() const override { return workers_; }
  Proposal ask(int) override {
    std::lock_guard lock(mutex_);
    return {coordinator_.ask(), std::nullopt};
  }
  void tell(int, const Trial& trial) override {
    std::lock_guard lock(mutex_);
    archive_->append(trial);
    coordinator_.tell(trial.config, trial.outcome);
  }
  std::shared_ptr<TrialArchive> archive() const override { return archive_; }

  Coordinator& coordinator() { return coordinator_; }

 private:
  std::mutex mutex_;
  Coordinator coordinator_;
  std::size_t workers_;
  std::shared_ptr<TrialArchive> archive_;
};

// ---------------------------------------------------------------------------
// Deterministic discrete-event simulation

struct LatencyModel {
  enum class Kind { constant, uniform, exponential };
  Kind kind = Kind::constant;
  double a = 1.0;  // constant value, uniform low, or exponential mean
  double b = 1.0;  // uniform high

  static LatencyModel constant(double v) { return {Kind::constant, v, v}; }
  static LatencyModel uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static LatencyModel exponential(double mean) { return {Kind::exponential, mean, mean}; }

  double draw(Rng& rng) const {
    switch (kind) {
      case Kind::constant: return a;
      case Kind::uniform: return std::uniform_real_distribution<double>(a, b)(rng);
      case Kind::exponential: return std::exponential_distribution<double>(1.0 / a)(rng);
    }
    return a;
  }
};

struct SimulationConfig {
  RunBudget budget;  // seconds are simulated time
  LatencyModel latency{};
  std::uint64_t seed = 0;
};

/// Runs W workers in simulated time. Each worker asks, evaluates, and
/// completes after a drawn latency; completions are processed in (time,
/// worker) order, so the resulting archive is a pure function of the seeds.
inline std::vector<Trial> simulate(AsyncOptimizer& opt, const BlackBox& func,
                                   const SimulationConfig& cfg) {
  if (cfg.budget.unlimited()) throw ConfigError("simulation needs an evaluation or time budget");
  struct InFlight {
    double t_complete;
    int worker;
    Trial trial;
  };
  auto later = [](const InFlight& a, const InFlight& b) {
    return a.t_complete > b.t_complete || (a.t_complete == b.t_complete && a.worker > b.worker);
  };
  std::priority_queue<InFlight, std::vector<InFlight>, decltype(later)> queue(later);
  Rng rng(cfg.seed);
  std::size_t submitted = 0;
  std::vector<std::int64_t> steps(opt.workers(), 0);

  auto can_start = [&](double now) {
    if (cfg.budget.evaluations && submitted >= *cfg.budget.evaluations) return false;
    if (cfg.budget.seconds && now >= *cfg.budget.seconds) return false;
    return true;
  };
  auto start = [&](int w, double now) {
    Proposal p = opt.ask(w);
    Trial t;
    t.agent_rank = w;
    t.local_step = steps[static_cast<std::size_t>(w)]++;
    t.t_submit = now;
    t.kappa_used = p.kappa;
    t.outcome = evaluate_safely(func, p.config);
    t.config = std::move(p.config);
    t.t_complete = now + cfg.latency.draw(rng);
    ++submitted;
    queue.push({t.t_complete, w, std::move(t)});
  };

  for (std::size_t w = 0; w < opt.workers(); ++w)
    if (can_start(0.0)) start(static_cast<int>(w), 0.0);
  while (!queue.empty()) {
    InFlight ev = queue.top();
    queue.pop();
    opt.tell(ev.worker, ev.trial);
    if (can_start(ev.t_complete)) start(ev.worker, ev.t_complete);
  }
  return opt.archive()->snapshot();
}

/// Runs W workers on real threads until the budget is exhausted. Timestamps
/// are seconds since the start of the run.
inline std::vector<Trial> run_threads(AsyncOptimizer& opt, const BlackBox& func, RunBudget budget) {
  if (budget.unlimited()) throw ConfigError("threaded run needs an evaluation or time budget");
  BudgetGate gate(budget);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < opt.workers(); ++w) {
    threads.emplace_back([&, w] {
      const int worker = static_cast<int>(w);
      std::int64_t step = 0;
      while (gate.try_claim()) {
        Trial t;
        t.agent_rank = worker;
        t.local_step = step++;
        t.t_submit = gate.elapsed();
        Proposal p = opt.ask(worker);
        t.kappa_used = p.kappa;
        t.outcome = evaluate_safely(func, p.config);
        t.config = std::move(p.config);
        t.t_complete = gate.elapsed();
        opt.tell(worker, t);
      }
    });
  }
  for (auto& th : threads) th.join();
  return opt.archive()->snapshot();
}

}  // namespace dmobo
