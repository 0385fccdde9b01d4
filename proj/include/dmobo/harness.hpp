#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "archive.hpp"
#include "baselines.hpp"
#include "dbo.hpp"
#include "errors.hpp"
#include "indicators.hpp"
#include "problems.hpp"
#include "scheduler.hpp"

namespace dmobo {

// Shortest round-trip text for a double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Configuration

struct ProblemSpec {
  std::string name = "dtlz2";
  std::size_t num_inputs = 8;
  std::size_t num_objectives = 3;
  std::uint64_t seed = 0;

  ProblemInstance build() const { return make_problem(name, num_inputs, num_objectives, seed); }
};

struct ReferenceRule {
  enum class Kind { explicit_point, max_of_observations, bound_clipped };
  Kind kind = Kind::max_of_observations;
  ObjectiveVector point;  // explicit_point only
};

struct OptimizerSpec {
  std::string name = "d-mobo";  // d-mobo | random | nsga2
  std::string label;            // defaults to name
  AgentConfig agent{};          // d-mobo
  bool penalty = true;          // d-mobo: penalize bound violations when upper bounds are set
  NsgaConfig nsga{};
};

struct ExperimentConfig {
  ProblemSpec problem;
  OptimizerSpec optimizer;
  std::size_t workers = 1;
  std::size_t repetitions = 1;
  RunBudget budget{.evaluations = 100, .seconds = std::nullopt};
  std::string mode = "simulated";  // simulated | threads
  LatencyModel latency{};
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "results";
  ReferenceRule hvi_reference{};
  std::optional<ObjectiveVector> upper_bounds;  // +inf for unbounded objectives
  std::size_t pf_samples = 500;                 // targets for GD+ when the front is known

  std::string label() const {
    return optimizer.label.empty() ? optimizer.name : optimizer.label;
  }

  void validate() const {
    if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (mode != "simulated" && mode != "threads") throw ConfigError("mode must be simulated or threads");
    if (optimizer.name != "d-mobo" && optimizer.name != "random" && optimizer.name != "nsga2")
      throw ConfigError("unknown optimizer '" + optimizer.name + "'");
    if (budget.unlimited()) throw ConfigError("budget needs evaluations or seconds");
    auto problem_instance = problem.build();  // throws on unknown problem
    if (upper_bounds && upper_bounds->size() != problem_instance.num_objectives)
      throw ConfigError("upper_bounds must have one entry per objective");
    if (hvi_reference.kind == ReferenceRule::Kind::explicit_point &&
        hvi_reference.point.size() != problem_instance.num_objectives)
      throw ConfigError("reference point must have one entry per objective");
    if (optimizer.name == "nsga2") optimizer.nsga.validate();
    if (optimizer.name == "d-mobo") {
      AgentConfig a = optimizer.agent;
      a.num_agents = static_cast<int>(workers);
      a.validate();
      a.mobo.validate(problem_instance.num_objectives);
    }
  }
};

inline std::optional<ObjectiveVector> bounds_from_json(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  ObjectiveVector ub;
  for (const auto& v : j) ub.push_back(v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>());
  return ub;
}

inline nlohmann::json bounds_to_json(const ObjectiveVector& ub) {
  nlohmann::json j = nlohmann::json::array();
  for (double v : ub) {
    if (std::isinf(v)) {
      j.push_back(nullptr);
    } else {
      j.push_back(v);
    }
  }
  return j;
}

inline ReferenceRule reference_from_string(const std::string& s) {
  ReferenceRule r;
  if (s == "max" || s == "componentwise-max-of-observations") {
    r.kind = ReferenceRule::Kind::max_of_observations;
  } else if (s == "bound" || s == "bound-clipped") {
    r.kind = ReferenceRule::Kind::bound_clipped;
  } else {
    r.kind = ReferenceRule::Kind::explicit_point;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        r.point.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw ConfigError("bad reference specification '" + s + "'");
      }
    }
    if (r.point.empty()) throw ConfigError("bad reference specification '" + s + "'");
  }
  return r;
}

/// Parses the JSON experiment description (see README for the schema).
inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    const auto& p = j.at("problem");
    if (p.is_string()) {
      c.problem.name = p.get<std::string>();
    } else {
      c.problem.name = p.at("name").get<std::string>();
      c.problem.num_inputs = p.value("num_inputs", c.problem.num_inputs);
      c.problem.num_objectives = p.value("num_objectives", c.problem.num_objectives);
      c.problem.seed = p.value("seed", c.problem.seed);
    }
    if (c.problem.name == "synthetic_hpo") c.problem.num_objectives = 2;

    const auto& o = j.at("optimizer");
    if (o.is_string()) {
      c.optimizer.name = o.get<std::string>();
    } else {
      c.optimizer.name = o.at("name").get<std::string>();
      c.optimizer.label = o.value("label", std::string());
      auto& a = c.optimizer.agent;
      a.kappa = o.value("kappa", a.kappa);
      a.decay_rate = o.value("decay_rate", a.decay_rate);
      a.period = o.value("period", a.period);
      auto& m = a.mobo;
      m.initial_points = o.value("initial_points", m.initial_points);
      m.gamma = o.value("gamma", m.gamma);
      m.pool_size = o.value("pool_size", m.pool_size);
      if (o.contains("transform")) m.transform = transform_kind_from_string(o.at("transform").get<std::string>());
      if (o.contains("scalarization"))
        m.scalarizer.kind = scalarization_kind_from_string(o.at("scalarization").get<std::string>());
      m.scalarizer.theta = o.value("pbi_theta", m.scalarizer.theta);
      m.scalarizer.signed_pbi = o.value("pbi_signed", m.scalarizer.signed_pbi);
      if (o.contains("forest")) {
        const auto& f = o.at("forest");
        m.forest.n_trees = f.value("n_trees", m.forest.n_trees);
        m.forest.min_samples_split = f.value("min_samples_split", m.forest.min_samples_split);
        m.forest.max_features = f.value("max_features", m.forest.max_features);
        m.forest.bootstrap = f.value("bootstrap", m.forest.bootstrap);
      }
      c.optimizer.penalty = o.value("penalty", c.optimizer.penalty);
      auto& n = c.optimizer.nsga;
      n.population_size = o.value("population_size", n.population_size);
      n.crossover_prob = o.value("crossover_prob", n.crossover_prob);
      if (o.contains("mutation_prob")) n.mutation_prob = o.at("mutation_prob").get<double>();
      n.eta_crossover = o.value("eta_crossover", n.eta_crossover);
      n.eta_mutation = o.value("eta_mutation", n.eta_mutation);
    }

    c.workers = j.value("workers", c.workers);
    c.repetitions = j.value("repetitions", c.repetitions);
    if (j.contains("budget")) {
      const auto& b = j.at("budget");
      c.budget = {};
      if (b.is_number()) {
        c.budget.evaluations = b.get<std::size_t>();
      } else {
        if (b.contains("evaluations")) c.budget.evaluations = b.at("evaluations").get<std::size_t>();
        if (b.contains("seconds")) c.budget.seconds = b.at("seconds").get<double>();
      }
    }
    c.mode = j.value("mode", c.mode);
    if (j.contains("latency")) {
      const auto& l = j.at("latency");
      const auto kind = l.value("kind", std::string("constant"));
      if (kind == "constant") {
        c.latency = LatencyModel::constant(l.value("value", 1.0));
      } else if (kind == "uniform") {
        c.latency = LatencyModel::uniform(l.at("low").get<double>(), l.at("high").get<double>());
      } else if (kind == "exponential") {
        c.latency = LatencyModel::exponential(l.value("mean", 1.0));
      } else {
        throw ConfigError("unknown latency kind '" + kind + "'");
      }
    }
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir.string());
    if (const char* env = std::getenv("DMOBO_OUTPUT_DIR"); env && *env) c.output_dir = env;
    if (j.contains("hvi_reference")) {
      const auto& r = j.at("hvi_reference");
      if (r.is_string()) {
        c.hvi_reference = reference_from_string(r.get<std::string>());
      } else {
        c.hvi_reference.kind = ReferenceRule::Kind::explicit_point;
        c.hvi_reference.point = r.get<ObjectiveVector>();
      }
    }
    if (j.contains("upper_bounds")) c.upper_bounds = bounds_from_json(j.at("upper_bounds"));
    c.pf_samples = j.value("pf_samples", c.pf_samples);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed experiment config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Metrics

inline std::vector<ObjectiveVector> finite_objectives(const std::vector<Trial>& trials) {
  std::vector<ObjectiveVector> out;
  for (const auto& t : trials)
    if (auto* y = objectives_of(t.outcome)) out.push_back(*y);
  return out;
}

/// Resolves the HVI reference point once for a set of trials; empty when no
/// finite trial exists and the rule depends on observations.
inline ObjectiveVector resolve_reference(const ReferenceRule& rule, const std::vector<Trial>& trials,
                                         const std::optional<ObjectiveVector>& upper_bounds) {
  if (rule.kind == ReferenceRule::Kind::explicit_point) return rule.point;
  const auto ys = finite_objectives(trials);
  if (ys.empty()) return {};
  ObjectiveVector ref(ys.front().size(), -std::numeric_limits<double>::infinity());
  for (const auto& y : ys)
    for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = std::max(ref[i], y[i]);
  if (rule.kind == ReferenceRule::Kind::bound_clipped && upper_bounds) {
    for (std::size_t i = 0; i < ref.size(); ++i)
      if (std::isfinite((*upper_bounds)[i])) ref[i] = (*upper_bounds)[i];
  }
  return ref;
}

/// HVI of the Pareto front of the first k finite trials, for every prefix k
/// of the finite trials. Points beyond the reference are clipped.
inline std::vector<double> hvi_curve(const std::vector<Trial>& trials, const ObjectiveVector& ref) {
  std::vector<double> series;
  if (ref.empty()) return series;
  FrontSet front;
  double current = 0.0;
  for (const auto& t : trials) {
    const auto* y = objectives_of(t.outcome);
    if (!y) continue;
    bool inside = true;
    for (std::size_t i = 0; i < ref.size(); ++i) inside = inside && (*y)[i] <= ref[i];
    bool improves = inside;
    if (inside) {
      for (const auto& f : front) {
        bool weak = true;
        for (std::size_t i = 0; i < ref.size(); ++i) weak = weak && f[i] <= (*y)[i];
        if (weak) {
          improves = false;
          break;
        }
      }
    }
    if (improves) {
      std::erase_if(front, [&](const ObjectiveVector& f) { return dominates(*y, f); });
      front.push_back(*y);
      current = hypervolume(front, ref);
    }
    series.push_back(current);
  }
  return series;
}

/// HVI of all trials completed by each grid time.
inline std::vector<double> hvi_time_curve(const std::vector<Trial>& trials, const ObjectiveVector& ref,
                                          std::span<const double> grid) {
  std::vector<Trial> ordered;
  for (const auto& t : trials)
    if (!is_failure(t.outcome)) ordered.push_back(t);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Trial& a, const Trial& b) { return a.t_complete < b.t_complete; });
  const auto by_count = hvi_curve(ordered, ref);
  std::vector<double> out;
  out.reserve(grid.size());
  std::size_t k = 0;
  for (double g : grid) {
    while (k < ordered.size() && ordered[k].t_complete <= g) ++k;
    out.push_back(k == 0 || by_count.empty() ? 0.0 : by_count[k - 1]);
  }
  return out;
}

/// GD+ of the running Pareto front against fixed targets, per finite trial.
inline std::vector<double> gd_plus_curve(const std::vector<Trial>& trials, const FrontSet& targets) {
  std::vector<double> series;
  if (targets.empty()) return series;
  FrontSet front;
  double current = 0.0;
  for (const auto& t : trials) {
    const auto* y = objectives_of(t.outcome);
    if (!y) continue;
    bool dominated = false;
    for (const auto& f : front) {
      if (dominates(f, *y)) {
        dominated = true;
        break;
      }
    }
    if (!dominated || front.empty()) {
      std::erase_if(front, [&](const ObjectiveVector& f) { return dominates(*y, f); });
      front.push_back(*y);
      current = gd_plus(front, targets);
    }
    series.push_back(current);
  }
  return series;
}

/// Trapezoidal area under a series over the normalized index [0, 1]. When
/// `budget` exceeds the series length the last value is held.
inline double auc(const std::vector<double>& series, std::size_t budget = 0) {
  if (series.empty()) throw std::invalid_argument("AUC of an empty series");
  const std::size_t n = std::max(series.size(), budget);
  if (n == 1) return series.front();
  auto at = [&](std::size_t i) { return i < series.size() ? series[i] : series.back(); };
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) area += 0.5 * (at(i) + at(i + 1));
  return area / static_cast<double>(n - 1);
}

inline std::size_t valid_count(const std::vector<Trial>& trials,
                               const std::optional<ObjectiveVector>& upper_bounds) {
  std::size_t n = 0;
  for (const auto& t : trials) {
    const auto* y = objectives_of(t.outcome);
    if (!y) continue;
    bool ok = true;
    if (upper_bounds)
      for (std::size_t i = 0; i < y->size(); ++i) ok = ok && (*y)[i] < (*upper_bounds)[i];
    n += ok ? 1 : 0;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Ranking

struct CurveEntry {
  std::string method;
  std::string task;
  int rep = 0;
  std::vector<double> series;
};

struct RankBand {
  std::string method;
  std::vector<double> mean, lower, upper;  // mean rank and +-1.96 SE
  std::size_t runs = 0;
};

/// Ranks (1 = highest HVI, ties averaged) methods within each (task, rep) at
/// every grid index after forward-filling, then averages across groups.
inline std::vector<RankBand> average_ranking(const std::vector<CurveEntry>& curves,
                                             std::size_t grid = 0) {
  std::vector<std::string> methods;
  for (const auto& c : curves)
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
  if (methods.size() < 2) throw UndefinedIndicatorError("ranking needs at least two methods");
  std::sort(methods.begin(), methods.end());
  for (const auto& c : curves) grid = std::max(grid, c.series.size());
  if (grid == 0) grid = 1;

  std::map<std::pair<std::string, int>, std::map<std::string, const CurveEntry*>> groups;
  for (const auto& c : curves) {
    auto& slot = groups[{c.task, c.rep}][c.method];
    if (slot) throw StructuralError("duplicate curve for " + c.method + "/" + c.task + "/" + std::to_string(c.rep));
    slot = &c;
  }

  auto value_at = [](const CurveEntry& c, std::size_t i) {
    if (c.series.empty()) return 0.0;
    return i < c.series.size() ? c.series[i] : c.series.back();
  };

  // ranks[method][grid] -> list over groups
  std::map<std::string, std::vector<std::vector<double>>> ranks;
  for (const auto& m : methods) ranks[m].assign(grid, {});
  for (const auto& [key, members] : groups) {
    for (std::size_t g = 0; g < grid; ++g) {
      for (const auto& [m, c] : members) {
        const double v = value_at(*c, g);
        double better = 0.0, equal = 0.0;
        for (const auto& [m2, c2] : members) {
          const double v2 = value_at(*c2, g);
          if (v2 > v) better += 1.0;
          else if (v2 == v) equal += 1.0;
        }
        ranks[m][g].push_back(better + (equal + 1.0) / 2.0);
      }
    }
  }

  std::vector<RankBand> out;
  for (const auto& m : methods) {
    RankBand b;
    b.method = m;
    for (std::size_t g = 0; g < grid; ++g) {
      const auto& r = ranks[m][g];
      const double n = static_cast<double>(r.size());
      b.runs = r.size();
      double mean = n > 0 ? std::accumulate(r.begin(), r.end(), 0.0) / n : 0.0;
      double se = 0.0;
      if (r.size() > 1) {
        double ss = 0.0;
        for (double v : r) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      }
      b.mean.push_back(mean);
      b.lower.push_back(mean - 1.96 * se);
      b.upper.push_back(mean + 1.96 * se);
    }
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunRecord {
  std::string method;  // label
  std::string task;
  int rep = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::filesystem::path archive_path;
  ProblemSpec problem;
  ObjectiveVector reference;
  std::optional<ObjectiveVector> upper_bounds;
  std::vector<double> hvi;      // per finite trial
  std::vector<double> gd_plus;  // per finite trial, empty when the front is unknown
  std::vector<double> times;    // completion time per finite trial
  double auc = 0.0;
  double final_hvi = 0.0;
  std::size_t completed = 0;  // #D
  std::size_t failed = 0;     // #F
  std::size_t valid = 0;      // #VC
};

inline std::unique_ptr<AsyncOptimizer> make_optimizer(const ExperimentConfig& cfg,
                                                      const ProblemInstance& problem,
                                                      std::uint64_t seed,
                                                      std::shared_ptr<TrialArchive> archive) {
  const auto& o = cfg.optimizer;
  if (o.name == "d-mobo") {
    AgentConfig a = o.agent;
    a.seed_global = seed;
    if (cfg.upper_bounds && o.penalty) a.mobo.upper_bounds = cfg.upper_bounds;
    else a.mobo.upper_bounds.reset();
    return std::make_unique<DboSwarm>(problem.space, problem.num_objectives,
                                      static_cast<int>(cfg.workers), a, std::move(archive));
  }
  if (o.name == "random") {
    return std::make_unique<CentralOptimizer<RandomSearch>>(RandomSearch(problem.space, seed),
                                                            cfg.workers, std::move(archive));
  }
  if (o.name == "nsga2") {
    NsgaConfig n = o.nsga;
    n.seed = seed;
    return std::make_unique<CentralOptimizer<Nsga2>>(Nsga2(problem.space, n), cfg.workers,
                                                     std::move(archive));
  }
  throw ConfigError("unknown optimizer '" + o.name + "'");
}

inline std::vector<Trial> execute_run(const ExperimentConfig& cfg, const ProblemInstance& problem,
                                      std::uint64_t seed) {
  auto archive = std::make_shared<MemoryArchive>();
  auto opt = make_optimizer(cfg, problem, seed, archive);
  if (cfg.mode == "threads") return run_threads(*opt, problem.evaluate, cfg.budget);
  SimulationConfig sim{cfg.budget, cfg.latency, seed ^ 0x9e3779b97f4a7c15ULL};
  return simulate(*opt, problem.evaluate, sim);
}

inline FrontSet pf_targets(const ProblemInstance& problem, std::size_t n) {
  if (!problem.true_pf_sampler || n == 0) return {};
  Rng rng(12345);
  return problem.true_pf_sampler(n, rng);
}

/// Metrics of one archive against a resolved reference.
inline RunRecord compute_record(const std::vector<Trial>& trials, const ObjectiveVector& reference,
                                const std::optional<ObjectiveVector>& upper_bounds,
                                const FrontSet& targets) {
  RunRecord r;
  r.reference = reference;
  r.upper_bounds = upper_bounds;
  r.hvi = hvi_curve(trials, reference);
  r.gd_plus = gd_plus_curve(trials, targets);
  for (const auto& t : trials) {
    if (is_failure(t.outcome)) {
      ++r.failed;
    } else {
      ++r.completed;
      r.times.push_back(t.t_complete);
    }
  }
  r.valid = valid_count(trials, upper_bounds);
  r.final_hvi = r.hvi.empty() ? 0.0 : r.hvi.back();
  r.auc = r.hvi.empty() ? 0.0 : auc(r.hvi);
  return r;
}

inline nlohmann::ordered_json record_to_json(const RunRecord& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["task"] = r.task;
  j["rep"] = r.rep;
  j["seed"] = r.seed;
  j["workers"] = r.workers;
  j["archive"] = r.archive_path.filename().string();
  j["problem"] = {{"name", r.problem.name},
                  {"num_inputs", r.problem.num_inputs},
                  {"num_objectives", r.problem.num_objectives},
                  {"seed", r.problem.seed}};
  j["reference"] = r.reference;
  j["upper_bounds"] = r.upper_bounds ? nlohmann::ordered_json(bounds_to_json(*r.upper_bounds))
                                     : nlohmann::ordered_json(nullptr);
  j["completed"] = r.completed;
  j["failed"] = r.failed;
  j["valid"] = r.valid;
  j["final_hvi"] = r.final_hvi;
  j["auc"] = r.auc;
  return j;
}

inline void write_curve_csv(const std::filesystem::path& path, const RunRecord& r) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "method,task,rep,eval,time,hvi,gd_plus\n";
  for (std::size_t i = 0; i < r.hvi.size(); ++i) {
    out << r.method << ',' << r.task << ',' << r.rep << ',' << (i + 1) << ','
        << format_double(r.times[i]) << ',' << format_double(r.hvi[i]) << ','
        << (i < r.gd_plus.size() ? format_double(r.gd_plus[i]) : std::string()) << '\n';
  }
}

/// Summary CSV: one row per (method, workers), means over runs.
inline std::string summarize(const std::vector<RunRecord>& records) {
  std::map<std::pair<std::string, std::size_t>, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) groups[{r.method, r.workers}].push_back(&r);
  std::ostringstream out;
  out << "method,workers,runs,completed,failed,valid,final_hvi,auc\n";
  for (const auto& [key, rs] : groups) {
    const double n = static_cast<double>(rs.size());
    double d = 0, f = 0, vc = 0, hv = 0, a = 0;
    for (const auto* r : rs) {
      d += static_cast<double>(r->completed);
      f += static_cast<double>(r->failed);
      vc += static_cast<double>(r->valid);
      hv += r->final_hvi;
      a += r->auc;
    }
    out << key.first << ',' << key.second << ',' << rs.size() << ',' << format_double(d / n) << ','
        << format_double(f / n) << ',' << format_double(vc / n) << ',' << format_double(hv / n) << ','
        << format_double(a / n) << '\n';
  }
  return out.str();
}

/// Reloads a persisted run from its record file and recomputes its metrics.
inline RunRecord load_record(const std::filesystem::path& record_path) {
  std::ifstream in(record_path);
  if (!in) throw std::runtime_error("cannot open record " + record_path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("malformed record " + record_path.string() + ": " + e.what());
  }
  ProblemSpec ps;
  ps.name = j.at("problem").at("name").get<std::string>();
  ps.num_inputs = j.at("problem").at("num_inputs").get<std::size_t>();
  ps.num_objectives = j.at("problem").at("num_objectives").get<std::size_t>();
  ps.seed = j.at("problem").at("seed").get<std::uint64_t>();
  const auto problem = ps.build();
  const auto archive = record_path.parent_path() / j.at("archive").get<std::string>();
  const auto trials = read_archive_jsonl(archive, *problem.space);
  RunRecord r = compute_record(trials, j.at("reference").get<ObjectiveVector>(),
                               bounds_from_json(j.at("upper_bounds")), {});
  r.method = j.at("method").get<std::string>();
  r.task = j.at("task").get<std::string>();
  r.rep = j.at("rep").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.workers = j.at("workers").get<std::size_t>();
  r.archive_path = archive;
  r.problem = ps;
  return r;
}

/// For each repetition: seed = base + rep, run, persist the archive, compute
/// metrics. Writes <output_dir>/<label>/rep_<i>.{jsonl,record.json,curve.csv},
/// summary.csv and manifest.json.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto problem = cfg.problem.build();
  const auto targets = pf_targets(problem, cfg.pf_samples);
  const auto dir = cfg.output_dir / cfg.label();
  std::filesystem::create_directories(dir);

  std::vector<RunRecord> records;
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const std::uint64_t seed = cfg.seed + rep;
    const auto trials = execute_run(cfg, problem, seed);
    const auto stem = "rep_" + std::to_string(rep);
    const auto archive_path = dir / (stem + ".jsonl");
    write_archive_jsonl(archive_path, *problem.space, trials);

    const auto ref = resolve_reference(cfg.hvi_reference, trials, cfg.upper_bounds);
    RunRecord r = compute_record(trials, ref, cfg.upper_bounds, targets);
    r.method = cfg.label();
    r.task = problem.name;
    r.rep = static_cast<int>(rep);
    r.seed = seed;
    r.workers = cfg.workers;
    r.archive_path = archive_path;
    r.problem = cfg.problem;
    {
      std::ofstream out(dir / (stem + ".record.json"), std::ios::trunc);
      out << record_to_json(r).dump(2) << '\n';
    }
    write_curve_csv(dir / (stem + ".curve.csv"), r);
    records.push_back(std::move(r));
  }

  {
    std::ofstream out(dir / "summary.csv", std::ios::binary | std::ios::trunc);
    out << summarize(records);
  }
  nlohmann::ordered_json manifest;
  manifest["label"] = cfg.label();
  manifest["optimizer"] = cfg.optimizer.name;
  manifest["problem"] = problem.name;
  manifest["workers"] = cfg.workers;
  manifest["repetitions"] = cfg.repetitions;
  manifest["mode"] = cfg.mode;
  manifest["seed"] = cfg.seed;
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : records) runs.push_back(r.archive_path.filename().string());
  manifest["archives"] = runs;
  std::ofstream(dir / "manifest.json", std::ios::trunc) << manifest.dump(2) << '\n';
  return records;
}

// Reads curve CSVs written by run_experiment back into ranking input.
inline std::vector<CurveEntry> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curve " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::map<std::tuple<std::string, std::string, int>, CurveEntry> by_key;
  std::vector<std::tuple<std::string, std::string, int>> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() < 6) throw StructuralError("malformed curve row in " + path.string());
    auto key = std::make_tuple(f[0], f[1], std::stoi(f[2]));
    auto [it, inserted] = by_key.try_emplace(key);
    if (inserted) {
      it->second = {f[0], f[1], std::stoi(f[2]), {}};
      order.push_back(key);
    }
    it->second.series.push_back(std::stod(f[5]));
  }
  std::vector<CurveEntry> out;
  for (const auto& k : order) out.push_back(std::move(by_key[k]));
  return out;
}

inline std::string ranking_to_csv(const std::vector<RankBand>& bands) {
  std::ostringstream out;
  out << "method,eval,mean_rank,lower,upper,runs\n";
  for (const auto& b : bands)
    for (std::size_t i = 0; i < b.mean.size(); ++i)
      out << b.method << ',' << (i + 1) << ',' << format_double(b.mean[i]) << ','
          << format_double(b.lower[i]) << ',' << format_double(b.upper[i]) << ',' << b.runs << '\n';
  return out.str();
}

}  // namespace dmobo
