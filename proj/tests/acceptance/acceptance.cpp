// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion 4   run one criterion

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmobo/dmobo.hpp"
#include "../support/nsga_check.hpp"
#include "../support/oracles.hpp"

using namespace dmobo;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  const double n = static_cast<double>(v.size());
  for (double x : v) r.mean += x / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return r;
}

// One-sided sign test: P(Binomial(n, 1/2) >= wins), ties dropped.
double sign_test_p(const std::vector<double>& a, const std::vector<double>& b) {
  int wins = 0, n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    ++n;
    wins += a[i] > b[i] ? 1 : 0;
  }
  double p = 0.0;
  for (int k = wins; k <= n; ++k) p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) *
                                       std::pow(0.5, n);
  return n == 0 ? 1.0 : p;
}

ObjectiveVector pooled_max(const std::vector<std::vector<Trial>>& runs) {
  ObjectiveVector ref;
  for (const auto& run : runs)
    for (const auto& y : finite_objectives(run)) {
      if (ref.empty()) ref.assign(y.size(), -INFINITY);
      for (std::size_t i = 0; i < y.size(); ++i) ref[i] = std::max(ref[i], y[i]);
    }
  return ref;
}

double final_hvi(const std::vector<Trial>& trials, const ObjectiveVector& ref) {
  const auto s = hvi_curve(trials, ref);
  return s.empty() ? 0.0 : s.back();
}

ExperimentConfig single_agent(const std::string& problem, std::size_t n, std::size_t m, std::size_t evals) {
  ExperimentConfig c;
  c.problem.name = problem;
  c.problem.num_inputs = n;
  c.problem.num_objectives = m;
  c.optimizer.name = "d-mobo";
  c.workers = 1;
  c.budget = {.evaluations = evals, .seconds = std::nullopt};
  c.latency = LatencyModel::constant(1.0);
  return c;
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  Rng rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::size_t mc_ok = 0, sweep_ok = 0, two_d = 0;
  double worst_z = 0.0, worst_rel = 0.0;
  const std::size_t fronts = 200;
  for (std::size_t f = 0; f < fronts; ++f) {
    const std::size_t m = 2 + f % 2;
    const std::size_t n = 1 + std::uniform_int_distribution<std::size_t>(0, 29)(rng);
    FrontSet pts;
    for (std::size_t i = 0; i < n; ++i) {
      ObjectiveVector y(m);
      if (f % 4 < 2) {
        // Near a sphere so most points are mutually non-dominated.
        double norm = 0.0;
        for (auto& v : y) {
          v = std::abs(gauss(rng)) + 1e-3;
          norm += v * v;
        }
        for (auto& v : y) v = v / std::sqrt(norm) * (0.9 + 0.1 * u(rng));
      } else {
        for (auto& v : y) v = u(rng);
      }
      pts.push_back(y);
    }
    const ObjectiveVector ref(m, 1.1), lower(m, 0.0);
    const double exact = hypervolume(pts, ref);
    const auto mc = oracle::hypervolume(pts, lower, ref, 1'000'000, 7000 + f);
    const double z = mc.stderr_ > 0 ? std::abs(exact - mc.estimate) / mc.stderr_
                                    : (std::abs(exact - mc.estimate) <= 1e-12 ? 0.0 : INFINITY);
    worst_z = std::max(worst_z, z);
    mc_ok += z <= 3.0 ? 1 : 0;
    if (m == 2) {
      ++two_d;
      const double a = hypervolume_2d_sweep(pts, ref), b = hypervolume_slicing(pts, ref);
      const double rel = std::abs(a - b) / std::max(std::abs(a), 1e-300);
      worst_rel = std::max(worst_rel, rel);
      sweep_ok += rel <= 1e-12 ? 1 : 0;
    }
  }
  return {mc_ok == fronts && sweep_ok == two_d,
          fmt("%zu/%zu fronts within 3 SE of Monte Carlo (max |z| = %.2f); sweep vs slicing %zu/%zu "
              "(max rel diff %.1e)",
              mc_ok, fronts, worst_z, sweep_ok, two_d, worst_rel)};
}

Verdict criterion2() {
  Rng rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t equal = 0;
  const std::size_t matrices = 500;
  for (std::size_t k = 0; k < matrices; ++k) {
    const std::size_t n = 2 + std::uniform_int_distribution<std::size_t>(0, 58)(rng);
    const std::size_t m = 2 + k % 3;
    const bool ties = k % 2 == 0;
    ObjectiveMatrix raw;
    std::vector<oracle::Point> rows;
    for (std::size_t i = 0; i < n; ++i) {
      ObjectiveVector y(m);
      for (auto& v : y) {
        v = ties ? std::floor(u(rng) * 5.0) : u(rng);
        // Outliers spanning six orders of magnitude, both signs.
        if (u(rng) < 0.2) v *= std::pow(10.0, -3.0 + 6.0 * u(rng));
        if (u(rng) < 0.05) v = -v;
      }
      if (i > 0 && u(rng) < 0.1) y = rows[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)];
      raw.push_back(y);
      rows.push_back(y);
    }
    const auto qu = FittedTransform::fit(TransformKind::quantile_uniform, raw);
    std::vector<oracle::Point> mapped;
    for (const auto& r : rows) mapped.push_back(qu.apply(r));
    // Pareto subset of the images vs images of the raw Pareto subset.
    std::multiset<oracle::Point> lhs, rhs;
    for (auto i : oracle::pareto_indices(mapped)) lhs.insert(mapped[i]);
    for (auto i : oracle::pareto_indices(rows)) rhs.insert(qu.apply(rows[i]));
    equal += lhs == rhs ? 1 : 0;
  }
  return {equal == matrices, fmt("%zu/%zu matrices with identical Pareto sets", equal, matrices)};
}

Verdict criterion3() {
  const std::size_t reps = 10, evals = 300;
  const std::vector<std::pair<std::string, TransformKind>> methods{
      {"QU", TransformKind::quantile_uniform}, {"Id", TransformKind::identity}, {"MML", TransformKind::minmax_log}};
  const auto problem = make_problem("synthetic_hpo");
  std::vector<std::vector<std::vector<Trial>>> runs(methods.size());
  std::vector<std::vector<Trial>> pooled;
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    auto cfg = single_agent("synthetic_hpo", 8, 2, evals);
    cfg.optimizer.agent.mobo.transform = methods[mi].second;
    cfg.optimizer.agent.mobo.scalarizer.kind = ScalarizationKind::linear;
    for (std::size_t r = 0; r < reps; ++r) {
      runs[mi].push_back(execute_run(cfg, problem, 3000 + r));
      pooled.push_back(runs[mi].back());
    }
  }
  const auto ref = pooled_max(pooled);
  std::vector<std::vector<double>> hv(methods.size());
  for (std::size_t mi = 0; mi < methods.size(); ++mi)
    for (const auto& run : runs[mi]) hv[mi].push_back(final_hvi(run, ref));
  const auto qu = mean_se(hv[0]);
  bool pass = true;
  std::string detail = fmt("QU %.4g+-%.2g", qu.mean, 1.96 * qu.se);
  for (std::size_t mi = 1; mi < methods.size(); ++mi) {
    const auto o = mean_se(hv[mi]);
    const bool separated = qu.mean - 1.96 * qu.se > o.mean + 1.96 * o.se;
    const double p = sign_test_p(hv[0], hv[mi]);
    const bool ok = qu.mean > o.mean && (separated || p < 0.05);
    pass = pass && ok;
    detail += fmt("; %s %.4g+-%.2g (bands %s, sign-test p=%.3f)", methods[mi].first.c_str(), o.mean,
                  1.96 * o.se, separated ? "separate" : "overlap", p);
  }
  return {pass, detail};
}

Verdict criterion4() {
  const std::size_t reps = 10, evals = 400, tail = 100;
  const auto problem = make_problem("dtlz2", 8, 2);
  const ObjectiveVector ub{0.5, INFINITY};
  int fewer = 0;
  std::size_t vc_on = 0, vc_off = 0;
  std::vector<double> frac_on, frac_off;
  for (std::size_t r = 0; r < reps; ++r) {
    double frac[2];
    for (int penalized = 0; penalized < 2; ++penalized) {
      auto cfg = single_agent("dtlz2", 8, 2, evals);
      cfg.upper_bounds = ub;
      cfg.optimizer.penalty = penalized == 1;
      cfg.optimizer.agent.mobo.gamma = 2.0;
      const auto trials = execute_run(cfg, problem, 4000 + r);
      std::size_t over = 0, seen = 0;
      for (std::size_t i = trials.size() - tail; i < trials.size(); ++i)
        if (const auto* y = objectives_of(trials[i].outcome)) {
          ++seen;
          over += (*y)[0] > 0.5 ? 1 : 0;
        }
      frac[penalized] = seen ? static_cast<double>(over) / static_cast<double>(seen) : 1.0;
      (penalized ? vc_on : vc_off) += valid_count(trials, ub);
    }
    frac_off.push_back(frac[0]);
    frac_on.push_back(frac[1]);
    fewer += frac[1] < frac[0] ? 1 : 0;
  }
  return {fewer >= 8 && vc_on > vc_off,
          fmt("penalized tail has fewer y1 > 0.5 in %d/10 seeds (mean fraction %.3f vs %.3f); #VC %zu vs %zu",
              fewer, mean_se(frac_on).mean, mean_se(frac_off).mean, vc_on, vc_off)};
}

Verdict criterion5() {
  const std::size_t reps = 10, evals = 200;
  std::vector<CurveEntry> curves;
  for (int k : {2, 4, 5, 6, 7}) {
    const std::string name = "dtlz" + std::to_string(k);
    const auto problem = make_problem(name, 8, 3);
    std::vector<std::vector<Trial>> bo, rs;
    for (std::size_t r = 0; r < reps; ++r) {
      auto cfg = single_agent(name, 8, 3, evals);
      cfg.optimizer.agent.mobo.initial_points = 8;
      bo.push_back(execute_run(cfg, problem, 5000 + r));
      cfg.optimizer.name = "random";
      rs.push_back(execute_run(cfg, problem, 5000 + r));
    }
    std::vector<std::vector<Trial>> all = bo;
    all.insert(all.end(), rs.begin(), rs.end());
    const auto ref = pooled_max(all);
    for (std::size_t r = 0; r < reps; ++r) {
      curves.push_back({"d-mobo", name, static_cast<int>(r), hvi_curve(bo[r], ref)});
      curves.push_back({"random", name, static_cast<int>(r), hvi_curve(rs[r], ref)});
    }
  }
  const auto bands = average_ranking(curves, evals);
  const double bo = bands[0].mean.back(), rs = bands[1].mean.back();
  return {bo < rs, fmt("final mean rank d-mobo %.3f [%.3f, %.3f] vs random %.3f over %zu runs", bo,
                       bands[0].lower.back(), bands[0].upper.back(), rs, bands[0].runs)};
}

Verdict criterion6() {
  const std::size_t evals = 40;
  const std::uint64_t seed = 606;
  const auto problem = make_problem("dtlz2", 6, 2);
  AgentConfig a;
  a.seed_global = seed;
  a.mobo.initial_points = 8;

  auto archive = std::make_shared<MemoryArchive>();
  DboSwarm swarm(problem.space, 2, 1, a, archive);
  const auto trials = simulate(swarm, problem.evaluate,
                               {RunBudget{.evaluations = evals, .seconds = {}}, LatencyModel::constant(1.0), 0});
  std::string swarm_log;
  for (const auto& t : trials) swarm_log += trial_to_line(*problem.space, t);

  // Direct sequential loop with the seed protocol written out by hand.
  Rng global(seed);
  const double kappa0 = -a.kappa * std::log1p(-std::uniform_real_distribution<double>(0.0, 1.0)(global));
  const std::uint64_t local = std::uniform_int_distribution<std::uint64_t>(0, (1ULL << 63) - 1)(global);
  MoboOptimizer opt(problem.space, 2, a.mobo, Rng(local));
  std::string direct_log;
  for (std::size_t t = 0; t < evals; ++t) {
    Trial tr;
    tr.local_step = static_cast<std::int64_t>(t);
    tr.kappa_used = kappa0 * std::exp(-a.decay_rate * static_cast<double>(t % 25));
    tr.config = opt.suggest(*tr.kappa_used);
    tr.outcome = evaluate_safely(problem.evaluate, tr.config);
    tr.t_submit = static_cast<double>(t);
    tr.t_complete = static_cast<double>(t) + 1.0;
    direct_log += trial_to_line(*problem.space, tr);
    opt.observe(std::vector<Configuration>{tr.config}, std::vector<Outcome>{tr.outcome});
  }
  return {swarm_log == direct_log,
          fmt("%zu trials, %zu vs %zu archive bytes, %s", trials.size(), swarm_log.size(), direct_log.size(),
              swarm_log == direct_log ? "byte-identical" : "different")};
}

Verdict criterion7() {
  const std::size_t reps = 10;
  const double horizon = 100.0;
  const ObjectiveVector ref{2.0, 2.0};
  const auto problem = make_problem("dtlz2", 8, 2);
  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(horizon * i / 400.0);
  int ok = 0;
  std::string worst;
  std::vector<double> ratios;
  for (std::size_t r = 0; r < reps; ++r) {
    std::vector<double> curve[2];
    for (int w : {0, 1}) {
      auto cfg = single_agent("dtlz2", 8, 2, 0);
      cfg.budget = {.evaluations = std::nullopt, .seconds = horizon};
      cfg.workers = w ? 16 : 1;
      cfg.latency = LatencyModel::uniform(0.5, 1.5);
      cfg.optimizer.agent.mobo.forest.n_trees = 30;
      cfg.optimizer.agent.mobo.pool_size = 1024;
      curve[w] = hvi_time_curve(execute_run(cfg, problem, 7000 + r), ref, grid);
    }
    const double target = curve[0].back();
    double reach = INFINITY;
    for (std::size_t g = 0; g < grid.size(); ++g)
      if (curve[1][g] >= target) {
        reach = grid[g];
        break;
      }
    ratios.push_back(reach / horizon);
    const bool pass = reach <= horizon / 4.0 && auc(curve[1]) >= auc(curve[0]);
    ok += pass ? 1 : 0;
  }
  std::ostringstream rs;
  for (double v : ratios) rs << (rs.tellp() ? " " : "") << fmt("%.3f", v);
  return {ok >= 8, fmt("%d/10 seeds pass; time-to-target / horizon per seed: %s", ok, rs.str().c_str())};
}

Verdict criterion8() {
  Rng rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto problem = make_problem("dtlz2", 4, 2);
  std::size_t ok = 0, deliveries = 0;
  const std::size_t schedules = 100;
  std::string first_error;
  for (std::size_t s = 0; s < schedules; ++s) {
    const int agents = std::uniform_int_distribution<int>(2, 6)(rng);
    AgentConfig a;
    a.seed_global = rng();
    a.mobo.initial_points = 3;
    a.mobo.pool_size = 16;
    a.mobo.forest.n_trees = 4;
    auto archive = std::make_shared<MemoryArchive>();
    DboSwarm swarm(problem.space, 2, agents, a, archive);
    std::vector<std::map<std::pair<int, std::int64_t>, int>> seen(static_cast<std::size_t>(agents));
    for (int r = 0; r < agents; ++r)
      swarm.agent(r).set_observe_hook([&seen](int rank, const std::vector<Trial>& batch) {
        for (const auto& t : batch) ++seen[static_cast<std::size_t>(rank)][{t.agent_rank, t.local_step}];
      });
    const double kind = u(rng);
    const LatencyModel lat = kind < 0.33   ? LatencyModel::exponential(0.1 + 2.0 * u(rng))
                             : kind < 0.66 ? LatencyModel::uniform(0.1, 0.1 + 3.0 * u(rng))
                                           : LatencyModel::constant(1.0);
    const std::size_t budget = std::uniform_int_distribution<std::size_t>(agents, 40)(rng);
    const auto trials = simulate(swarm, problem.evaluate, {RunBudget{.evaluations = budget, .seconds = {}}, lat, rng()});
    for (int r = 0; r < agents; ++r) swarm.agent(r).sync();

    bool good = trials.size() == budget;
    for (std::size_t r = 0; r < seen.size() && good; ++r) {
      good = seen[r].size() == trials.size();
      for (const auto& t : trials) {
        auto it = seen[r].find({t.agent_rank, t.local_step});
        good = good && it != seen[r].end() && it->second == 1;
      }
      for (const auto& [key, count] : seen[r]) deliveries += static_cast<std::size_t>(count);
    }
    if (!good && first_error.empty()) first_error = fmt(" (first failure: schedule %zu)", s);
    ok += good ? 1 : 0;
  }
  return {ok == schedules,
          fmt("%zu/%zu schedules deliver every trial exactly once to every agent; %zu deliveries checked%s", ok,
              schedules, deliveries, first_error.c_str())};
}

Verdict criterion9() {
  Rng rng(909);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t sort_ok = 0;
  const std::size_t instances = 200;
  for (std::size_t k = 0; k < instances; ++k) {
    const std::size_t n = 1 + std::uniform_int_distribution<std::size_t>(0, 79)(rng);
    const std::size_t m = 2 + k % 3;
    const bool ties = k % 2 == 0;
    std::vector<ObjectiveVector> pts;
    for (std::size_t i = 0; i < n; ++i) {
      ObjectiveVector y(m);
      for (auto& v : y) v = ties ? std::floor(u(rng) * 4.0) : u(rng);
      pts.push_back(y);
    }
    auto fast = fast_nondominated_sort(pts);
    auto peel = oracle::peel_fronts(pts);
    for (auto& f : fast) std::sort(f.begin(), f.end());
    for (auto& f : peel) std::sort(f.begin(), f.end());
    sort_ok += fast == peel ? 1 : 0;
  }

  const auto problem = make_problem("dtlz2", 4, 2);
  NsgaConfig cfg;
  cfg.population_size = 12;
  cfg.seed = 99;
  Nsga2 nsga(problem.space, cfg);
  const std::size_t steps = 10'000;
  std::size_t step_ok = 0;
  std::string first_error;
  for (std::size_t s = 0; s < steps; ++s) {
    auto x = nsga.ask();
    Outcome y = problem.evaluate(x);
    // Coarse grid creates ties; some evaluations fail.
    if (auto* v = std::get_if<ObjectiveVector>(&y))
      for (auto& c : *v) c = std::round(c * 8.0) / 8.0;
    if (u(rng) < 0.05) y = FailureMarker{"injected"};
    const auto before = nsga.pool();
    nsga.tell(x, y);
    const auto why = oracle::check_truncation(before, x, y, nsga.pool(), cfg.population_size);
    if (why.empty()) {
      ++step_ok;
    } else if (first_error.empty()) {
      first_error = fmt(" (step %zu: %s)", s, why.c_str());
    }
  }
  return {sort_ok == instances && step_ok == steps,
          fmt("sort matches peel-off on %zu/%zu instances; truncation invariants hold on %zu/%zu steps%s", sort_ok,
              instances, step_ok, steps, first_error.c_str())};
}

Verdict criterion10() {
  const auto out = std::filesystem::temp_directory_path() / ("dmobo_acceptance_c10_" + std::to_string(::getpid()));
  std::filesystem::remove_all(out);
  std::string detail;
  bool pass = true;
  for (auto [name, ref] : {std::pair{"dtlz1", 0.6}, std::pair{"dtlz3", 1.1}}) {
    for (std::string opt : {"d-mobo", "random", "nsga2"}) {
      auto cfg = single_agent(name, 8, 3, 200);
      cfg.optimizer.name = opt;
      cfg.optimizer.nsga.population_size = 20;
      cfg.workers = opt == "d-mobo" ? 2 : 1;
      cfg.hvi_reference.kind = ReferenceRule::Kind::explicit_point;
      cfg.hvi_reference.point.assign(3, ref);
      cfg.output_dir = out / name;
      try {
        const auto records = run_experiment(cfg);
        const auto& r = records.at(0);
        const bool ok = r.completed + r.failed == 200 && std::isfinite(r.final_hvi) &&
                        std::filesystem::exists(out / name / opt / "summary.csv");
        pass = pass && ok;
        detail += fmt("%s%s/%s HVI %.3g", detail.empty() ? "" : "; ", name, opt.c_str(), r.final_hvi);
      } catch (const std::exception& e) {
        pass = false;
        detail += fmt("%s%s/%s raised: %s", detail.empty() ? "" : "; ", name, opt.c_str(), e.what());
      }
    }
  }
  std::filesystem::remove_all(out);
  return {pass, "all runs completed and reported: " + detail};
}

const std::map<int, std::function<Verdict()>> kCriteria{
    {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},  {5, criterion5},
    {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}, {10, criterion10}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  for (const auto& [id, run] : kCriteria) {
    if (only && id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("raised: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
