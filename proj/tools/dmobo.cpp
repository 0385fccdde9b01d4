// Command-line front end: run experiments and post-process their archives.

#include <glob.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmobo/dmobo.hpp"

namespace {

std::vector<std::string> expand(const std::vector<std::string>& patterns) {
  std::vector<std::string> out;
  for (const auto& p : patterns) {
    glob_t g{};
    const int rc = ::glob(p.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw std::runtime_error("no files match '" + p + "'");
  }
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_run(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw dmobo::ConfigError("cannot open config " + config_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw dmobo::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const auto cfg = dmobo::experiment_from_json(j);
  const auto records = dmobo::run_experiment(cfg);
  std::cout << dmobo::summarize(records);
  std::cerr << "wrote " << records.size() << " run(s) to " << (cfg.output_dir / cfg.label()).string()
            << '\n';
  return 0;
}

int cmd_metrics(const std::string& archive, const std::string& ref_spec,
                const std::string& ub_spec, const std::string& out_path) {
  const auto trials = dmobo::read_archive_jsonl(archive, nullptr);
  std::optional<dmobo::ObjectiveVector> ub;
  if (!ub_spec.empty()) {
    ub = dmobo::ObjectiveVector{};
    std::stringstream ss(ub_spec);
    std::string tok;
    while (std::getline(ss, tok, ','))
      ub->push_back(tok == "inf" || tok.empty() ? std::numeric_limits<double>::infinity() : std::stod(tok));
  }
  const auto rule = dmobo::reference_from_string(ref_spec);
  const auto ref = dmobo::resolve_reference(rule, trials, ub);
  auto r = dmobo::compute_record(trials, ref, ub, {});
  r.method = "archive";
  r.task = std::filesystem::path(archive).stem().string();
  std::ostringstream out;
  out << "eval,time,hvi\n";
  for (std::size_t i = 0; i < r.hvi.size(); ++i)
    out << (i + 1) << ',' << dmobo::format_double(r.times[i]) << ','
        << dmobo::format_double(r.hvi[i]) << '\n';
  emit(out.str(), out_path);
  std::cerr << "completed=" << r.completed << " failed=" << r.failed << " valid=" << r.valid
            << " final_hvi=" << dmobo::format_double(r.final_hvi)
            << " auc=" << dmobo::format_double(r.auc) << '\n';
  return 0;
}

int cmd_rank(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<dmobo::CurveEntry> curves;
  for (const auto& f : expand(inputs)) {
    auto part = dmobo::read_curve_csv(f);
    curves.insert(curves.end(), part.begin(), part.end());
  }
  emit(dmobo::ranking_to_csv(dmobo::average_ranking(curves)), out_path);
  return 0;
}

int cmd_summarize(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<dmobo::RunRecord> records;
  for (const auto& f : expand(inputs)) records.push_back(dmobo::load_record(f));
  emit(dmobo::summarize(records), out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-objective Bayesian optimization experiments"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config, "Experiment config (JSON)")->required();

  std::string archive, ref = "max", ub, out;
  auto* metrics = app.add_subcommand("metrics", "HVI curve and counts of one archive");
  metrics->add_option("--archive", archive, "Trial archive (JSON lines)")->required();
  metrics->add_option("--ref", ref, "Reference: max | bound | comma-separated point");
  metrics->add_option("--ub", ub, "Upper bounds, comma-separated, 'inf' for none");
  metrics->add_option("--out", out, "Output CSV (default stdout)");

  std::vector<std::string> inputs;
  auto* rank = app.add_subcommand("rank", "Average ranking over curve CSVs");
  rank->add_option("--inputs", inputs, "Glob(s) of *.curve.csv files")->required();
  rank->add_option("--out", out, "Output CSV (default stdout)");

  auto* summ = app.add_subcommand("summarize", "Summary table over run records");
  summ->add_option("--inputs", inputs, "Glob(s) of *.record.json files")->required();
  summ->add_option("--out", out, "Output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config);
    if (*metrics) return cmd_metrics(archive, ref, ub, out);
    if (*rank) return cmd_rank(inputs, out);
    if (*summ) return cmd_summarize(inputs, out);
  } catch (const dmobo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
