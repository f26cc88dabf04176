#include "dice/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "dice/errors.hpp"
#include "dice/rng.hpp"

namespace dice {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string metrics_header(int K) {
  std::string h =
      "iteration,env_steps,seed,best_return,diversity_mean,entropy,"
      "ratio_mean,ratio_max,grad_cosine,clip_fraction,kl,value_loss";
  for (int k = 0; k < K; ++k) h += ",return_" + std::to_string(k);
  return h;
}

std::string metrics_row(const IterationMetrics& m, std::uint64_t seed) {
  std::string r;
  r += std::to_string(m.iteration);
  r += ',' + std::to_string(m.env_steps);
  r += ',' + std::to_string(seed);
  r += ',' + format_double(m.best_return);
  r += ',' + format_double(m.diversity_mean);
  r += ',' + format_double(m.entropy);
  r += ',' + format_double(m.ratio_mean);
  r += ',' + format_double(m.ratio_max);
  r += ',' + format_double(m.grad_cosine);
  r += ',' + format_double(m.clip_fraction);
  r += ',' + format_double(m.kl);
  r += ',' + format_double(m.value_loss);
  for (double v : m.agent_return_mean) r += ',' + format_double(v);
  return r;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  RunResult res;
  res.variant = cfg.label;
  res.seed = seed;

  fs::create_directories(cfg.out_dir);
  res.metrics_path =
      cfg.out_dir + "/" + cfg.label + "_seed" + std::to_string(seed) + ".csv";
  std::ofstream out(res.metrics_path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + res.metrics_path);

  const auto env = cfg.make_env();
  const int K = cfg.trainer == "onpolicy" ? cfg.onpolicy.K : cfg.offpolicy.K;
  out << metrics_header(K) << '\n' << std::flush;

  res.status = "completed";
  try {
    if (cfg.trainer == "onpolicy") {
      OnPolicyTrainer trainer(cfg.onpolicy, *env, seed);
      while (trainer.env_steps() < cfg.max_env_steps) {
        const IterationMetrics m = trainer.train_iteration();
        out << metrics_row(m, seed) << '\n' << std::flush;
        res.iterations = m.iteration + 1;
        res.env_steps = m.env_steps;
      }
    } else {
      OffPolicyTrainer trainer(cfg.offpolicy, *env, seed);
      while (trainer.env_steps() < cfg.max_env_steps) {
        const IterationMetrics m = trainer.train_iteration();
        out << metrics_row(m, seed) << '\n' << std::flush;
        res.iterations = m.iteration + 1;
        res.env_steps = m.env_steps;
      }
    }
  } catch (const TrainAbort& e) {
    res.status = "aborted: " + e.reason + " (iteration " +
                 std::to_string(e.iteration) + ")";
  }
  return res;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  std::vector<RunResult> runs;
  for (std::uint64_t seed : cfg.seeds) runs.push_back(run_single(cfg, seed));
  write_manifest(cfg.out_dir, {cfg}, runs);
  return runs;
}

std::vector<RunResult> sweep_team_size(const ExperimentConfig& base,
                                       const std::vector<int>& k_list) {
  if (k_list.empty()) throw ConfigError("sweep: empty K list");
  std::vector<ExperimentConfig> cfgs;
  std::vector<RunResult> runs;
  for (int k : k_list) {
    if (k < 1) throw ConfigError("sweep: K must be >= 1");
    ExperimentConfig cfg = base;
    if (cfg.trainer == "onpolicy") {
      cfg.onpolicy.K = k;
    } else {
      cfg.offpolicy.K = k;
    }
    cfg.label = "k" + std::to_string(k);
    cfgs.push_back(cfg);
    for (std::uint64_t seed : cfg.seeds) runs.push_back(run_single(cfg, seed));
  }
  write_manifest(base.out_dir, cfgs, runs);
  return runs;
}

std::vector<ExperimentConfig> ablation_variants(const ExperimentConfig& base) {
  if (base.trainer != "onpolicy")
    throw ConfigError("ablate: onpolicy trainer required");
  std::vector<ExperimentConfig> out;
  auto add = [&](const char* label, auto mutate) {
    ExperimentConfig cfg = base;
    cfg.label = label;
    mutate(cfg.onpolicy);
    out.push_back(std::move(cfg));
  };
  add("full", [](OnPolicyConfig&) {});
  add("wo_ce", [](OnPolicyConfig& c) { c.use_ce = false; });
  add("wo_dr", [](OnPolicyConfig& c) { c.use_dr = false; });
  add("dvn", [](OnPolicyConfig& c) { c.use_dvn = true; });
  add("na", [](OnPolicyConfig& c) { c.use_na = true; });
  add("wo_tsc", [](OnPolicyConfig& c) { c.use_tsc = false; });
  add("wo_du", [](OnPolicyConfig& c) { c.use_du = false; });
  return out;
}

std::vector<RunResult> ablation_matrix(const ExperimentConfig& base) {
  const std::vector<ExperimentConfig> cfgs = ablation_variants(base);
  std::vector<RunResult> runs;
  for (const ExperimentConfig& cfg : cfgs)
    for (std::uint64_t seed : cfg.seeds) runs.push_back(run_single(cfg, seed));
  write_manifest(base.out_dir, cfgs, runs);
  return runs;
}

std::vector<SummaryRow> summarize_dir(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw ConfigError("summarize: not a directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv" && e.path().filename() != "summary.csv")
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ConfigError("summarize: no metrics files in " + dir);

  std::map<std::string, std::vector<double>> finals;
  for (const fs::path& p : files) {
    std::ifstream in(p);
    std::string line, last;
    if (!std::getline(in, line)) continue;  // header
    const std::vector<std::string> header = split_csv(line);
    const auto it = std::find(header.begin(), header.end(), "best_return");
    if (it == header.end())
      throw ConfigError("summarize: no best_return column in " + p.string());
    const std::size_t col = it - header.begin();
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    if (last.empty()) continue;  // run aborted before its first row
    const std::vector<std::string> cells = split_csv(last);
    if (cells.size() <= col) continue;

    std::string stem = p.stem().string();
    const std::size_t pos = stem.rfind("_seed");
    const std::string variant =
        pos == std::string::npos ? stem : stem.substr(0, pos);
    finals[variant].push_back(std::stod(cells[col]));
  }

  std::vector<SummaryRow> rows;
  for (const auto& [variant, vals] : finals) {
    SummaryRow r;
    r.variant = variant;
    r.runs = static_cast<int>(vals.size());
    for (double v : vals) r.mean += v;
    r.mean /= vals.size();
    for (double v : vals) r.stddev += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(r.stddev / vals.size());
    rows.push_back(r);
  }
  return rows;
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::size_t w = 7;
  for (const auto& r : rows) w = std::max(w, r.variant.size());
  std::ostringstream os;
  os << std::left;
  os.width(w);
  os << "variant";
  os << "  runs  best_return (mean +- std)\n";
  for (const auto& r : rows) {
    os.width(w);
    os << r.variant;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "  %4d  %.4f +- %.4f", r.runs, r.mean,
                  r.stddev);
    os << buf << '\n';
  }
  return os.str();
}

std::string summarize(const std::string& dir) {
  const std::vector<SummaryRow> rows = summarize_dir(dir);
  std::ofstream out(dir + "/summary.csv", std::ios::trunc);
  out << "variant,runs,best_return_mean,best_return_std\n";
  for (const auto& r : rows)
    out << r.variant << ',' << r.runs << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << '\n';
  return summary_table(rows);
}

void write_manifest(const std::string& out_dir,
                    const std::vector<ExperimentConfig>& configs,
                    const std::vector<RunResult>& runs) {
  nlohmann::json experiments = nlohmann::json::array();
  for (const ExperimentConfig& cfg : configs) {
    const nlohmann::json resolved = cfg.resolved();
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a(resolved.dump())));
    experiments.push_back({{"label", cfg.label},
                           {"config", resolved},
                           {"config_hash", hash}});
  }
  nlohmann::json jruns = nlohmann::json::array();
  for (const RunResult& r : runs) {
    jruns.push_back({{"variant", r.variant},
                     {"seed", r.seed},
                     {"metrics", r.metrics_path},
                     {"status", r.status},
                     {"iterations", r.iterations},
                     {"env_steps", r.env_steps}});
  }
  fs::create_directories(out_dir);
  std::ofstream out(out_dir + "/manifest.json", std::ios::trunc);
  out << nlohmann::json{{"schema_version", kConfigSchemaVersion},
                        {"experiments", experiments},
                        {"runs", jruns}}
             .dump(2)
      << '\n';
}

}  // namespace dice
