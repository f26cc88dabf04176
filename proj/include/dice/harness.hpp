#ifndef DICE_HARNESS_HPP_
#define DICE_HARNESS_HPP_

#include <string>
#include <vector>

#include "dice/config.hpp"

namespace dice {

struct RunResult {
  std::string variant;
  std::uint64_t seed = 0;
  std::string metrics_path;
  std::string status;  // "completed" or "aborted: <reason> (iteration N)"
  long iterations = 0;
  long env_steps = 0;
};

// Exact round-trip formatting used for every CSV float.
std::string format_double(double v);

// One (variant, seed) training run. Writes one CSV with a header row and one
// row per iteration, flushed per row so partial files stay parseable. A
// TrainAbort ends the run early and is recorded as data in the result.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed);

// All seeds of one config; writes out_dir/manifest.json.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

// Per-K runs (labels k1, k3, ...) with the team batch N held fixed, so the
// env-step budget is identical across team sizes.
std::vector<RunResult> sweep_team_size(const ExperimentConfig& base,
                                       const std::vector<int>& k_list);

// The seven ablation variants: full, wo_ce, wo_dr, dvn, na, wo_tsc, wo_du.
std::vector<ExperimentConfig> ablation_variants(const ExperimentConfig& base);
std::vector<RunResult> ablation_matrix(const ExperimentConfig& base);

struct SummaryRow {
  std::string variant;
  int runs = 0;
  double mean = 0.0;    // final best-agent return averaged over seeds
  double stddev = 0.0;  // population standard deviation over seeds
};

// Scan every *.csv metrics file in dir (summary.csv excluded).
std::vector<SummaryRow> summarize_dir(const std::string& dir);
std::string summary_table(const std::vector<SummaryRow>& rows);
// Writes dir/summary.csv and returns the aligned text table.
std::string summarize(const std::string& dir);

void write_manifest(const std::string& out_dir,
                    const std::vector<ExperimentConfig>& configs,
                    const std::vector<RunResult>& runs);

}  // namespace dice

#endif  // DICE_HARNESS_HPP_
