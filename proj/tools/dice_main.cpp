#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dice/errors.hpp"
#include "dice/harness.hpp"

namespace {

// Config file -> overrides -> validated ExperimentConfig.
dice::ExperimentConfig load_with_overrides(
    const std::string& path, const std::vector<std::string>& sets) {
  std::ifstream in(path);
  if (!in) throw dice::ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw dice::ConfigError(path + ": " + e.what());
  }
  for (const std::string& s : sets) dice::apply_override(j, s);
  return dice::config_from_json(j);
}

void print_runs(const std::vector<dice::RunResult>& runs) {
  for (const auto& r : runs) {
    std::printf("%-10s seed=%-6llu %-12s iters=%-6ld env_steps=%-8ld %s\n",
                r.variant.c_str(), static_cast<unsigned long long>(r.seed),
                r.status.substr(0, r.status.find(':')).c_str(), r.iterations,
                r.env_steps, r.metrics_path.c_str());
    if (r.status != "completed")
      std::printf("           %s\n", r.status.c_str());
  }
}

std::vector<int> parse_k_list(const std::string& csv) {
  std::vector<int> ks;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) ks.push_back(std::stoi(tok));
  }
  return ks;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DiCE trainer: shared-experience teams with diversity-fused "
               "gradient updates"};
  app.require_subcommand(1);

  std::string config_path, dir, k_csv = "1,3,5,7,10";
  std::vector<std::string> sets;

  CLI::App* run = app.add_subcommand("run", "train every seed of one config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--set", sets, "override config key, dotted.path=value");

  CLI::App* sweep = app.add_subcommand("sweep", "team-size sweep");
  sweep->add_option("config", config_path, "base config file")->required();
  sweep->add_option("--k", k_csv, "comma-separated team sizes");
  sweep->add_option("--set", sets, "override config key, dotted.path=value");

  CLI::App* ablate =
      app.add_subcommand("ablate", "run the seven ablation variants");
  ablate->add_option("config", config_path, "base config file")->required();
  ablate->add_option("--set", sets, "override config key, dotted.path=value");

  CLI::App* sum = app.add_subcommand("summarize", "summarize a metrics dir");
  sum->add_option("dir", dir, "metrics directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      print_runs(dice::run_experiment(load_with_overrides(config_path, sets)));
    } else if (sweep->parsed()) {
      print_runs(dice::sweep_team_size(load_with_overrides(config_path, sets),
                                       parse_k_list(k_csv)));
    } else if (ablate->parsed()) {
      print_runs(
          dice::ablation_matrix(load_with_overrides(config_path, sets)));
    } else if (sum->parsed()) {
      std::cout << dice::summarize(dir);
    }
  } catch (const dice::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
