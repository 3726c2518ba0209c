#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <pdds/metrics.hpp>
#include <pdds/neuralnet.hpp>
#include <pdds/schedule.hpp>
#include <pdds/smc.hpp>
#include <pdds/target.hpp>
#include <pdds/train.hpp>
#include <pdds/vi.hpp>

namespace pdds::cli {

/// Raised for malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TargetSpec {
  std::string name = "gaussian";
  int dim = 1;
  double mu = 2.75;
  double sigma = 0.25;
  double funnel_sigma = 3.0;
  std::uint64_t seed = 0;  // gmm component draw
  int components = 40;
  double mean_range = 40.0;
  bool normalize = true;
  std::string data_path;
  double prior_sigma = 1.0;
  bool standardize = true;
  bool intercept = false;
};

enum class SmcMode { adaptive, every_step };

inline MCMCConfig no_mcmc() {
  MCMCConfig m;
  m.n_steps = 0;
  return m;
}

struct ExperimentConfig {
  TargetSpec target;
  ScheduleParams schedule;
  SMCConfig smc;
  SmcMode mode = SmcMode::adaptive;
  MCMCConfig mcmc = no_mcmc();  // used when mcmc.n_steps > 0
  PotentialVariant potential = PotentialVariant::simple;
  std::string checkpoint;  // neural potential weights for `sample`
  NetworkConfig net;
  TrainConfig train;
  bool vi_enabled = false;
  VIConfig vi;
  std::uint64_t vi_seed = 0;
  std::string vi_load_path;
  std::vector<std::uint64_t> seeds{1};
  std::string out = "pdds-out";
  int threads = 0;
  std::size_t thin = 1;
  std::size_t eval_exact_samples = 500;
  bool eval_sinkhorn_enabled = true;
  SinkhornOptions eval_sinkhorn;
  double eval_radius = 3.0;
  double demo_min = -8.0;
  double demo_max = 8.0;
  int demo_points = 401;
  std::vector<double> demo_times{0.0, 0.1, 0.25, 0.5, 0.75, 1.0};
};

/// Flat sectioned key = value text ([section] headers, ';' or '#' comments).
/// Unknown sections or keys are rejected; keys match case-insensitively.
/// When envp is given, variables PDDS_<SECTION>_<KEY> override file values.
ExperimentConfig parse_config(const std::string& text, char** envp = nullptr);
ExperimentConfig load_config(const std::string& path, char** envp = nullptr);
std::string serialize_config(const ExperimentConfig& config);

/// Inclusive range "a-b", a single seed, or a comma-separated list.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Builds the target (after optional reparameterisation by the caller).
TargetPtr build_target(const ExperimentConfig& config);
/// Reference points for mode coverage: component means of mixture targets.
std::vector<Vec> mode_centers(const ExperimentConfig& config);

}  // namespace pdds::cli
