#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pdds/neuralnet.hpp"
#include "pdds/potential.hpp"
#include "pdds/smc.hpp"

namespace pdds {

enum class LossKind { dsm, nsm };
std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

struct TrainConfig {
  LossKind loss = LossKind::nsm;
  int batch = 300;
  int updates = 500;
  int rounds = 2;
  AdamOptions adam{};
  /// Seed for the network's initial weights.
  std::uint64_t init_seed = 0;

  void validate() const;
};

/// x0 from the particle approximation, k uniform on {1..K},
/// xk ~ N(kappa_k x0, lambda_k I).
struct TrainingPair {
  Vec x0;
  int k = 1;
  Vec xk;
};

TrainingPair make_training_pair(const Vec& x0, int k, const NoiseSchedule& schedule,
                                RandomStream& rng);

/// Squared residual of the model score against the regression target of the
/// chosen loss. When grad is non-null the parameter gradient is added to it
/// (grad must have network size). Returns NaN, touching nothing, when the
/// regression target is not finite.
double local_loss(const PotentialNetwork& net, const PotentialNetwork::TimeCache& tc_k,
                  const PotentialNetwork::TimeCache& tc_0, const Target& target,
                  const NoiseSchedule& schedule, LossKind kind, const TrainingPair& pair,
                  double* grad);

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;
};
LossValue dsm_local_loss(const NeuralPotential& model, const TrainingPair& pair);
LossValue nsm_local_loss(const NeuralPotential& model, const TrainingPair& pair);

/// Model-score residual u = grad log pi(k, xk) - regression target, exposed for diagnostics.
Vec loss_residual(const NeuralPotential& model, LossKind kind, const TrainingPair& pair);

struct LossRecord {
  int round = 0;
  int update = 0;
  double loss = 0.0;
};

struct TrainStats {
  std::vector<LossRecord> losses;
  long skipped_pairs = 0;
};

/// Draws training pairs from a weighted cloud and runs config.updates Adam
/// steps on the network in place. The optimiser state starts fresh.
TrainStats train_potential(const Eigen::MatrixXd& particles, const std::vector<double>& log_weights,
                           PotentialNetwork& network, const TrainConfig& config,
                           const NoiseSchedule& schedule, TargetPtr target, std::uint64_t seed,
                           int round = 0);

struct RefineResult {
  std::shared_ptr<PotentialNetwork> network;
  /// One report per round (the run that supplied its training data), then a
  /// final run with the last network. Shorter if a run degenerated.
  std::vector<RunReport> reports;
  std::vector<LossRecord> losses;
  long skipped_pairs = 0;
  std::optional<std::string> aborted;
};

/// Alternates adaptive sampling and potential training for config.rounds
/// rounds, warm-starting the network, then samples once more with the final
/// network. Starts from a freshly initialised network unless one is given.
RefineResult refine(TargetPtr target, const NoiseSchedule& schedule, const SMCConfig& smc,
                    const TrainConfig& train, std::uint64_t seed,
                    const NetworkConfig& net_config = {},
                    std::shared_ptr<PotentialNetwork> start = nullptr);

}  // namespace pdds
