#pragma once

#include <cstdint>
#include <vector>

#include "pdds/rng.hpp"
#include "pdds/target.hpp"

namespace pdds {

/// Diagonal Gaussian q = N(mean, diag(exp(log_scale))^2).
struct MeanFieldState {
  Vec mean;
  Vec log_scale;

  static MeanFieldState standard(int dim);
  Reparameterization to_reparameterization() const;
};

struct ElboEstimate {
  double elbo = 0.0;
  Vec grad_mean;
  Vec grad_log_scale;
  /// Draws replaced because log gamma was not finite.
  long redraws = 0;
};

/// Reparameterised Monte Carlo estimate of
///   E_q[log gamma(x)] + sum log sigma_i + d/2 (1 + log 2 pi)
/// and its gradient. A draw with non-finite log gamma is redrawn up to 10
/// times before FitError is thrown.
ElboEstimate elbo_grad_estimate(const MeanFieldState& state, const Target& target, int n_mc,
                                RandomStream& rng);

struct VIConfig {
  int steps = 20000;
  double learning_rate = 1e-3;
  int n_mc = 8;
};

struct VIResult {
  Reparameterization rep;
  MeanFieldState state;
  std::vector<double> elbo_trace;
  long redraws = 0;
};

/// Adam ascent on the ELBO from mean 0, log scale 0.
VIResult fit_meanfield(const Target& target, const VIConfig& config, std::uint64_t seed);

}  // namespace pdds
