#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pdds/potential.hpp"
#include "pdds/resample.hpp"
#include "pdds/rng.hpp"
#include "pdds/schedule.hpp"

namespace pdds {

enum class Integrator { standard, exponential };
std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

/// MALA rejuvenation applied after each resampling event.
struct MCMCConfig {
  int n_steps = 10;
  /// (normalised time k/K, step size) knots, linearly interpolated and held
  /// constant outside the first and last knot.
  std::vector<std::pair<double, double>> step_sizes{{0.0, 0.1}, {1.0, 0.1}};

  double step_size_at(double t) const;
  void validate() const;

  /// Step-size ladders used for the mixture and Gaussian-type targets.
  static MCMCConfig mixture_default();
  static MCMCConfig gaussian_default();
};

struct SMCConfig {
  std::size_t particles = 2000;
  ResampleScheme resample = ResampleScheme::systematic;
  Integrator integrator = Integrator::standard;
  /// Adaptive mode resamples when ESS < ess_threshold * N. 0 never resamples.
  double ess_threshold = 0.3;
  std::optional<MCMCConfig> mcmc;

  void validate() const;
};

/// Weighted particle cloud. Positions hold one particle per column.
struct ParticleSystem {
  Eigen::MatrixXd positions;
  std::vector<double> log_weights;  // normalised: log-sum-exp is 0
  double log_z = 0.0;
  int step = 0;

  std::size_t size() const { return log_weights.size(); }
  int dim() const { return static_cast<int>(positions.rows()); }
};

struct StepRecord {
  int step = 0;
  double ess = 0.0;
  bool resampled = false;
  double log_z_partial = 0.0;
  /// Mean MALA acceptance over the rejuvenation at this step; NaN if none ran.
  double acceptance = std::numeric_limits<double>::quiet_NaN();
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;  // in execution order, step K-1 down to 0
  Eigen::MatrixXd samples;         // d x N final cloud
  std::vector<double> log_weights; // normalised final log weights
  double log_z = 0.0;

  std::vector<int> resample_steps() const;
  int resample_count() const;
};

/// Observer invoked once per step with the incremental log weights before
/// normalisation; used by diagnostics and tests.
using StepObserver = std::function<void(int step, const std::vector<double>& incremental)>;

/// Drift coefficient multiplying grad log g in the proposal mean.
double drift_coefficient(double alpha, Integrator integrator);

/// Move from x_next (step k+1) to step k with standard normal noise eps:
///   sqrt(1 - alpha) x + c grad log g_{k+1}(x) + sqrt(alpha) eps.
/// Throws ProposalError (particle 0) if the guidance gradient is not finite.
Vec propose(const Vec& x_next, int k, const PotentialModel& model, Integrator integrator,
            const Vec& eps);
Vec propose_with_gradient(const Vec& x_next, const Vec& grad_next, double alpha,
                          Integrator integrator, const Vec& eps);

/// Log of the incremental weight for the pair (x_k, x_next), using the
/// cancelled form of the Gaussian kernel ratio.
double log_weight(const Vec& x_k, const Vec& x_next, int k, const PotentialModel& model,
                  Integrator integrator);
double log_weight_terms(const Vec& x_k, const Vec& x_next, double log_g_k, double log_g_next,
                        const Vec& grad_next, double alpha, Integrator integrator);

struct MalaResult {
  Vec x;
  bool accepted = false;
};
/// One MALA transition targeting exp(-|x|^2/2) g_k(x).
MalaResult mala_step(const Vec& x, int k, const PotentialModel& model, double step_size,
                     RandomStream& rng);

/// Every-step resampling sampler. seed fully determines the output.
RunReport run_pdds(const PotentialModel& model, const SMCConfig& config, std::uint64_t seed,
                   const StepObserver& observer = {});
/// Sampler that carries weights and resamples (then rejuvenates) only when
/// the ESS falls below the configured fraction of N.
RunReport run_pdds_adaptive(const PotentialModel& model, const SMCConfig& config,
                            std::uint64_t seed, const StepObserver& observer = {});

struct SdeMoments {
  double mean = 0.0;
  double variance = 0.0;
};
/// Euler-Maruyama simulation of the reverse diffusion guided by the simple
/// potential, for the 1-D target N(mu, sigma^2) and a reference N(0, 1).
/// The noising rate ramps linearly, beta(s) = 2s on s in [0, 2], so the
/// reference is reached to within e^-4 and the terminal law approaches its
/// long-horizon limit. Returns the moments of the terminal state.
SdeMoments simulate_naive_sde(double mu, double sigma, int steps, std::size_t n_paths,
                              std::uint64_t seed);

/// Line-delimited JSON: one record per step then a final record carrying the
/// samples (every thin-th particle) and log_Z.
void write_run_report(std::ostream& out, const RunReport& report, std::size_t thin = 1);
RunReport read_run_report(std::istream& in);

}  // namespace pdds
