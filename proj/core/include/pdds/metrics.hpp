#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pdds/schedule.hpp"
#include "pdds/smc.hpp"

namespace pdds {

struct EstimateSummary {
  std::vector<double> log_z;
  double mean = 0.0;  // of log Z estimates
  double sd = 0.0;    // sample standard deviation (0 for a single run)
  std::optional<double> bias;  // mean - known log Z
  /// log of the linear-domain mean of the Z estimates.
  double log_linear_mean = 0.0;
  /// Standard error of the linear-domain mean divided by that mean.
  double linear_rel_se = 0.0;

  std::size_t count() const { return log_z.size(); }
  /// (mean Z_hat - Z) / SE computed in the linear domain, scaled by Z.
  double linear_z_score(double known_log_z) const;
};

EstimateSummary summarize_logz(const std::vector<double>& log_z,
                               std::optional<double> known_log_z = std::nullopt);
EstimateSummary summarize_logz(const std::vector<RunReport>& runs,
                               std::optional<double> known_log_z = std::nullopt);

struct SinkhornOptions {
  /// Entropic regularisation; 0 selects 0.05 times the median pairwise cost.
  double epsilon = 0.0;
  int max_iter = 10000;
  double tol = 1e-6;
  /// Anneal epsilon down from the largest cost before the final solve.
  bool epsilon_scaling = true;
};

struct SinkhornResult {
  /// <P, C> for the entropic plan P with squared Euclidean cost C. No square root.
  double cost = 0.0;
  double epsilon = 0.0;
  int iterations = 0;
  /// L1 violation of the row marginal at exit.
  double marginal_violation = 0.0;
  bool converged = false;
};

/// Entropic optimal transport between the empirical measures of a and b
/// (one point per column, uniform weights), solved in the log domain.
SinkhornResult sinkhorn_w2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const SinkhornOptions& options = {});

/// Fraction of samples whose nearest center lies within radius, per center.
/// Optional weights (normalised log weights, one per sample) replace the
/// uniform count.
std::vector<double> mode_coverage(const Eigen::MatrixXd& samples, const std::vector<Vec>& centers,
                                  double radius,
                                  const std::vector<double>* log_weights = nullptr);

/// Density curves along the tempered path pi^(1-eta) phi^eta (normalised on
/// the grid, eta_t = t) and along the noising path of the schedule, for the
/// 1-D target 0.8 N(-4, 0.5^2) + 0.2 N(4, 1). The noised marginals are exact:
/// component means scale by kappa_t and variances become kappa_t^2 s^2 + lambda_t.
struct DemoCurves {
  std::vector<double> times;
  std::vector<double> grid;
  std::vector<std::vector<double>> tempered;  // [time][grid]
  std::vector<std::vector<double>> noised;
};

DemoCurves tempering_vs_noising_demo(const std::vector<double>& grid,
                                     const std::vector<double>& times,
                                     const ScheduleParams& schedule = {});
/// CSV with header t,x,density_tempered,density_noised.
void write_demo_csv(std::ostream& out, const DemoCurves& curves);

}  // namespace pdds
