#pragma once

#include <string>
#include <vector>

namespace pdds {

enum class ScheduleKind { cosine, linear };

std::string to_string(ScheduleKind kind);
ScheduleKind schedule_kind_from_string(const std::string& name);

struct ScheduleParams {
  ScheduleKind kind = ScheduleKind::cosine;
  int steps = 16;
  double horizon = 1.0;
  double offset = 0.008;  // cosine only
  double beta0 = 0.1;     // linear only
  double betaT = 10.0;    // linear only
};

/// One-step transition variance implied by consecutive cumulative variances:
/// 1 - (1 - lambda_cur) / (1 - lambda_prev). Throws ScheduleError when
/// lambda_prev is 1.
double transition_variance(double lambda_prev, double lambda_cur);

/// Discretised Ornstein-Uhlenbeck noising process on the grid t_k = kT/K.
///
/// lambda_k is the variance of X_k given X_0, alpha_k the variance of the
/// one-step transition X_k | X_{k-1}, and kappa_k = sqrt(1 - lambda_k) the
/// shrink factor of the conditional mean. Step 0 is the target itself, so
/// lambda_0 = 0 and kappa_0 = 1 for every kind. Transition variances are
/// derived from the lambda ratio, which keeps
///   (1 - lambda_k) = (1 - lambda_{k-1}) (1 - alpha_k)
/// exact up to rounding. Immutable after construction.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(const ScheduleParams& params);

  static NoiseSchedule cosine(int steps, double offset = 0.008);
  static NoiseSchedule linear(int steps, double beta0, double betaT);

  const ScheduleParams& params() const noexcept { return params_; }
  ScheduleKind kind() const noexcept { return params_.kind; }
  int steps() const noexcept { return params_.steps; }
  double horizon() const noexcept { return params_.horizon; }

  /// Closed-form lambda at continuous time t, without the step-0 pin.
  double lambda_continuous(double t) const;

  double lambda_at(int k) const;  // 0 <= k <= K
  double alpha_at(int k) const;   // 1 <= k <= K
  double kappa_at(int k) const;   // 0 <= k <= K
  double time_at(int k) const { return params_.horizon * k / params_.steps; }

 private:
  void check_index(int k, int lo, const char* what) const;

  ScheduleParams params_;
  std::vector<double> lambda_;
  std::vector<double> alpha_;
  std::vector<double> kappa_;
};

}  // namespace pdds
