#include "pdds/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "pdds/errors.hpp"

namespace pdds {

namespace {
constexpr double kLambdaCeiling = 1.0 - 1e-12;
}

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::cosine ? "cosine" : "linear";
}

ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "cosine") return ScheduleKind::cosine;
  if (name == "linear") return ScheduleKind::linear;
  throw ParameterError("unknown schedule kind '" + name + "'");
}

double transition_variance(double lambda_prev, double lambda_cur) {
  if (lambda_prev >= 1.0) {
    throw ScheduleError("schedule degenerate: lambda reaches 1 before the final step");
  }
  return (lambda_cur - lambda_prev) / (1.0 - lambda_prev);
}

NoiseSchedule::NoiseSchedule(const ScheduleParams& params) : params_(params) {
  if (params_.steps < 1) throw ParameterError("schedule.steps must be >= 1");
  if (!(params_.horizon > 0.0)) throw ParameterError("schedule horizon must be positive");
  if (params_.kind == ScheduleKind::cosine && !(params_.offset > 0.0)) {
    throw ParameterError("schedule.offset must be positive");
  }
  if (params_.kind == ScheduleKind::linear &&
      !(params_.beta0 > 0.0 && params_.betaT > 0.0)) {
    throw ParameterError("schedule.beta0 and schedule.betaT must be positive");
  }

  const int K = params_.steps;
  lambda_.assign(K + 1, 0.0);
  alpha_.assign(K + 1, 0.0);
  kappa_.assign(K + 1, 1.0);

  for (int k = 1; k <= K; ++k) {
    double lam = std::clamp(lambda_continuous(time_at(k)), 0.0, 1.0);
    if (k < K) lam = std::min(lam, kLambdaCeiling);
    lambda_[k] = lam;
  }
  for (int k = 1; k <= K; ++k) {
    const double a = transition_variance(lambda_[k - 1], lambda_[k]);
    if (!(a > 0.0)) {
      throw ScheduleError("schedule degenerate: lambda not strictly increasing at step " +
                          std::to_string(k));
    }
    alpha_[k] = std::min(a, 1.0);
  }
  for (int k = 0; k <= K; ++k) kappa_[k] = std::sqrt(1.0 - lambda_[k]);
}

NoiseSchedule NoiseSchedule::cosine(int steps, double offset) {
  ScheduleParams p;
  p.kind = ScheduleKind::cosine;
  p.steps = steps;
  p.offset = offset;
  return NoiseSchedule(p);
}

NoiseSchedule NoiseSchedule::linear(int steps, double beta0, double betaT) {
  ScheduleParams p;
  p.kind = ScheduleKind::linear;
  p.steps = steps;
  p.beta0 = beta0;
  p.betaT = betaT;
  return NoiseSchedule(p);
}

double NoiseSchedule::lambda_continuous(double t) const {
  const double T = params_.horizon;
  if (params_.kind == ScheduleKind::cosine) {
    const double s = params_.offset;
    // 1 - cos^2(u) written as sin^2(u) to keep precision near t = 0.
    const double u = 0.5 * std::numbers::pi * (t / T + s) / (1.0 + s);
    const double sn = std::sin(u);
    return sn * sn;
  }
  const double integral = params_.beta0 * t + 0.5 * (params_.betaT - params_.beta0) * t * t / T;
  return -std::expm1(-2.0 * integral);
}

void NoiseSchedule::check_index(int k, int lo, const char* what) const {
  if (k < lo || k > params_.steps) {
    throw std::out_of_range(std::string(what) + ": step " + std::to_string(k) +
                            " outside [" + std::to_string(lo) + ", " +
                            std::to_string(params_.steps) + "]");
  }
}

double NoiseSchedule::lambda_at(int k) const {
  check_index(k, 0, "lambda_at");
  return lambda_[k];
}

double NoiseSchedule::alpha_at(int k) const {
  check_index(k, 1, "alpha_at");
  return alpha_[k];
}

double NoiseSchedule::kappa_at(int k) const {
  check_index(k, 0, "kappa_at");
  return kappa_[k];
}

}  // namespace pdds
