#include "pdds/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdds/errors.hpp"

namespace pdds {

std::string to_string(ResampleScheme scheme) {
  switch (scheme) {
    case ResampleScheme::multinomial:
      return "multinomial";
    case ResampleScheme::stratified:
      return "stratified";
    case ResampleScheme::systematic:
      return "systematic";
    case ResampleScheme::sorted_stratified:
      return "sorted_stratified";
  }
  return "unknown";
}

ResampleScheme resample_scheme_from_string(const std::string& name) {
  if (name == "multinomial") return ResampleScheme::multinomial;
  if (name == "stratified") return ResampleScheme::stratified;
  if (name == "systematic") return ResampleScheme::systematic;
  if (name == "sorted_stratified") return ResampleScheme::sorted_stratified;
  throw ParameterError("unknown resampling scheme '" + name + "'");
}

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double normalize_log_weights(std::vector<double>& log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (std::isfinite(lse)) {
    for (double& w : log_weights) w -= lse;
  }
  return lse;
}

double ess(const std::vector<double>& log_weights) {
  const double a = log_sum_exp(log_weights);
  if (!std::isfinite(a)) return 0.0;
  std::vector<double> twice(log_weights.size());
  for (std::size_t i = 0; i < twice.size(); ++i) twice[i] = 2.0 * (log_weights[i] - a);
  return std::exp(-log_sum_exp(twice));
}

namespace {

// Inverse CDF at sorted points u_0 <= ... <= u_{M-1} in (0, 1).
std::vector<std::size_t> invert_sorted(const std::vector<double>& weights,
                                       const std::vector<double>& u) {
  std::vector<std::size_t> out(u.size());
  const std::size_t n = weights.size();
  std::size_t j = 0;
  double cum = weights[0];
  for (std::size_t i = 0; i < u.size(); ++i) {
    while (u[i] >= cum && j + 1 < n) cum += weights[++j];
    // Rounding in the running sum can push u past the last positive weight.
    std::size_t pick = j;
    while (weights[pick] <= 0.0 && pick > 0) --pick;
    out[i] = pick;
  }
  return out;
}

std::vector<double> stratified_points(std::size_t n, RandomStream& rng, bool shared) {
  std::vector<double> u(n);
  const double inv = 1.0 / static_cast<double>(n);
  const double common = shared ? rng.uniform() : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = (static_cast<double>(i) + (shared ? common : rng.uniform())) * inv;
  }
  return u;
}

}  // namespace

std::vector<std::size_t> resample_indices(const std::vector<double>& weights,
                                          ResampleScheme scheme, RandomStream& rng,
                                          const Eigen::MatrixXd* positions) {
  const std::size_t n = weights.size();
  if (n == 0) throw ParameterError("resample: empty weight vector");
  switch (scheme) {
    case ResampleScheme::multinomial: {
      std::vector<double> u(n);
      for (double& x : u) x = rng.uniform();
      std::sort(u.begin(), u.end());
      return invert_sorted(weights, u);
    }
    case ResampleScheme::stratified:
      return invert_sorted(weights, stratified_points(n, rng, false));
    case ResampleScheme::systematic:
      return invert_sorted(weights, stratified_points(n, rng, true));
    case ResampleScheme::sorted_stratified: {
      if (positions == nullptr || static_cast<std::size_t>(positions->cols()) != n) {
        throw ParameterError("sorted_stratified resampling needs one position per weight");
      }
      const auto order = hilbert_order(*positions);
      std::vector<double> sorted(n);
      for (std::size_t i = 0; i < n; ++i) sorted[i] = weights[order[i]];
      auto idx = invert_sorted(sorted, stratified_points(n, rng, false));
      for (auto& i : idx) i = order[i];
      return idx;
    }
  }
  throw ParameterError("resample: unknown scheme");
}

}  // namespace pdds
