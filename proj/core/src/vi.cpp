#include "pdds/vi.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "pdds/errors.hpp"
#include "pdds/neuralnet.hpp"

namespace pdds {

namespace {
constexpr int kMaxRedraws = 10;
}

MeanFieldState MeanFieldState::standard(int dim) { return {Vec::Zero(dim), Vec::Zero(dim)}; }

Reparameterization MeanFieldState::to_reparameterization() const {
  return {mean, log_scale.array().exp().matrix()};
}

ElboEstimate elbo_grad_estimate(const MeanFieldState& state, const Target& target, int n_mc,
                                RandomStream& rng) {
  if (n_mc < 1) throw ParameterError("vi: n_mc must be >= 1");
  const auto d = state.mean.size();
  if (d != target.dim() || state.log_scale.size() != d) {
    throw ParameterError("vi: state dimension does not match target");
  }
  const Vec sigma = state.log_scale.array().exp().matrix();
  ElboEstimate est;
  est.grad_mean = Vec::Zero(d);
  est.grad_log_scale = Vec::Zero(d);
  double sum = 0.0;
  for (int s = 0; s < n_mc; ++s) {
    Vec eps;
    Vec x;
    double lg = 0.0;
    int tries = 0;
    for (;;) {
      eps = rng.normal_vector(d);
      x = state.mean + (sigma.array() * eps.array()).matrix();
      lg = target.log_density(x);
      if (std::isfinite(lg)) break;
      ++est.redraws;
      if (++tries > kMaxRedraws) throw FitError(0, "vi: log density not finite after redraws");
    }
    const Vec g = target.grad_log_density(x);
    sum += lg;
    est.grad_mean += g;
    est.grad_log_scale += (g.array() * sigma.array() * eps.array()).matrix();
  }
  const double inv = 1.0 / n_mc;
  est.grad_mean *= inv;
  est.grad_log_scale = (est.grad_log_scale * inv).array() + 1.0;
  const double entropy =
      state.log_scale.sum() + 0.5 * static_cast<double>(d) * (1.0 + std::log(2.0 * std::numbers::pi));
  est.elbo = sum * inv + entropy;
  return est;
}

VIResult fit_meanfield(const Target& target, const VIConfig& config, std::uint64_t seed) {
  if (config.steps < 1) throw ParameterError("vi.steps must be >= 1");
  const int d = target.dim();
  VIResult out;
  out.state = MeanFieldState::standard(d);
  out.elbo_trace.reserve(static_cast<std::size_t>(config.steps));

  AdamOptions opts;
  opts.learning_rate = config.learning_rate;
  opts.decay_every = 0;
  AdamState adam(2 * static_cast<std::size_t>(d), opts);
  std::vector<double> theta(2 * static_cast<std::size_t>(d), 0.0);
  std::vector<double> grad(theta.size());

  for (int step = 0; step < config.steps; ++step) {
    RandomStream rng(seed, {static_cast<std::uint64_t>(step)});
    ElboEstimate est;
    try {
      est = elbo_grad_estimate(out.state, target, config.n_mc, rng);
    } catch (const FitError& e) {
      throw FitError(step, e.what());
    }
    out.redraws += est.redraws;
    out.elbo_trace.push_back(est.elbo);
    for (int i = 0; i < d; ++i) {
      grad[static_cast<std::size_t>(i)] = -est.grad_mean[i];
      grad[static_cast<std::size_t>(d + i)] = -est.grad_log_scale[i];
    }
    adam_step(adam, theta, grad);
    for (int i = 0; i < d; ++i) {
      out.state.mean[i] = theta[static_cast<std::size_t>(i)];
      out.state.log_scale[i] = theta[static_cast<std::size_t>(d + i)];
    }
    if (!out.state.mean.allFinite() || !out.state.log_scale.allFinite()) {
      throw FitError(step, "vi diverged at step " + std::to_string(step));
    }
  }
  out.rep = out.state.to_reparameterization();
  return out;
}

}  // namespace pdds
