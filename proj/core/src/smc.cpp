#include "pdds/smc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pdds/errors.hpp"
#include "pdds/parallel.hpp"

namespace pdds {

namespace {

// Stream tags; every random draw is keyed on (seed, purpose, step, particle).
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kMoveTag = 2;
constexpr std::uint64_t kResampleTag = 3;
constexpr std::uint64_t kMcmcTag = 4;
constexpr std::uint64_t kSdeTag = 5;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log pi_k(x) up to a constant, with its gradient.
void log_pi(const PotentialModel& model, int k, const Vec& x, double& value, Vec& grad) {
  double lg = 0.0;
  model.evaluate(k, x, &lg, &grad);
  value = -0.5 * x.squaredNorm() + lg;
  grad -= x;
}

// Runs n MALA transitions in place; returns the number accepted.
int mala_chain(Vec& x, int k, const PotentialModel& model, double step_size, int n,
               RandomStream& rng) {
  double lp = 0.0;
  Vec grad;
  log_pi(model, k, x, lp, grad);
  const double noise = std::sqrt(2.0 * step_size);
  int accepted = 0;
  for (int s = 0; s < n; ++s) {
    const Vec prop = x + step_size * grad + noise * rng.normal_vector(x.size());
    const double u = rng.uniform();
    double lp_prop = kNegInf;
    Vec grad_prop;
    if (prop.allFinite()) log_pi(model, k, prop, lp_prop, grad_prop);
    if (!std::isfinite(lp_prop) || !grad_prop.allFinite()) continue;
    const double fwd = (prop - x - step_size * grad).squaredNorm();
    const double bwd = (x - prop - step_size * grad_prop).squaredNorm();
    const double log_ratio = lp_prop - lp + (fwd - bwd) / (4.0 * step_size);
    if (std::isfinite(log_ratio) && std::log(u) < log_ratio) {
      x = prop;
      lp = lp_prop;
      grad = std::move(grad_prop);
      ++accepted;
    }
  }
  return accepted;
}

RunReport run_impl(const PotentialModel& model, const SMCConfig& config, std::uint64_t seed,
                   const StepObserver& observer, bool adaptive) {
  config.validate();
  const NoiseSchedule& schedule = model.schedule();
  const int K = schedule.steps();
  const int d = model.target().dim();
  const std::size_t N = config.particles;
  const double log_n = std::log(static_cast<double>(N));

  ParticleSystem ps;
  ps.positions.resize(d, static_cast<Eigen::Index>(N));
  ps.log_weights.assign(N, -log_n);
  ps.step = K;
  parallel_for(N, [&](std::size_t i) {
    RandomStream rng(seed, {kInitTag, i});
    ps.positions.col(static_cast<Eigen::Index>(i)) = rng.normal_vector(d);
  });

  RunReport report;
  report.seed = seed;
  report.steps.reserve(static_cast<std::size_t>(K));
  std::vector<double> inc(N);
  Eigen::MatrixXd moved(d, static_cast<Eigen::Index>(N));

  for (int k = K - 1; k >= 0; --k) {
    const double alpha = schedule.alpha_at(k + 1);
    parallel_for(N, [&](std::size_t i) {
      const auto col = static_cast<Eigen::Index>(i);
      const Vec x_next = ps.positions.col(col);
      double lg_next = 0.0;
      Vec g_next;
      model.evaluate(k + 1, x_next, &lg_next, &g_next);
      if (!g_next.allFinite()) {
        throw ProposalError(i, "non-finite guidance gradient at step " + std::to_string(k + 1) +
                                   " for particle " + std::to_string(i));
      }
      RandomStream rng(seed, {kMoveTag, static_cast<std::uint64_t>(k), i});
      const Vec eps = rng.normal_vector(d);
      const Vec x_k = propose_with_gradient(x_next, g_next, alpha, config.integrator, eps);
      const double lg_k = model.log_g(k, x_k);
      const double lw =
          log_weight_terms(x_k, x_next, lg_k, lg_next, g_next, alpha, config.integrator);
      inc[i] = std::isnan(lw) ? kNegInf : lw;
      moved.col(col) = x_k;
    });
    ps.positions.swap(moved);
    ps.step = k;
    if (observer) observer(k, inc);

    // With uniform incoming weights this is log-sum-exp(inc) - log N.
    for (std::size_t i = 0; i < N; ++i) ps.log_weights[i] += inc[i];
    const double lse = normalize_log_weights(ps.log_weights);
    if (!std::isfinite(lse)) {
      throw DegenerateRunError(k, "all particle weights vanished at step " + std::to_string(k));
    }
    ps.log_z += lse;

    StepRecord rec;
    rec.step = k;
    rec.ess = ess(ps.log_weights);
    const bool resample =
        !adaptive || rec.ess < config.ess_threshold * static_cast<double>(N);
    if (resample) {
      std::vector<double> w(N);
      for (std::size_t i = 0; i < N; ++i) w[i] = std::exp(ps.log_weights[i]);
      RandomStream rng(seed, {kResampleTag, static_cast<std::uint64_t>(k)});
      const auto idx = resample_indices(w, config.resample, rng, &ps.positions);
      for (std::size_t i = 0; i < N; ++i) {
        moved.col(static_cast<Eigen::Index>(i)) = ps.positions.col(static_cast<Eigen::Index>(idx[i]));
      }
      ps.positions.swap(moved);
      std::fill(ps.log_weights.begin(), ps.log_weights.end(), -log_n);
      rec.resampled = true;

      if (config.mcmc && config.mcmc->n_steps > 0) {
        const double gamma = config.mcmc->step_size_at(static_cast<double>(k) / K);
        const int n_steps = config.mcmc->n_steps;
        std::vector<int> acc(N, 0);
        parallel_for(N, [&](std::size_t i) {
          RandomStream rng_i(seed, {kMcmcTag, static_cast<std::uint64_t>(k), i});
          Vec x = ps.positions.col(static_cast<Eigen::Index>(i));
          acc[i] = mala_chain(x, k, model, gamma, n_steps, rng_i);
          ps.positions.col(static_cast<Eigen::Index>(i)) = x;
        });
        long total = 0;
        for (int a : acc) total += a;
        rec.acceptance = static_cast<double>(total) / (static_cast<double>(N) * n_steps);
      }
    }
    rec.log_z_partial = ps.log_z;
    report.steps.push_back(rec);
  }

  report.samples = std::move(ps.positions);
  report.log_weights = std::move(ps.log_weights);
  report.log_z = ps.log_z;
  return report;
}

}  // namespace

std::string to_string(Integrator integrator) {
  return integrator == Integrator::standard ? "standard" : "exponential";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "standard") return Integrator::standard;
  if (name == "exponential") return Integrator::exponential;
  throw ParameterError("unknown integrator '" + name + "'");
}

double MCMCConfig::step_size_at(double t) const {
  if (step_sizes.empty()) throw ParameterError("mcmc step-size schedule is empty");
  if (t <= step_sizes.front().first) return step_sizes.front().second;
  for (std::size_t i = 1; i < step_sizes.size(); ++i) {
    const auto& [t1, g1] = step_sizes[i];
    if (t <= t1) {
      const auto& [t0, g0] = step_sizes[i - 1];
      return t1 > t0 ? g0 + (g1 - g0) * (t - t0) / (t1 - t0) : g1;
    }
  }
  return step_sizes.back().second;
}

void MCMCConfig::validate() const {
  if (n_steps < 0) throw ParameterError("mcmc.steps must be >= 0");
  if (step_sizes.empty()) throw ParameterError("mcmc step-size schedule is empty");
  for (std::size_t i = 0; i < step_sizes.size(); ++i) {
    if (!(step_sizes[i].second > 0.0)) throw ParameterError("mcmc step sizes must be positive");
    if (i > 0 && step_sizes[i].first < step_sizes[i - 1].first) {
      throw ParameterError("mcmc step-size times must be nondecreasing");
    }
  }
}

MCMCConfig MCMCConfig::mixture_default() {
  MCMCConfig c;
  c.n_steps = 10;
  c.step_sizes = {{0.0, 0.05}, {0.5, 0.15}, {0.75, 0.4}, {1.0, 0.6}};
  return c;
}

MCMCConfig MCMCConfig::gaussian_default() {
  MCMCConfig c;
  c.n_steps = 10;
  c.step_sizes = {{0.0, 0.1}, {0.5, 0.2}, {0.75, 0.5}, {1.0, 0.6}};
  return c;
}

void SMCConfig::validate() const {
  if (particles < 2) throw ParameterError("smc.particles must be >= 2");
  if (!(ess_threshold >= 0.0 && ess_threshold <= 1.0)) {
    throw ParameterError("smc.ess_threshold must lie in [0, 1]");
  }
  if (mcmc) mcmc->validate();
}

std::vector<int> RunReport::resample_steps() const {
  std::vector<int> out;
  for (const auto& s : steps) {
    if (s.resampled) out.push_back(s.step);
  }
  return out;
}

int RunReport::resample_count() const { return static_cast<int>(resample_steps().size()); }

double drift_coefficient(double alpha, Integrator integrator) {
  return integrator == Integrator::standard ? alpha : 2.0 * (1.0 - std::sqrt(1.0 - alpha));
}

Vec propose_with_gradient(const Vec& x_next, const Vec& grad_next, double alpha,
                          Integrator integrator, const Vec& eps) {
  return std::sqrt(1.0 - alpha) * x_next + drift_coefficient(alpha, integrator) * grad_next +
         std::sqrt(alpha) * eps;
}

Vec propose(const Vec& x_next, int k, const PotentialModel& model, Integrator integrator,
            const Vec& eps) {
  const Vec g = model.grad_log_g(k + 1, x_next);
  if (!g.allFinite()) throw ProposalError(0, "non-finite guidance gradient");
  return propose_with_gradient(x_next, g, model.schedule().alpha_at(k + 1), integrator, eps);
}

double log_weight_terms(const Vec& x_k, const Vec& x_next, double log_g_k, double log_g_next,
                        const Vec& grad_next, double alpha, Integrator integrator) {
  const double c = drift_coefficient(alpha, integrator);
  const Vec r = x_k - std::sqrt(1.0 - alpha) * x_next;
  const double kernel = (c * c * grad_next.squaredNorm() - 2.0 * c * r.dot(grad_next)) /
                        (2.0 * alpha);
  return log_g_k - log_g_next + kernel;
}

double log_weight(const Vec& x_k, const Vec& x_next, int k, const PotentialModel& model,
                  Integrator integrator) {
  double lg_next = 0.0;
  Vec g_next;
  model.evaluate(k + 1, x_next, &lg_next, &g_next);
  return log_weight_terms(x_k, x_next, model.log_g(k, x_k), lg_next, g_next,
                          model.schedule().alpha_at(k + 1), integrator);
}

MalaResult mala_step(const Vec& x, int k, const PotentialModel& model, double step_size,
                     RandomStream& rng) {
  if (!(step_size > 0.0)) throw ParameterError("mala step size must be positive");
  MalaResult out{x, false};
  out.accepted = mala_chain(out.x, k, model, step_size, 1, rng) == 1;
  return out;
}

RunReport run_pdds(const PotentialModel& model, const SMCConfig& config, std::uint64_t seed,
                   const StepObserver& observer) {
  return run_impl(model, config, seed, observer, false);
}

RunReport run_pdds_adaptive(const PotentialModel& model, const SMCConfig& config,
                            std::uint64_t seed, const StepObserver& observer) {
  return run_impl(model, config, seed, observer, true);
}

SdeMoments simulate_naive_sde(double mu, double sigma, int steps, std::size_t n_paths,
                              std::uint64_t seed) {
  if (!(sigma > 0.0)) throw ParameterError("naive sde: sigma must be positive");
  if (steps < 1 || n_paths < 2) throw ParameterError("naive sde: need steps >= 1, paths >= 2");
  constexpr double kHorizon = 2.0;
  const double dt = kHorizon / steps;
  const double inv_var = 1.0 / (sigma * sigma);
  std::vector<double> final_state(n_paths);
  parallel_for(n_paths, [&](std::size_t p) {
    RandomStream rng(seed, {kSdeTag, p});
    double y = rng.normal();
    for (int j = 0; j < steps; ++j) {
      // Noising time runs backwards from the horizon.
      const double s = kHorizon - j * dt;
      const double beta = 2.0 * s;
      const double kappa = std::exp(-s * s);
      const double ky = kappa * y;
      const double guide = kappa * (-(ky - mu) * inv_var + ky);
      y += (-beta * y + 2.0 * beta * guide) * dt + std::sqrt(2.0 * beta * dt) * rng.normal();
    }
    final_state[p] = y;
  });
  double mean = 0.0;
  for (double v : final_state) mean += v;
  mean /= static_cast<double>(n_paths);
  double ss = 0.0;
  for (double v : final_state) ss += (v - mean) * (v - mean);
  return {mean, ss / static_cast<double>(n_paths - 1)};
}

}  // namespace pdds
