#include <gtest/gtest.h>

#include <pdds/errors.hpp>
#include <pdds/metrics.hpp>
#include <pdds/parallel.hpp>
#include <pdds/smc.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

using namespace pdds;

namespace {

double log_normal(double x, double m, double v) {
  return -0.5 * (x - m) * (x - m) / v - 0.5 * std::log(2.0 * std::numbers::pi * v);
}

// The optimal guidance for a 1-D Gaussian target: the noised marginal
// N(kappa mu, kappa^2 sigma^2 + lambda) divided by the reference density.
class ExactGaussianPotential final : public PotentialModel {
 public:
  ExactGaussianPotential(double mu, double sigma, NoiseSchedule s)
      : PotentialModel(make_gaussian(mu, sigma), std::move(s)), mu_(mu), var_(sigma * sigma) {}
  PotentialVariant variant() const override { return PotentialVariant::simple; }

 protected:
  void evaluate_interior(int k, const Vec& x, double* log_value, Vec* grad) const override {
    const double lambda = schedule().lambda_at(k);
    const double kappa = schedule().kappa_at(k);
    const double v = kappa * kappa * var_ + lambda;
    const double m = kappa * mu_;
    if (log_value) *log_value = log_normal(x[0], m, v) - log_normal(x[0], 0.0, 1.0);
    if (grad) *grad = Vec::Constant(1, -(x[0] - m) / v + x[0]);
  }

 private:
  double mu_;
  double var_;
};

// Guidance that vanishes at one interior step, killing every particle.
class VanishingPotential final : public PotentialModel {
 public:
  using PotentialModel::PotentialModel;
  PotentialVariant variant() const override { return PotentialVariant::simple; }

 protected:
  void evaluate_interior(int k, const Vec& x, double* log_value, Vec* grad) const override {
    if (log_value) *log_value = k == 2 ? -std::numeric_limits<double>::infinity() : 0.0;
    if (grad) *grad = Vec::Zero(x.size());
  }
};

SMCConfig small_config(std::size_t n) {
  SMCConfig c;
  c.particles = n;
  return c;
}

}  // namespace

TEST(Propose, ArithmeticExamples) {
  const Vec x = Vec::Constant(1, 1.0), g = Vec::Constant(1, 0.5), zero = Vec::Zero(1);
  EXPECT_NEAR(propose_with_gradient(x, g, 0.19, Integrator::standard, zero)[0], 0.995, 1e-15);
  EXPECT_NEAR(propose_with_gradient(x, g, 0.19, Integrator::exponential, zero)[0], 1.0, 1e-15);
  const Vec eps = Vec::Constant(1, 1.3);
  EXPECT_NEAR(propose_with_gradient(zero, zero, 0.19, Integrator::standard, eps)[0],
              std::sqrt(0.19) * 1.3, 1e-15);
}

TEST(Propose, ThrowsOnNonFiniteGuidance) {
  const auto pot = make_simple_potential(make_gaussian(0.0, 1e-300), NoiseSchedule::cosine(4));
  EXPECT_THROW(propose(Vec::Constant(1, 1e300), 0, *pot, Integrator::standard, Vec::Zero(1)),
               ProposalError);
}

TEST(LogWeight, ReferenceTargetIsZero) {
  const auto pot = make_simple_potential(make_standard_normal(2), NoiseSchedule::cosine(8));
  RandomStream rng(1);
  for (int k = 0; k < 8; ++k) {
    for (auto integ : {Integrator::standard, Integrator::exponential}) {
      const Vec a = rng.normal_vector(2), b = rng.normal_vector(2);
      EXPECT_LE(std::abs(log_weight(a, b, k, *pot, integ)), 1e-12);
    }
  }
}

TEST(LogWeight, FinalStepHasNoDenominatorPotential) {
  const auto t = make_gaussian(2.75, 0.25);
  const auto s = NoiseSchedule::cosine(8);
  SimplePotential pot(t, s);
  const Vec a = Vec::Constant(1, 0.4), b = Vec::Constant(1, -0.3);
  // g_K = 1 with zero gradient, so only log g_{K-1}(x_{K-1}) remains.
  EXPECT_DOUBLE_EQ(log_weight(a, b, 7, pot, Integrator::standard), pot.log_g(7, a));
}

TEST(LogWeight, ExpectationMatchesQuadrature) {
  // E[w_k] under the previous target times the proposal equals the ratio of
  // consecutive normalisers Z_k / Z_{k+1}, both computed by quadrature.
  const auto t = make_gaussian(2.75, 0.25);
  const auto s = NoiseSchedule::cosine(16);
  SimplePotential pot(t, s);
  const int outer = 3000, inner = 400;
  const double lo = -60, hi = 60, h = (hi - lo) / outer;
  auto normaliser = [&](int k) {
    double z = 0.0;
    for (int i = 0; i <= outer; ++i) {
      const Vec x = Vec::Constant(1, lo + i * h);
      z += std::exp(log_normal(x[0], 0.0, 1.0) + pot.log_g(k, x));
    }
    return z * h;
  };
  for (int k : {15, 14, 12, 8, 3, 0}) {
    const double alpha = s.alpha_at(k + 1);
    const double sd = std::sqrt(alpha);
    double expected_w = 0.0;
    for (int j = 0; j <= outer; ++j) {
      const Vec xn = Vec::Constant(1, lo + j * h);
      double lg;
      Vec g;
      pot.evaluate(k + 1, xn, &lg, &g);
      const double lp = log_normal(xn[0], 0.0, 1.0) + lg;
      if (lp < -700) continue;
      const double mean = propose_with_gradient(xn, g, alpha, Integrator::standard, Vec::Zero(1))[0];
      const double a = mean - 12 * sd, step = 24 * sd / inner;
      double acc = 0.0;
      for (int i = 0; i <= inner; ++i) {
        const Vec x = Vec::Constant(1, a + i * step);
        acc += std::exp(log_normal(x[0], mean, alpha) +
                        log_weight(x, xn, k, pot, Integrator::standard));
      }
      expected_w += std::exp(lp) * acc * step;
    }
    expected_w *= h;
    const double zk = normaliser(k), zk1 = normaliser(k + 1);
    EXPECT_NEAR(expected_w / zk1 / (zk / zk1), 1.0, 1e-4) << "step " << k;
  }
}

TEST(RunPdds, ReferenceTargetHasUnitWeights) {
  const auto pot = make_simple_potential(make_standard_normal(2), NoiseSchedule::cosine(16));
  const auto cfg = small_config(500);
  for (bool adaptive : {false, true}) {
    const RunReport r = adaptive ? run_pdds_adaptive(*pot, cfg, 3) : run_pdds(*pot, cfg, 3);
    EXPECT_LE(std::abs(r.log_z), 1e-12);
    ASSERT_EQ(r.steps.size(), 16u);
    for (const auto& st : r.steps) EXPECT_NEAR(st.ess, 500.0, 1e-9);
    for (double w : r.log_weights) EXPECT_NEAR(w, -std::log(500.0), 1e-12);
    if (adaptive) {
      EXPECT_EQ(r.resample_count(), 0);
    }
  }
}

TEST(RunPdds, StepsRunFromLastToFirst) {
  const auto pot = make_simple_potential(make_mixture6(), NoiseSchedule::cosine(8));
  std::vector<int> seen;
  const RunReport r = run_pdds(*pot, small_config(64), 1, [&](int k, const std::vector<double>& inc) {
    seen.push_back(k);
    EXPECT_EQ(inc.size(), 64u);
  });
  EXPECT_EQ(seen, (std::vector<int>{7, 6, 5, 4, 3, 2, 1, 0}));
  EXPECT_EQ(r.samples.rows(), 2);
  EXPECT_EQ(r.samples.cols(), 64);
  EXPECT_EQ(r.resample_count(), 8);
}

TEST(RunPdds, ExactPotentialRecoversZ) {
  const auto s = NoiseSchedule::cosine(16);
  ExactGaussianPotential pot(2.75, 0.25, s);
  std::vector<double> lz;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) lz.push_back(run_pdds(pot, small_config(2000), seed).log_z);
  const auto sum = summarize_logz(lz, 0.0);
  EXPECT_LT(std::abs(sum.mean), 0.02);
  EXPECT_LT(sum.sd, 0.05);
}

TEST(RunPdds, UnbiasedOnMildGaussian) {
  const auto pot = make_simple_potential(make_gaussian(1.0, 0.6), NoiseSchedule::cosine(16));
  std::vector<double> lz;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) lz.push_back(run_pdds(*pot, small_config(256), seed).log_z);
  const auto sum = summarize_logz(lz, 0.0);
  EXPECT_LT(std::abs(sum.linear_z_score(0.0)), 3.0) << "linear mean " << std::exp(sum.log_linear_mean);
}

TEST(RunPdds, ZeroThresholdNeverResamples) {
  const auto pot = make_simple_potential(make_mixture6(), NoiseSchedule::cosine(8));
  auto cfg = small_config(128);
  cfg.ess_threshold = 0.0;
  const RunReport r = run_pdds_adaptive(*pot, cfg, 2);
  EXPECT_EQ(r.resample_count(), 0);
  EXPECT_TRUE(std::isfinite(r.log_z));
}

TEST(RunPdds, AdaptiveResamplesBelowThreshold) {
  const auto pot = make_simple_potential(make_gaussian(2.75, 0.25), NoiseSchedule::cosine(16));
  auto cfg = small_config(256);
  cfg.ess_threshold = 0.3;
  const RunReport r = run_pdds_adaptive(*pot, cfg, 4);
  EXPECT_GT(r.resample_count(), 0);
  for (const auto& st : r.steps) {
    // The recorded ESS is that of the incoming weights; a resample follows
    // exactly when it fell below the threshold.
    EXPECT_EQ(st.resampled, st.ess < 0.3 * 256) << "step " << st.step;
  }
}

TEST(RunPdds, SeedDeterminesOutputAcrossThreadCounts) {
  const auto pot = make_simple_potential(make_mixture6(), NoiseSchedule::cosine(8));
  auto cfg = small_config(300);
  cfg.resample = ResampleScheme::sorted_stratified;
  cfg.mcmc = MCMCConfig::mixture_default();
  cfg.mcmc->n_steps = 3;
  std::string text[3];
  for (int i = 0; i < 3; ++i) {
    set_num_threads(i == 0 ? 1 : 4);
    std::ostringstream out;
    write_run_report(out, run_pdds_adaptive(*pot, cfg, 9), 1);
    text[i] = out.str();
  }
  set_num_threads(0);
  EXPECT_EQ(text[0], text[1]);
  EXPECT_EQ(text[1], text[2]);
  std::ostringstream other;
  write_run_report(other, run_pdds_adaptive(*pot, cfg, 10), 1);
  EXPECT_NE(other.str(), text[0]);
}

TEST(RunPdds, DegenerateRunReportsStep) {
  VanishingPotential pot(make_standard_normal(1), NoiseSchedule::cosine(6));
  try {
    run_pdds(pot, small_config(16), 1);
    FAIL() << "expected DegenerateRunError";
  } catch (const DegenerateRunError& e) {
    EXPECT_EQ(e.step(), 2);
  }
}

TEST(RunPdds, RejectsBadConfig) {
  const auto pot = make_simple_potential(make_standard_normal(1), NoiseSchedule::cosine(4));
  auto cfg = small_config(1);
  EXPECT_THROW(run_pdds(*pot, cfg, 1), ParameterError);
  cfg = small_config(10);
  cfg.ess_threshold = 1.5;
  EXPECT_THROW(run_pdds_adaptive(*pot, cfg, 1), ParameterError);
}

TEST(Mala, TinyStepAlwaysAccepts) {
  const auto pot = make_simple_potential(make_mixture6(), NoiseSchedule::cosine(8));
  RandomStream rng(5);
  int accepted = 0;
  Vec x(2);
  x << 1.0, 0.5;
  for (int i = 0; i < 200; ++i) {
    const auto r = mala_step(x, 3, *pot, 1e-12, rng);
    accepted += r.accepted;
    EXPECT_LT((r.x - x).norm(), 1e-4);
  }
  EXPECT_EQ(accepted, 200);
  EXPECT_THROW(mala_step(x, 3, *pot, 0.0, rng), ParameterError);
}

TEST(Mala, LongRunVarianceOnReference) {
  const auto pot = make_simple_potential(make_standard_normal(1), NoiseSchedule::cosine(8));
  double s1 = 0.0, s2 = 0.0;
  long n = 0;
  for (std::uint64_t chain = 0; chain < 20; ++chain) {
    RandomStream rng(6, {chain});
    Vec x = rng.normal_vector(1);
    for (int i = 0; i < 5000; ++i) {
      x = mala_step(x, 4, *pot, 0.5, rng).x;
      s1 += x[0];
      s2 += x[0] * x[0];
      ++n;
    }
  }
  const double mean = s1 / n;
  EXPECT_NEAR(s2 / n - mean * mean, 1.0, 0.02);
}

TEST(MCMCConfig, StepSizeInterpolation) {
  const auto m = MCMCConfig::mixture_default();
  EXPECT_DOUBLE_EQ(m.step_size_at(0.0), 0.05);
  EXPECT_DOUBLE_EQ(m.step_size_at(0.25), 0.1);
  EXPECT_DOUBLE_EQ(m.step_size_at(1.0), 0.6);
  EXPECT_DOUBLE_EQ(m.step_size_at(2.0), 0.6);
  MCMCConfig bad;
  bad.step_sizes = {{0.5, 0.1}, {0.2, 0.1}};
  EXPECT_THROW(bad.validate(), ParameterError);
}

TEST(NaiveSde, UnitVarianceTargetIsUnbiased) {
  const auto m = simulate_naive_sde(2.0, 1.0, 400, 20000, 1);
  EXPECT_NEAR(m.mean, 2.0, 0.04);
  EXPECT_NEAR(m.variance, 1.0, 0.05);
}

TEST(RunReport, JsonRoundTrip) {
  const auto pot = make_simple_potential(make_mixture6(), NoiseSchedule::cosine(8));
  auto cfg = small_config(40);
  cfg.mcmc = MCMCConfig::mixture_default();
  const RunReport r = run_pdds_adaptive(*pot, cfg, 12);
  std::ostringstream out;
  write_run_report(out, r, 1);
  std::istringstream in(out.str());
  const RunReport back = read_run_report(in);
  EXPECT_EQ(back.seed, 12u);
  EXPECT_DOUBLE_EQ(back.log_z, r.log_z);
  EXPECT_EQ(back.steps.size(), r.steps.size());
  EXPECT_EQ(back.resample_steps(), r.resample_steps());
  ASSERT_EQ(back.samples.cols(), 40);
  EXPECT_LT((back.samples - r.samples).norm(), 1e-12);

  std::ostringstream thinned;
  write_run_report(thinned, r, 4);
  std::istringstream tin(thinned.str());
  EXPECT_EQ(read_run_report(tin).samples.cols(), 10);
}

TEST(RunReport, MalformedLogsAreDataErrors) {
  std::istringstream empty("");
  EXPECT_THROW(read_run_report(empty), DataError);
  std::istringstream junk("{\"seed\": 1, \"step\": 3\nnot json\n");
  EXPECT_THROW(read_run_report(junk), DataError);
}
