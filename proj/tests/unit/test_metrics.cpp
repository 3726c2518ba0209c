#include <gtest/gtest.h>

#include <pdds/errors.hpp>
#include <pdds/metrics.hpp>
#include <pdds/rng.hpp>
#include <pdds/target.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace pdds;

TEST(SummarizeLogZ, SingleRun) {
  const auto s = summarize_logz(std::vector<double>{-0.3});
  EXPECT_EQ(s.count(), 1u);
  EXPECT_DOUBLE_EQ(s.mean, -0.3);
  EXPECT_EQ(s.sd, 0.0);
  EXPECT_FALSE(s.bias.has_value());
}

TEST(SummarizeLogZ, ExactRunsHaveZeroBias) {
  const auto s = summarize_logz(std::vector<double>(5, 0.0), 0.0);
  EXPECT_EQ(*s.bias, 0.0);
  EXPECT_EQ(s.sd, 0.0);
  EXPECT_EQ(s.log_linear_mean, std::log(1.0));
}

TEST(SummarizeLogZ, LinearMeanAndZScore) {
  const std::vector<double> lz{std::log(0.5), std::log(1.5), std::log(1.0), std::log(1.0)};
  const auto s = summarize_logz(lz, 0.0);
  EXPECT_NEAR(std::exp(s.log_linear_mean), 1.0, 1e-14);
  EXPECT_NEAR(s.linear_z_score(0.0), 0.0, 1e-12);
  // Sample sd of (0.5, 1.5, 1, 1) is sqrt(1/6); SE = sd / 2.
  EXPECT_NEAR(s.linear_rel_se, std::sqrt(1.0 / 6.0) / 2.0, 1e-14);
  EXPECT_THROW(summarize_logz(std::vector<double>{}), ParameterError);
}

TEST(Sinkhorn, SingletonSets) {
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.0;
  b << 1.0;
  const auto r = sinkhorn_w2(a, b);
  EXPECT_NEAR(r.cost, 1.0, 1e-12);
  EXPECT_TRUE(r.converged);
}

TEST(Sinkhorn, IdenticalSetsApproachZero) {
  RandomStream rng(1);
  Eigen::MatrixXd a(2, 10);
  for (int i = 0; i < 10; ++i) a.col(i) = 3.0 * rng.normal_vector(2);
  SinkhornOptions opt;
  opt.epsilon = 1e-3;
  const auto r = sinkhorn_w2(a, a, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.cost, 1e-3);
}

TEST(Sinkhorn, MatchesBruteForceAssignment) {
  RandomStream rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a(2, 5), b(2, 5);
    for (int i = 0; i < 5; ++i) {
      a.col(i) = rng.normal_vector(2);
      b.col(i) = rng.normal_vector(2) + Eigen::Vector2d(1.0, 0.0);
    }
    std::vector<int> perm{0, 1, 2, 3, 4};
    double best = INFINITY;
    do {
      double c = 0.0;
      for (int i = 0; i < 5; ++i) c += (a.col(i) - b.col(perm[i])).squaredNorm();
      best = std::min(best, c / 5.0);
    } while (std::next_permutation(perm.begin(), perm.end()));
    SinkhornOptions opt;
    opt.epsilon = 1e-3;
    const auto r = sinkhorn_w2(a, b, opt);
    EXPECT_NEAR(r.cost, best, 0.01 * best) << "trial " << trial;
  }
}

TEST(Sinkhorn, SymmetricAndNonnegative) {
  RandomStream rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::MatrixXd a(3, 12), b(3, 9);
    for (int i = 0; i < 12; ++i) a.col(i) = rng.normal_vector(3);
    for (int i = 0; i < 9; ++i) b.col(i) = 0.5 * rng.normal_vector(3);
    const double ab = sinkhorn_w2(a, b).cost, ba = sinkhorn_w2(b, a).cost;
    EXPECT_GE(ab, 0.0);
    EXPECT_NEAR(ab, ba, 1e-6 * (1.0 + ab));
  }
}

TEST(Sinkhorn, ReportsNonConvergence) {
  RandomStream rng(4);
  Eigen::MatrixXd a(2, 30), b(2, 30);
  for (int i = 0; i < 30; ++i) {
    a.col(i) = rng.normal_vector(2);
    b.col(i) = rng.normal_vector(2);
  }
  SinkhornOptions opt;
  opt.epsilon = 1e-4;
  opt.max_iter = 1;
  opt.epsilon_scaling = false;
  const auto r = sinkhorn_w2(a, b, opt);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.marginal_violation, opt.tol);
  EXPECT_THROW(sinkhorn_w2(a, Eigen::MatrixXd(3, 2)), ParameterError);
  EXPECT_THROW(sinkhorn_w2(a, Eigen::MatrixXd(2, 0)), ParameterError);
}

TEST(ModeCoverage, PointMassesAndEmpty) {
  std::vector<Vec> centers{Eigen::Vector2d(0, 0), Eigen::Vector2d(5, 5), Eigen::Vector2d(-5, 0)};
  Eigen::MatrixXd samples(2, 6);
  samples << 0, 5, -5, 0, 5, -5, 0, 5, 0, 0, 5, 0;
  auto f = mode_coverage(samples, centers, 0.5);
  for (double v : f) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  f = mode_coverage(Eigen::MatrixXd(2, 0), centers, 1.0);
  for (double v : f) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(mode_coverage(samples, centers, 0.0), ParameterError);
}

TEST(ModeCoverage, PermutationInvariantAndWeighted) {
  std::vector<Vec> centers{Eigen::Vector2d(0, 0), Eigen::Vector2d(4, 0)};
  Eigen::MatrixXd s(2, 4);
  s << 0.1, 4.2, 9.0, -0.3, 0.0, 0.1, 9.0, 0.2;
  Eigen::MatrixXd p(2, 4);
  p.col(0) = s.col(2);
  p.col(1) = s.col(0);
  p.col(2) = s.col(3);
  p.col(3) = s.col(1);
  EXPECT_EQ(mode_coverage(s, centers, 1.0), mode_coverage(p, centers, 1.0));
  const auto f = mode_coverage(s, centers, 1.0);
  EXPECT_DOUBLE_EQ(f[0], 0.5);
  EXPECT_DOUBLE_EQ(f[1], 0.25);
  const std::vector<double> lw{std::log(0.7), std::log(0.1), std::log(0.1), std::log(0.1)};
  const auto fw = mode_coverage(s, centers, 1.0, &lw);
  EXPECT_NEAR(fw[0], 0.8, 1e-14);
  EXPECT_NEAR(fw[1], 0.1, 1e-14);
}

TEST(ModeCoverage, ExactMixtureSamplerOracle) {
  // Frozen values from an independent Monte Carlo with 2e5 exact draws. The
  // two correlated components spread mass far from their means, so the
  // fractions are not all 1/6.
  const auto t = make_mixture6();
  std::vector<Vec> centers;
  for (const auto& c : mixture6_components()) centers.push_back(c.mean);
  RandomStream rng(5);
  Eigen::MatrixXd s(2, 100000);
  for (int i = 0; i < s.cols(); ++i) s.col(i) = t->sample(rng);
  const double at1[6] = {0.1268, 0.1238, 0.0865, 0.1671, 0.1669, 0.0857};
  const double at3[6] = {0.1924, 0.1657, 0.1388, 0.1911, 0.1693, 0.1373};
  const auto f1 = mode_coverage(s, centers, 1.0);
  const auto f3 = mode_coverage(s, centers, 3.0);
  for (int c = 0; c < 6; ++c) {
    EXPECT_NEAR(f1[c], at1[c], 0.01) << "center " << c;
    EXPECT_NEAR(f3[c], at3[c], 0.01) << "center " << c;
    EXPECT_NEAR(f3[c], 1.0 / 6.0, 0.06);
  }
}

TEST(Demo, EndpointsAndModeWeights) {
  std::vector<double> grid(1601);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = -16.0 + 0.02 * static_cast<double>(i);
  const auto d = tempering_vs_noising_demo(grid, {0.0, 0.3, 1.0});
  auto target = [](double x) {
    auto n = [](double y, double m, double v) {
      return std::exp(-0.5 * (y - m) * (y - m) / v) / std::sqrt(2 * std::numbers::pi * v);
    };
    return 0.8 * n(x, -4, 0.25) + 0.2 * n(x, 4, 1.0);
  };
  for (std::size_t i = 0; i < grid.size(); i += 40) {
    EXPECT_NEAR(d.tempered[0][i], target(grid[i]), 1e-9);
    EXPECT_NEAR(d.noised[0][i], target(grid[i]), 1e-12);
    const double phi = std::exp(-0.5 * grid[i] * grid[i]) / std::sqrt(2 * std::numbers::pi);
    EXPECT_NEAR(d.tempered[2][i], phi, 1e-9);
  }
  // Noised path keeps the 0.8 / 0.2 split: mass left of the midpoint between
  // the shrunken means stays near 0.8 while tempering moves it.
  const double h = 0.02;
  double left = 0.0, total = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    total += d.noised[1][i] * h;
    if (grid[i] < 0.0) left += d.noised[1][i] * h;
  }
  EXPECT_NEAR(total, 1.0, 1e-6);
  EXPECT_NEAR(left, 0.8, 0.02);
}

TEST(Demo, CsvLayout) {
  const auto d = tempering_vs_noising_demo({-1.0, 0.0, 1.0}, {0.0, 1.0});
  std::ostringstream out;
  write_demo_csv(out, d);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,x,density_tempered,density_noised");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 6);
  EXPECT_THROW(tempering_vs_noising_demo({0.0}, {0.0}), ParameterError);
  EXPECT_THROW(tempering_vs_noising_demo({0.0, 1.0}, {2.0}), ParameterError);
}
