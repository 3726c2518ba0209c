#include <gtest/gtest.h>

#include <pdds/errors.hpp>
#include <pdds/resample.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace pdds;

namespace {

std::vector<double> random_weights(RandomStream& rng, std::size_t n) {
  std::vector<double> w(n);
  double s = 0.0;
  for (auto& v : w) {
    v = std::pow(rng.uniform(), 3.0);
    s += v;
  }
  for (auto& v : w) v /= s;
  return w;
}

std::vector<int> counts(const std::vector<std::size_t>& idx, std::size_t n) {
  std::vector<int> c(n, 0);
  for (auto i : idx) ++c[i];
  return c;
}

}  // namespace

TEST(Weights, EffectiveSampleSize) {
  EXPECT_NEAR(ess(std::vector<double>(10, std::log(0.1))), 10.0, 1e-12);
  EXPECT_NEAR(ess({0.0, -INFINITY, -INFINITY}), 1.0, 1e-15);
  EXPECT_NEAR(ess({std::log(0.5), std::log(0.3), std::log(0.2)}), 1.0 / 0.38, 1e-12);
  // Unnormalised log weights give the same answer.
  EXPECT_NEAR(ess({100.0 + std::log(0.5), 100.0 + std::log(0.3), 100.0 + std::log(0.2)}),
              1.0 / 0.38, 1e-10);
}

TEST(Weights, NormaliseReturnsShift) {
  std::vector<double> lw{1000.0, 1000.0 + std::log(3.0)};
  const double shift = normalize_log_weights(lw);
  EXPECT_NEAR(shift, 1000.0 + std::log(4.0), 1e-12);
  EXPECT_NEAR(std::exp(lw[0]), 0.25, 1e-14);
  // Entries near 1000 carry about 1e-13 of rounding after the shift.
  EXPECT_NEAR(log_sum_exp(lw), 0.0, 1e-12);
}

TEST(Systematic, UniformWeightsCopyEachOnce) {
  RandomStream rng(1);
  const auto idx = resample_indices(std::vector<double>(4, 0.25), ResampleScheme::systematic, rng);
  EXPECT_EQ(idx, (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Systematic, QuotaExample) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    RandomStream rng(s);
    const auto c = counts(resample_indices({0.7, 0.1, 0.1, 0.1}, ResampleScheme::systematic, rng), 4);
    EXPECT_TRUE(c[0] == 2 || c[0] == 3) << c[0];
  }
}

TEST(Systematic, CountsStayWithinFloorAndCeil) {
  RandomStream wr(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + wr.uniform_index(60);
    const auto w = random_weights(wr, n);
    RandomStream rng(3, {static_cast<std::uint64_t>(trial)});
    const auto c = counts(resample_indices(w, ResampleScheme::systematic, rng), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double q = static_cast<double>(n) * w[i];
      ASSERT_GE(c[i], std::floor(q) - 1e-9 * n) << "trial " << trial;
      ASSERT_LE(c[i], std::ceil(q) + 1e-9 * n) << "trial " << trial;
    }
  }
}

TEST(Stratified, CountsWithinTwoOfQuota) {
  RandomStream wr(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + wr.uniform_index(60);
    const auto w = random_weights(wr, n);
    RandomStream rng(5, {static_cast<std::uint64_t>(trial)});
    const auto c = counts(resample_indices(w, ResampleScheme::stratified, rng), n);
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_LT(std::abs(c[i] - static_cast<double>(n) * w[i]), 2.0);
    }
  }
}

TEST(Stratified, CanLeaveQuotaInterval) {
  // w = (1/4, 1/4, 1/2): particle 1 is picked twice when u_0 lands in
  // [1/4, 1/3) and u_1 in [1/3, 1/2), which has probability 1/8.
  int doubled = 0;
  const int draws = 40000;
  for (int s = 0; s < draws; ++s) {
    RandomStream rng(6, {static_cast<std::uint64_t>(s)});
    const auto c = counts(resample_indices({0.25, 0.25, 0.5}, ResampleScheme::stratified, rng), 3);
    doubled += c[1] == 2;
  }
  const double p = static_cast<double>(doubled) / draws;
  EXPECT_NEAR(p, 0.125, 4.0 * std::sqrt(0.125 * 0.875 / draws));
}

TEST(Resample, EverySchemeIsUnbiased) {
  const std::vector<double> w{0.05, 0.4, 0.15, 0.3, 0.1};
  Eigen::MatrixXd pos(2, 5);
  pos << 0.0, 1.0, -1.0, 2.0, 0.5, 1.0, 0.0, 3.0, -2.0, 1.5;
  const int draws = 20000;
  for (auto scheme : {ResampleScheme::multinomial, ResampleScheme::stratified,
                      ResampleScheme::systematic, ResampleScheme::sorted_stratified}) {
    std::vector<double> s1(5, 0.0), s2(5, 0.0);
    for (int d = 0; d < draws; ++d) {
      RandomStream rng(7, {static_cast<std::uint64_t>(scheme), static_cast<std::uint64_t>(d)});
      const auto c = counts(resample_indices(w, scheme, rng, &pos), 5);
      for (int i = 0; i < 5; ++i) {
        s1[i] += c[i];
        s2[i] += c[i] * c[i];
      }
    }
    for (int i = 0; i < 5; ++i) {
      const double mean = s1[i] / draws;
      const double var = s2[i] / draws - mean * mean;
      const double se = std::sqrt(std::max(var, 1e-12) / draws);
      EXPECT_LE(std::abs(mean - 5.0 * w[i]), 4.0 * se + 1e-9)
          << to_string(scheme) << " particle " << i;
    }
  }
}

TEST(Resample, OffspringInAncestorOrder) {
  RandomStream rng(8);
  for (auto scheme : {ResampleScheme::multinomial, ResampleScheme::stratified,
                      ResampleScheme::systematic}) {
    const auto idx = resample_indices({0.1, 0.2, 0.3, 0.4}, scheme, rng);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(idx.size(), 4u);
  }
}

TEST(Resample, ZeroWeightsNeverChosen) {
  for (auto scheme : {ResampleScheme::multinomial, ResampleScheme::stratified,
                      ResampleScheme::systematic}) {
    for (std::uint64_t s = 0; s < 500; ++s) {
      RandomStream rng(9, {s});
      for (auto i : resample_indices({0.0, 0.5, 0.0, 0.5, 0.0}, scheme, rng)) {
        EXPECT_TRUE(i == 1 || i == 3);
      }
    }
  }
}

TEST(Resample, Errors) {
  RandomStream rng(1);
  EXPECT_THROW(resample_indices({}, ResampleScheme::systematic, rng), ParameterError);
  EXPECT_THROW(resample_indices({0.5, 0.5}, ResampleScheme::sorted_stratified, rng),
               ParameterError);
  EXPECT_THROW(resample_scheme_from_string("residual"), ParameterError);
  EXPECT_EQ(resample_scheme_from_string("sorted_stratified"), ResampleScheme::sorted_stratified);
}

TEST(Hilbert, OneDimensionIsIdentity) {
  for (std::uint64_t x = 0; x < 16; ++x) EXPECT_EQ(hilbert_index({x}, 4), x);
  Eigen::VectorXd lo(1), hi(1), x(1);
  lo << 0.0;
  hi << 1.0;
  x << 0.3;
  EXPECT_EQ(hilbert_sort_key(x, lo, hi, 4), 4u);
}

TEST(Hilbert, OrderOneCurve) {
  EXPECT_EQ(hilbert_index({0, 0}, 1), 0u);
  EXPECT_EQ(hilbert_index({0, 1}, 1), 1u);
  EXPECT_EQ(hilbert_index({1, 1}, 1), 2u);
  EXPECT_EQ(hilbert_index({1, 0}, 1), 3u);
}

TEST(Hilbert, BijectiveAndContinuous) {
  for (auto [d, bits] : {std::pair{2, 4}, std::pair{3, 3}, std::pair{4, 2}}) {
    const std::uint64_t side = std::uint64_t{1} << bits;
    std::uint64_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= side;
    std::map<std::uint64_t, std::vector<std::uint64_t>> by_key;
    for (std::uint64_t c = 0; c < cells; ++c) {
      std::vector<std::uint64_t> coord(static_cast<std::size_t>(d));
      std::uint64_t rest = c;
      for (auto& v : coord) {
        v = rest % side;
        rest /= side;
      }
      const auto key = hilbert_index(coord, bits);
      ASSERT_LT(key, cells);
      ASSERT_TRUE(by_key.emplace(key, coord).second) << "duplicate key " << key;
    }
    ASSERT_EQ(by_key.size(), cells);
    // Consecutive keys visit neighbouring cells.
    for (auto it = std::next(by_key.begin()); it != by_key.end(); ++it) {
      const auto& a = std::prev(it)->second;
      const auto& b = it->second;
      std::uint64_t dist = 0;
      for (std::size_t i = 0; i < a.size(); ++i) dist += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
      ASSERT_EQ(dist, 1u) << "d=" << d << " key " << it->first;
    }
  }
}

TEST(Hilbert, BitsForDimension) {
  EXPECT_EQ(hilbert_bits_for_dim(1), 31);
  EXPECT_EQ(hilbert_bits_for_dim(2), 31);
  EXPECT_EQ(hilbert_bits_for_dim(3), 20);
  EXPECT_EQ(hilbert_bits_for_dim(62), 1);
  EXPECT_EQ(hilbert_bits_for_dim(100), 1);
  EXPECT_THROW(hilbert_bits_for_dim(0), ParameterError);
}

TEST(Hilbert, OrderIsPermutationAndStable) {
  RandomStream rng(3);
  Eigen::MatrixXd pos(2, 50);
  for (int i = 0; i < 50; ++i) pos.col(i) = rng.normal_vector(2);
  pos.col(7) = pos.col(3);
  const auto order = hilbert_order(pos);
  std::set<std::size_t> seen(order.begin(), order.end());
  EXPECT_EQ(seen.size(), 50u);
  const auto p3 = std::find(order.begin(), order.end(), 3u);
  const auto p7 = std::find(order.begin(), order.end(), 7u);
  EXPECT_LT(p3, p7);

  // Too many dimensions for the key width falls back to the first coordinate.
  Eigen::MatrixXd wide = Eigen::MatrixXd::Zero(70, 4);
  wide.row(0) << 3.0, 1.0, 2.0, 0.0;
  EXPECT_EQ(hilbert_order(wide), (std::vector<std::size_t>{3, 1, 2, 0}));
}
