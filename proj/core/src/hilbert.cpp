#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdds/errors.hpp"
#include "pdds/resample.hpp"

namespace pdds {

namespace {

std::uint64_t quantize(double x, double lo, double hi, int bits) {
  const double u = (x - lo) / (hi - lo);
  const double cells = std::ldexp(1.0, bits);
  if (!(u > 0.0)) return 0;  // also catches NaN
  const double q = std::floor(u * cells);
  if (q >= cells) return (std::uint64_t{1} << bits) - 1;
  return static_cast<std::uint64_t>(q);
}

}  // namespace

int hilbert_bits_for_dim(int d) {
  if (d < 1) throw ParameterError("hilbert: dimension must be >= 1");
  return std::clamp(62 / d, 1, 31);
}

std::uint64_t hilbert_index(std::vector<std::uint64_t> X, int bits) {
  const auto n = X.size();
  if (n == 0 || bits < 1) throw ParameterError("hilbert: need d >= 1 and bits >= 1");
  if (n == 1) return X[0];
  // Skilling's axes-to-transpose transform.
  const std::uint64_t M = std::uint64_t{1} << (bits - 1);
  for (std::uint64_t Q = M; Q > 1; Q >>= 1) {
    const std::uint64_t P = Q - 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (X[i] & Q) {
        X[0] ^= P;
      } else {
        const std::uint64_t t = (X[0] ^ X[i]) & P;
        X[0] ^= t;
        X[i] ^= t;
      }
    }
  }
  for (std::size_t i = 1; i < n; ++i) X[i] ^= X[i - 1];
  std::uint64_t t = 0;
  for (std::uint64_t Q = M; Q > 1; Q >>= 1) {
    if (X[n - 1] & Q) t ^= Q - 1;
  }
  for (auto& v : X) v ^= t;
  // Interleave: the most significant bit of axis 0 leads.
  std::uint64_t key = 0;
  for (int j = bits - 1; j >= 0; --j) {
    for (std::size_t i = 0; i < n; ++i) key = (key << 1) | ((X[i] >> j) & 1U);
  }
  return key;
}

std::uint64_t hilbert_sort_key(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi, int bits_per_dim) {
  const auto d = x.size();
  if (d == 0 || lo.size() != d || hi.size() != d) {
    throw ParameterError("hilbert: point and bounds must share a nonzero dimension");
  }
  if (bits_per_dim < 1) throw ParameterError("hilbert: bits_per_dim must be >= 1");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(std::isfinite(lo[i]) && std::isfinite(hi[i]) && lo[i] < hi[i])) {
      throw ParameterError("hilbert: bounds must be finite with lo < hi");
    }
  }
  if (static_cast<long long>(bits_per_dim) * d > 62) {
    return quantize(x[0], lo[0], hi[0], std::min(bits_per_dim, 62));
  }
  std::vector<std::uint64_t> coords(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    coords[static_cast<std::size_t>(i)] = quantize(x[i], lo[i], hi[i], bits_per_dim);
  }
  return hilbert_index(std::move(coords), bits_per_dim);
}

std::vector<std::size_t> hilbert_order(const Eigen::MatrixXd& positions) {
  const auto d = positions.rows();
  const auto n = static_cast<std::size_t>(positions.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (n < 2) return order;

  Eigen::VectorXd lo = positions.rowwise().minCoeff();
  Eigen::VectorXd hi = positions.rowwise().maxCoeff();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double pad = 0.01 * (hi[i] - lo[i]);
    const double eps = pad > 0.0 ? pad : 0.5;
    lo[i] -= eps;
    hi[i] += eps;
  }
  const int bits = d <= 62 ? hilbert_bits_for_dim(static_cast<int>(d)) : 62;
  std::vector<std::uint64_t> keys(n);
  for (std::size_t j = 0; j < n; ++j) {
    keys[j] = hilbert_sort_key(positions.col(static_cast<Eigen::Index>(j)), lo, hi, bits);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

}  // namespace pdds
