#include "pdds/rng.hpp"

#include <cmath>

namespace pdds {

std::uint64_t RandomStream::derive_key(std::uint64_t seed,
                                       std::initializer_list<std::uint64_t> tags) {
  std::uint64_t key = mix(seed + kGolden);
  for (std::uint64_t tag : tags) {
    key = mix(key ^ mix(tag + 0x632BE59BD9B4E019ULL));
  }
  return key;
}

double RandomStream::uniform() {
  // 53 random bits, offset by half an ulp so that 0 is never returned.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  // Marsaglia polar method; written out so streams are identical across
  // standard library implementations.
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

Eigen::VectorXd RandomStream::normal_vector(Eigen::Index dim) {
  Eigen::VectorXd out(dim);
  for (Eigen::Index i = 0; i < dim; ++i) out[i] = normal();
  return out;
}

std::uint64_t RandomStream::uniform_index(std::uint64_t n) {
  // Lemire's multiply-shift with rejection.
  std::uint64_t x = (*this)();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = (*this)();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

RandomStream RandomStream::child(std::initializer_list<std::uint64_t> tags) const {
  RandomStream out(0);
  std::uint64_t key = key_;
  for (std::uint64_t tag : tags) {
    key = mix(key ^ mix(tag + 0x632BE59BD9B4E019ULL));
  }
  out.key_ = key;
  return out;
}

}  // namespace pdds
