#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

#include <Eigen/Core>

namespace pdds {

/// Counter-based random stream.
///
/// A stream is identified by a key derived from a root seed and a list of
/// tags (for example step index and particle index). Output i of the stream
/// is a pure function of (key, i), so any set of streams can be consumed in
/// any order or on any thread without changing the draws.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : key_(derive_key(seed, {})) {}
  RandomStream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags)
      : key_(derive_key(seed, tags)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index dim);
  std::uint64_t uniform_index(std::uint64_t n);

  /// Independent child stream; does not advance this stream.
  RandomStream child(std::initializer_list<std::uint64_t> tags) const;

  std::uint64_t key() const noexcept { return key_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  static std::uint64_t derive_key(std::uint64_t seed,
                                  std::initializer_list<std::uint64_t> tags);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pdds
