#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdds/rng.hpp"

namespace pdds {

enum class ResampleScheme { multinomial, stratified, systematic, sorted_stratified };

std::string to_string(ResampleScheme scheme);
ResampleScheme resample_scheme_from_string(const std::string& name);

double log_sum_exp(const std::vector<double>& v);

/// Shifts log weights so that their log-sum-exp is 0; returns the shift
/// (the log-sum-exp before normalisation).
double normalize_log_weights(std::vector<double>& log_weights);

/// Effective sample size (sum w)^2 / sum w^2 computed from log weights; equal
/// to 1 / sum w^2 for normalised weights.
double ess(const std::vector<double>& log_weights);

/// Ancestor indices for N offspring. weights must be normalised linear
/// weights. Offspring of multinomial, stratified and systematic draws come
/// out in ancestor order. sorted_stratified needs the particle positions
/// (one particle per column) to order ancestors along a Hilbert curve.
std::vector<std::size_t> resample_indices(const std::vector<double>& weights,
                                          ResampleScheme scheme, RandomStream& rng,
                                          const Eigen::MatrixXd* positions = nullptr);

/// Hilbert-curve index of x after mapping the box [lo, hi] affinely onto
/// [0,1)^d and quantising each axis to bits_per_dim bits. In one dimension the
/// index is the binned coordinate. When bits_per_dim * d exceeds 62 the key
/// degrades to the binned first coordinate.
std::uint64_t hilbert_sort_key(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi, int bits_per_dim);

/// Hilbert index of integer grid coordinates, each below 2^bits.
std::uint64_t hilbert_index(std::vector<std::uint64_t> coords, int bits);

/// Largest bit depth usable for d dimensions (at most 31, at least 1 while d <= 62).
int hilbert_bits_for_dim(int d);

/// Permutation ordering the particles (columns) by Hilbert key, with bounds
/// taken from the cloud and widened by 1%. Ties keep input order.
std::vector<std::size_t> hilbert_order(const Eigen::MatrixXd& positions);

}  // namespace pdds
