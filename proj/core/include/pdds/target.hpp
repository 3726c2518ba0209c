#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdds/rng.hpp"

namespace pdds {

using Vec = Eigen::VectorXd;

/// Unnormalised target density gamma on R^d.
///
/// Evaluation is pure and reentrant. Targets with an analytic normaliser
/// report it through known_log_z(); targets that can be sampled exactly
/// override has_exact_sampler() and sample().
class Target {
 public:
  virtual ~Target() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual double log_density(const Vec& x) const = 0;
  virtual Vec grad_log_density(const Vec& x) const = 0;

  virtual std::optional<double> known_log_z() const { return std::nullopt; }
  virtual bool has_exact_sampler() const { return false; }
  /// Exact draw from gamma / Z. Throws std::logic_error when unsupported.
  virtual Vec sample(RandomStream& rng) const;
};

using TargetPtr = std::shared_ptr<const Target>;

/// Axis-aligned Gaussian N(mean, diag(sigma^2)); normalised.
TargetPtr make_diag_gaussian(const Vec& mean, const Vec& sigma);
/// One-dimensional N(mu, sigma^2).
TargetPtr make_gaussian(double mu, double sigma);
/// N(0, I_d); coincides with the diffusion reference.
TargetPtr make_standard_normal(int dim);

/// Equal-weight mixture of six bivariate Gaussians with separated modes.
TargetPtr make_mixture6();
struct MixtureComponent {
  double weight;
  Vec mean;
  Eigen::MatrixXd cov;
};
/// Component list of make_mixture6(), in order.
std::vector<MixtureComponent> mixture6_components();

/// Neal's funnel in d = 10: x0 ~ N(0, sigma_f^2), x_{1:9} | x0 ~ N(0, e^{x0} I).
TargetPtr make_funnel(double sigma_f = 3.0);

struct Gmm40Options {
  int dim = 2;
  std::uint64_t seed = 0;
  int components = 40;
  double mean_range = 40.0;
  /// When true weights are rescaled to sum to one and known_log_z() is 0;
  /// otherwise the raw Uniform[0,1] weights are kept and log Z = log sum w.
  bool normalize_weights = true;
};
/// Isotropic Gaussian mixture with random means and weights, reproducible
/// from the seed. Component scale is softplus(0.1).
TargetPtr make_gmm40(const Gmm40Options& options);
std::vector<MixtureComponent> gmm40_components(const Gmm40Options& options);
double gmm40_sigma();

/// Bayesian logistic regression posterior with prior N(0, prior_sigma^2 I).
/// features is n x p, labels in {0, 1}.
TargetPtr make_logreg(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                      double prior_sigma = 1.0);

/// Affine change of variables x = mean + scale .* x'.
struct Reparameterization {
  Vec mean;
  Vec scale;

  static Reparameterization identity(int dim);
  Vec to_original(const Vec& x_prime) const;
  Vec to_reparameterized(const Vec& x) const;
};

/// Target over x' with log gamma'(x') = log gamma(mean + scale x') + sum log scale.
/// The Jacobian term keeps the normaliser unchanged.
TargetPtr reparameterize(TargetPtr target, const Reparameterization& rep);

}  // namespace pdds
