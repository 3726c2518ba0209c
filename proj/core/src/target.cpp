#include "pdds/target.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include <Eigen/Cholesky>

#include "pdds/errors.hpp"

namespace pdds {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

class DiagGaussian final : public Target {
 public:
  DiagGaussian(Vec mean, Vec sigma) : mean_(std::move(mean)), sigma_(std::move(sigma)) {
    if (mean_.size() != sigma_.size() || mean_.size() == 0) {
      throw ParameterError("gaussian: mean and sigma must have the same nonzero size");
    }
    if (!(sigma_.array() > 0.0).all()) throw ParameterError("gaussian: sigma must be positive");
    log_norm_ = -0.5 * dim() * kLog2Pi - sigma_.array().log().sum();
  }

  std::string name() const override { return "gaussian"; }
  int dim() const override { return static_cast<int>(mean_.size()); }

  double log_density(const Vec& x) const override {
    return log_norm_ - 0.5 * ((x - mean_).array() / sigma_.array()).square().sum();
  }
  Vec grad_log_density(const Vec& x) const override {
    return -((x - mean_).array() / sigma_.array().square()).matrix();
  }
  std::optional<double> known_log_z() const override { return 0.0; }
  bool has_exact_sampler() const override { return true; }
  Vec sample(RandomStream& rng) const override {
    return mean_ + (sigma_.array() * rng.normal_vector(dim()).array()).matrix();
  }

 private:
  Vec mean_;
  Vec sigma_;
  double log_norm_;
};

class StandardNormal final : public Target {
 public:
  explicit StandardNormal(int d) : d_(d) {
    if (d < 1) throw ParameterError("standard normal: dimension must be >= 1");
  }
  std::string name() const override { return "standard_normal"; }
  int dim() const override { return d_; }
  double log_density(const Vec& x) const override {
    return -0.5 * x.squaredNorm() - 0.5 * d_ * kLog2Pi;
  }
  Vec grad_log_density(const Vec& x) const override { return -x; }
  std::optional<double> known_log_z() const override { return 0.0; }
  bool has_exact_sampler() const override { return true; }
  Vec sample(RandomStream& rng) const override { return rng.normal_vector(d_); }

 private:
  int d_;
};

/// Finite mixture of full-covariance Gaussians with arbitrary positive weights.
class GaussianMixture final : public Target {
 public:
  /// exact_log_z overrides log(sum of weights), which is inexact for weights
  /// already normalised in floating point.
  GaussianMixture(std::string name, std::vector<MixtureComponent> comps,
                  std::optional<double> exact_log_z = std::nullopt)
      : name_(std::move(name)), comps_(std::move(comps)) {
    if (comps_.empty()) throw ParameterError("mixture: no components");
    d_ = static_cast<int>(comps_.front().mean.size());
    double total = 0.0;
    for (const auto& c : comps_) {
      if (c.mean.size() != d_ || c.cov.rows() != d_ || c.cov.cols() != d_) {
        throw ParameterError("mixture: inconsistent component dimensions");
      }
      if (!(c.weight > 0.0)) throw ParameterError("mixture: weights must be positive");
      Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
      if (llt.info() != Eigen::Success) throw ParameterError("mixture: covariance not SPD");
      Eigen::MatrixXd L = llt.matrixL();
      chol_.push_back(L);
      precision_.push_back(llt.solve(Eigen::MatrixXd::Identity(d_, d_)));
      const double log_det = 2.0 * L.diagonal().array().log().sum();
      log_coef_.push_back(std::log(c.weight) - 0.5 * d_ * kLog2Pi - 0.5 * log_det);
      total += c.weight;
    }
    log_total_weight_ = exact_log_z.value_or(std::log(total));
    cumulative_.reserve(comps_.size());
    double acc = 0.0;
    for (const auto& c : comps_) {
      acc += c.weight / total;
      cumulative_.push_back(acc);
    }
  }

  std::string name() const override { return name_; }
  int dim() const override { return d_; }

  double log_density(const Vec& x) const override {
    return log_sum_exp(component_log_terms(x));
  }

  Vec grad_log_density(const Vec& x) const override {
    const Eigen::VectorXd terms = component_log_terms(x);
    const double lse = log_sum_exp(terms);
    Vec grad = Vec::Zero(d_);
    for (std::size_t j = 0; j < comps_.size(); ++j) {
      const double resp = std::exp(terms[static_cast<Eigen::Index>(j)] - lse);
      if (resp == 0.0) continue;
      grad.noalias() -= resp * (precision_[j] * (x - comps_[j].mean));
    }
    return grad;
  }

  std::optional<double> known_log_z() const override { return log_total_weight_; }
  bool has_exact_sampler() const override { return true; }

  Vec sample(RandomStream& rng) const override {
    const double u = rng.uniform();
    std::size_t j = 0;
    while (j + 1 < cumulative_.size() && u >= cumulative_[j]) ++j;
    return comps_[j].mean + chol_[j] * rng.normal_vector(d_);
  }

 private:
  Eigen::VectorXd component_log_terms(const Vec& x) const {
    Eigen::VectorXd terms(static_cast<Eigen::Index>(comps_.size()));
    for (std::size_t j = 0; j < comps_.size(); ++j) {
      const Vec diff = x - comps_[j].mean;
      terms[static_cast<Eigen::Index>(j)] = log_coef_[j] - 0.5 * diff.dot(precision_[j] * diff);
    }
    return terms;
  }

  std::string name_;
  std::vector<MixtureComponent> comps_;
  int d_ = 0;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<Eigen::MatrixXd> precision_;
  std::vector<double> log_coef_;
  std::vector<double> cumulative_;
  double log_total_weight_ = 0.0;
};

class Funnel final : public Target {
 public:
  explicit Funnel(double sigma_f) : sigma_f_(sigma_f) {
    if (!(sigma_f > 0.0)) throw ParameterError("funnel: sigma_f must be positive");
  }
  std::string name() const override { return "funnel"; }
  int dim() const override { return kDim; }

  double log_density(const Vec& x) const override {
    const double x0 = x[0];
    const double tail = x.tail(kDim - 1).squaredNorm();
    return -0.5 * x0 * x0 / (sigma_f_ * sigma_f_) - 0.5 * kLog2Pi - std::log(sigma_f_) -
           0.5 * (kDim - 1) * (kLog2Pi + x0) - 0.5 * tail * std::exp(-x0);
  }

  Vec grad_log_density(const Vec& x) const override {
    const double x0 = x[0];
    const double inv_var = std::exp(-x0);
    Vec g(kDim);
    g[0] = -x0 / (sigma_f_ * sigma_f_) - 0.5 * (kDim - 1) +
           0.5 * x.tail(kDim - 1).squaredNorm() * inv_var;
    g.tail(kDim - 1) = -x.tail(kDim - 1) * inv_var;
    return g;
  }

  std::optional<double> known_log_z() const override { return 0.0; }
  bool has_exact_sampler() const override { return true; }
  Vec sample(RandomStream& rng) const override {
    Vec x(kDim);
    x[0] = sigma_f_ * rng.normal();
    const double scale = std::exp(0.5 * x[0]);
    for (int i = 1; i < kDim; ++i) x[i] = scale * rng.normal();
    return x;
  }

 private:
  static constexpr int kDim = 10;
  double sigma_f_;
};

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class LogisticRegression final : public Target {
 public:
  LogisticRegression(Eigen::MatrixXd features, Eigen::VectorXd labels, double prior_sigma)
      : X_(std::move(features)), y_(std::move(labels)), prior_sigma_(prior_sigma) {
    if (!(prior_sigma_ > 0.0)) throw ParameterError("logreg: prior_sigma must be positive");
    if (X_.rows() != y_.size()) {
      throw DataError("logreg: " + std::to_string(X_.rows()) + " feature rows but " +
                      std::to_string(y_.size()) + " labels");
    }
    if (X_.cols() < 1) throw DataError("logreg: features must have at least one column");
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (y_[i] != 0.0 && y_[i] != 1.0) throw DataError("logreg: labels must be 0 or 1");
    }
    const double p = static_cast<double>(X_.cols());
    log_prior_norm_ = -0.5 * p * kLog2Pi - p * std::log(prior_sigma_);
  }

  std::string name() const override { return "logreg"; }
  int dim() const override { return static_cast<int>(X_.cols()); }

  double log_density(const Vec& theta) const override {
    const double s2 = prior_sigma_ * prior_sigma_;
    double lp = log_prior_norm_ - 0.5 * theta.squaredNorm() / s2;
    if (X_.rows() > 0) {
      const Eigen::VectorXd z = X_ * theta;
      for (Eigen::Index i = 0; i < z.size(); ++i) lp += y_[i] * z[i] - softplus(z[i]);
    }
    return lp;
  }

  Vec grad_log_density(const Vec& theta) const override {
    Vec g = -theta / (prior_sigma_ * prior_sigma_);
    if (X_.rows() > 0) {
      const Eigen::VectorXd z = X_ * theta;
      Eigen::VectorXd resid(z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) resid[i] = y_[i] - sigmoid(z[i]);
      g.noalias() += X_.transpose() * resid;
    }
    return g;
  }

 private:
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  double prior_sigma_;
  double log_prior_norm_;
};

class Reparameterized final : public Target {
 public:
  Reparameterized(TargetPtr base, Reparameterization rep)
      : base_(std::move(base)), rep_(std::move(rep)) {
    if (!base_) throw ParameterError("reparameterize: null target");
    if (rep_.mean.size() != base_->dim() || rep_.scale.size() != base_->dim()) {
      throw ParameterError("reparameterize: mean/scale size does not match target dimension");
    }
    if (!(rep_.scale.array() > 0.0).all()) {
      throw ParameterError("reparameterize: scale entries must be positive");
    }
    log_jacobian_ = rep_.scale.array().log().sum();
  }

  std::string name() const override { return base_->name(); }
  int dim() const override { return base_->dim(); }
  double log_density(const Vec& x) const override {
    return base_->log_density(rep_.to_original(x)) + log_jacobian_;
  }
  Vec grad_log_density(const Vec& x) const override {
    return (rep_.scale.array() * base_->grad_log_density(rep_.to_original(x)).array()).matrix();
  }
  std::optional<double> known_log_z() const override { return base_->known_log_z(); }
  bool has_exact_sampler() const override { return base_->has_exact_sampler(); }
  Vec sample(RandomStream& rng) const override {
    return rep_.to_reparameterized(base_->sample(rng));
  }

 private:
  TargetPtr base_;
  Reparameterization rep_;
  double log_jacobian_ = 0.0;
};

}  // namespace

Vec Target::sample(RandomStream&) const {
  throw std::logic_error("target '" + name() + "' has no exact sampler");
}

TargetPtr make_diag_gaussian(const Vec& mean, const Vec& sigma) {
  return std::make_shared<DiagGaussian>(mean, sigma);
}

TargetPtr make_gaussian(double mu, double sigma) {
  if (!(sigma > 0.0)) throw ParameterError("gaussian: sigma must be positive");
  return make_diag_gaussian(Vec::Constant(1, mu), Vec::Constant(1, sigma));
}

TargetPtr make_standard_normal(int dim) { return std::make_shared<StandardNormal>(dim); }

std::vector<MixtureComponent> mixture6_components() {
  Eigen::MatrixXd wide(2, 2), small(2, 2), tilted(2, 2);
  wide << 0.7, 0.0, 0.0, 0.05;
  small << 0.05, 0.0, 0.0, 0.07;
  tilted << 1.0, 0.95, 0.95, 1.0;
  auto v = [](double a, double b) {
    Vec out(2);
    out << a, b;
    return out;
  };
  const double w = 1.0 / 6.0;
  return {
      {w, v(3.0, 0.0), wide},  {w, v(-2.5, 0.0), wide}, {w, v(2.0, 3.0), tilted},
      {w, v(0.0, 3.0), small}, {w, v(0.0, -2.5), small}, {w, v(3.0, 2.0), tilted},
  };
}

TargetPtr make_mixture6() {
  return std::make_shared<GaussianMixture>("mixture", mixture6_components(), 0.0);
}

TargetPtr make_funnel(double sigma_f) { return std::make_shared<Funnel>(sigma_f); }

double gmm40_sigma() { return std::log1p(std::exp(0.1)); }

std::vector<MixtureComponent> gmm40_components(const Gmm40Options& options) {
  if (options.dim < 1) throw ParameterError("gmm: dimension must be >= 1");
  if (options.components < 1) throw ParameterError("gmm: need at least one component");
  RandomStream rng(options.seed, {0x676d6dULL});
  const double sigma = gmm40_sigma();
  const Eigen::MatrixXd cov =
      sigma * sigma * Eigen::MatrixXd::Identity(options.dim, options.dim);
  std::vector<MixtureComponent> comps;
  comps.reserve(static_cast<std::size_t>(options.components));
  double total = 0.0;
  for (int j = 0; j < options.components; ++j) {
    Vec mean(options.dim);
    for (int i = 0; i < options.dim; ++i) {
      mean[i] = options.mean_range * (2.0 * rng.uniform() - 1.0);
    }
    const double w = rng.uniform();
    total += w;
    comps.push_back({w, mean, cov});
  }
  if (options.normalize_weights) {
    for (auto& c : comps) c.weight /= total;
  }
  return comps;
}

TargetPtr make_gmm40(const Gmm40Options& options) {
  return std::make_shared<GaussianMixture>(
      "gmm", gmm40_components(options),
      options.normalize_weights ? std::optional<double>(0.0) : std::nullopt);
}

TargetPtr make_logreg(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                      double prior_sigma) {
  return std::make_shared<LogisticRegression>(features, labels, prior_sigma);
}

Reparameterization Reparameterization::identity(int dim) {
  return {Vec::Zero(dim), Vec::Ones(dim)};
}

Vec Reparameterization::to_original(const Vec& x_prime) const {
  return mean + (scale.array() * x_prime.array()).matrix();
}

Vec Reparameterization::to_reparameterized(const Vec& x) const {
  return ((x - mean).array() / scale.array()).matrix();
}

TargetPtr reparameterize(TargetPtr target, const Reparameterization& rep) {
  return std::make_shared<Reparameterized>(std::move(target), rep);
}

}  // namespace pdds
