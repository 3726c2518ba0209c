#include "pdds/neuralnet.hpp"

#include <cmath>
#include <numbers>

#include "pdds/errors.hpp"
#include "pdds/rng.hpp"

namespace pdds {

namespace {

const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

}  // namespace

double gelu(double z) { return z * std_normal_cdf(z); }
double gelu_d1(double z) { return std_normal_cdf(z) + z * std_normal_pdf(z); }
double gelu_d2(double z) { return std_normal_pdf(z) * (2.0 - z * z); }

Eigen::VectorXd time_embed(double t, int dim) {
  if (dim < 2 || dim % 2 != 0) throw ParameterError("time embedding dimension must be even");
  const int m = dim / 2;
  Eigen::VectorXd out(dim);
  for (int j = 0; j < m; ++j) {
    const double freq = m > 1 ? std::pow(10.0, 4.0 * j / (m - 1)) : 1.0;
    out[j] = std::sin(freq * t);
    out[m + j] = std::cos(freq * t);
  }
  return out;
}

Mlp::Mlp(std::vector<int> widths, bool activate_output, std::size_t offset)
    : widths_(std::move(widths)), activate_output_(activate_output), offset_(offset) {
  if (widths_.size() < 2) throw ParameterError("mlp needs at least one layer");
  std::size_t pos = offset_;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) throw ParameterError("mlp widths must be positive");
    layer_offset_.push_back(pos);
    pos += static_cast<std::size_t>(widths_[l + 1]) * (static_cast<std::size_t>(widths_[l]) + 1);
  }
  count_ = pos - offset_;
}

void Mlp::initialize(double* params, std::uint64_t seed, bool zero_output) const {
  RandomStream rng(seed);
  for (int l = 0; l < layers(); ++l) {
    const int in = widths_[static_cast<std::size_t>(l)];
    const int out = widths_[static_cast<std::size_t>(l) + 1];
    MatMap W(params + weight_offset(l), out, in);
    VecMap b(params + weight_offset(l) + static_cast<std::size_t>(out) * in, out);
    b.setZero();
    if (zero_output && l == layers() - 1) {
      W.setZero();
      continue;
    }
    const double scale = std::sqrt(2.0 / in);
    for (Eigen::Index j = 0; j < W.cols(); ++j) {
      for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = scale * rng.normal();
    }
  }
}

Eigen::VectorXd Mlp::forward(const double* params, const Eigen::VectorXd& in) const {
  Cache cache;
  return forward(params, in, cache);
}

Eigen::VectorXd Mlp::forward(const double* params, const Eigen::VectorXd& in,
                             Cache& cache) const {
  if (in.size() != input_dim()) throw ParameterError("mlp input has wrong size");
  const int L = layers();
  cache.act.resize(static_cast<std::size_t>(L) + 1);
  cache.pre.resize(static_cast<std::size_t>(L));
  cache.act[0] = in;
  for (int l = 0; l < L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const int n_in = widths_[ul];
    const int n_out = widths_[ul + 1];
    ConstMatMap W(params + weight_offset(l), n_out, n_in);
    ConstVecMap b(params + weight_offset(l) + static_cast<std::size_t>(n_out) * n_in, n_out);
    cache.pre[ul].noalias() = W * cache.act[ul];
    cache.pre[ul] += b;
    if (l < L - 1 || activate_output_) {
      cache.act[ul + 1] = cache.pre[ul].unaryExpr([](double z) { return gelu(z); });
    } else {
      cache.act[ul + 1] = cache.pre[ul];
    }
  }
  return cache.act.back();
}

Eigen::VectorXd Mlp::backward(const double* params, const Cache& cache,
                              const Eigen::VectorXd& out_bar, double* grad) const {
  Eigen::VectorXd a_bar = out_bar;
  for (int l = layers() - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const int n_in = widths_[ul];
    const int n_out = widths_[ul + 1];
    Eigen::VectorXd z_bar = a_bar;
    if (l < layers() - 1 || activate_output_) {
      z_bar.array() *= cache.pre[ul].unaryExpr([](double z) { return gelu_d1(z); }).array();
    }
    ConstMatMap W(params + weight_offset(l), n_out, n_in);
    if (grad != nullptr) {
      MatMap gW(grad + weight_offset(l), n_out, n_in);
      VecMap gb(grad + weight_offset(l) + static_cast<std::size_t>(n_out) * n_in, n_out);
      gW.noalias() += z_bar * cache.act[ul].transpose();
      gb += z_bar;
    }
    a_bar.noalias() = W.transpose() * z_bar;
  }
  return a_bar;
}

Eigen::VectorXd Mlp::tangent(const double* params, const Cache& cache,
                             const Eigen::VectorXd& in_dot, Tangent& tan) const {
  const int L = layers();
  tan.act.resize(static_cast<std::size_t>(L) + 1);
  tan.pre.resize(static_cast<std::size_t>(L));
  tan.act[0] = in_dot;
  for (int l = 0; l < L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    ConstMatMap W(params + weight_offset(l), widths_[ul + 1], widths_[ul]);
    tan.pre[ul].noalias() = W * tan.act[ul];
    if (l < L - 1 || activate_output_) {
      tan.act[ul + 1] =
          (cache.pre[ul].unaryExpr([](double z) { return gelu_d1(z); }).array() *
           tan.pre[ul].array())
              .matrix();
    } else {
      tan.act[ul + 1] = tan.pre[ul];
    }
  }
  return tan.act.back();
}

Eigen::VectorXd Mlp::backward_tangent(const double* params, const Cache& cache,
                                      const Tangent& tan, const Eigen::VectorXd& out_bar,
                                      const Eigen::VectorXd& out_dot_bar, double* grad) const {
  Eigen::VectorXd a_bar = out_bar;
  Eigen::VectorXd adot_bar = out_dot_bar;
  for (int l = layers() - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const int n_in = widths_[ul];
    const int n_out = widths_[ul + 1];
    Eigen::VectorXd z_bar;
    Eigen::VectorXd zdot_bar;
    if (l < layers() - 1 || activate_output_) {
      const auto& z = cache.pre[ul];
      const Eigen::ArrayXd d1 = z.unaryExpr([](double v) { return gelu_d1(v); }).array();
      const Eigen::ArrayXd d2 = z.unaryExpr([](double v) { return gelu_d2(v); }).array();
      z_bar = (d1 * a_bar.array() + d2 * tan.pre[ul].array() * adot_bar.array()).matrix();
      zdot_bar = (d1 * adot_bar.array()).matrix();
    } else {
      z_bar = a_bar;
      zdot_bar = adot_bar;
    }
    ConstMatMap W(params + weight_offset(l), n_out, n_in);
    MatMap gW(grad + weight_offset(l), n_out, n_in);
    VecMap gb(grad + weight_offset(l) + static_cast<std::size_t>(n_out) * n_in, n_out);
    gW.noalias() += z_bar * cache.act[ul].transpose();
    gW.noalias() += zdot_bar * tan.act[ul].transpose();
    gb += z_bar;
    a_bar.noalias() = W.transpose() * z_bar;
    adot_bar.noalias() = W.transpose() * zdot_bar;
  }
  return a_bar;
}

namespace {

std::vector<int> repeated(int first, int width, int count, int last) {
  std::vector<int> w{first};
  for (int i = 0; i < count; ++i) w.push_back(width);
  if (last > 0) w.push_back(last);
  return w;
}

void validate(int dim, const NetworkConfig& c) {
  if (dim < 1) throw ParameterError("network dimension must be >= 1");
  if (c.hidden < 1 || c.layers < 1 || c.encoder_layers < 1) {
    throw ParameterError("net.hidden, net.layers and net.encoder_layers must be >= 1");
  }
  if (c.embed_dim < 2 || c.embed_dim % 2 != 0) {
    throw ParameterError("net.embed_dim must be a positive even number");
  }
}

}  // namespace

PotentialNetwork::PotentialNetwork(int dim, const NetworkConfig& config)
    : dim_(dim), config_(config) {
  validate(dim, config);
  const int h = config.hidden;
  r_net_ = Mlp(repeated(config.embed_dim, h, config.layers, 1), false, 0);
  encoder_ = Mlp(repeated(config.embed_dim, h, config.encoder_layers, 0), false,
                 r_net_.param_count());
  main_ = Mlp(repeated(h + dim, h, config.layers, dim), false,
              r_net_.param_count() + encoder_.param_count());
  params_.assign(r_net_.param_count() + encoder_.param_count() + main_.param_count(), 0.0);
}

std::size_t PotentialNetwork::parameter_count(int dim, const NetworkConfig& config) {
  return PotentialNetwork(dim, config).size();
}

void PotentialNetwork::initialize(std::uint64_t seed) {
  double* p = params_.data();
  r_net_.initialize(p, RandomStream(seed, {1}).key(), true);
  encoder_.initialize(p, RandomStream(seed, {2}).key(), false);
  main_.initialize(p, RandomStream(seed, {3}).key(), true);
}

PotentialNetwork::TimeCache PotentialNetwork::time_features(double t) const {
  TimeCache tc;
  tc.t = t;
  const Eigen::VectorXd e = time_embed(t, config_.embed_dim);
  tc.r = r_net_.forward(params_.data(), e, tc.r_cache)[0];
  tc.h = encoder_.forward(params_.data(), e, tc.enc_cache);
  return tc;
}

double PotentialNetwork::r(double t) const {
  return r_net_.forward(params_.data(), time_embed(t, config_.embed_dim))[0];
}

Eigen::VectorXd PotentialNetwork::field(const TimeCache& tc, const Eigen::VectorXd& x,
                                        Mlp::Cache& cache) const {
  if (x.size() != dim_) throw ParameterError("network input has wrong dimension");
  Eigen::VectorXd in(config_.hidden + dim_);
  in << tc.h, x;
  return main_.forward(params_.data(), in, cache);
}

PotentialNetwork::Output PotentialNetwork::forward(double t, const Eigen::VectorXd& x) const {
  if (!x.allFinite() || !std::isfinite(t)) {
    throw ParameterError("network evaluated at a non-finite input");
  }
  const TimeCache tc = time_features(t);
  Mlp::Cache cache;
  return {tc.r, field(tc, x, cache)};
}

void PotentialNetwork::backward_r(const TimeCache& tc, double upstream, double* grad) const {
  r_net_.backward(params_.data(), tc.r_cache, Eigen::VectorXd::Constant(1, upstream), grad);
}

void PotentialNetwork::backward_encoder(const TimeCache& tc, const Eigen::VectorXd& h_bar,
                                        double* grad) const {
  encoder_.backward(params_.data(), tc.enc_cache, h_bar, grad);
}

AdamState::AdamState(std::size_t n, const AdamOptions& opts)
    : options(opts), m(n, 0.0), v(n, 0.0) {
  if (!(opts.learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
  if (opts.decay_every < 0) throw ParameterError("decay interval must be >= 0");
}

double AdamState::current_lr() const {
  if (options.decay_every <= 0) return options.learning_rate;
  return options.learning_rate *
         std::pow(options.decay_rate, static_cast<double>(step / options.decay_every));
}

void adam_step(AdamState& state, std::vector<double>& theta, const std::vector<double>& grad) {
  if (theta.size() != grad.size() || state.m.size() != theta.size() ||
      state.v.size() != theta.size()) {
    throw ParameterError("adam: parameter, gradient and moment sizes differ");
  }
  const auto& o = state.options;
  const double lr = state.current_lr();
  ++state.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = o.beta1 * state.m[i] + (1.0 - o.beta1) * grad[i];
    state.v[i] = o.beta2 * state.v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    theta[i] -= lr * m_hat / (std::sqrt(v_hat) + o.epsilon);
  }
}

}  // namespace pdds
