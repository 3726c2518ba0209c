#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pdds {

double gelu(double z);
/// First and second derivatives of the exact (erf) GeLU.
double gelu_d1(double z);
double gelu_d2(double z);

/// Sinusoidal time features: [sin(w_0 t) .. sin(w_{m-1} t), cos(w_0 t) .. cos(w_{m-1} t)]
/// with m = dim/2 frequencies spaced geometrically from 1 to 1e4.
Eigen::VectorXd time_embed(double t, int dim = 128);

/// Fully connected network on a slice of a flat parameter vector.
///
/// Layer l stores its weight matrix (out x in, column-major) followed by its
/// bias. Hidden layers apply GeLU; the output layer is linear unless
/// activate_output is set. Besides the usual forward/backward pair the class
/// offers a tangent (forward-mode) pass and the reverse pass of that tangent,
/// which differentiates a directional derivative with respect to the
/// parameters.
class Mlp {
 public:
  struct Cache {
    std::vector<Eigen::VectorXd> act;  // act[0] is the input, act[L] the output
    std::vector<Eigen::VectorXd> pre;  // pre-activations, one per layer
  };
  struct Tangent {
    std::vector<Eigen::VectorXd> act;
    std::vector<Eigen::VectorXd> pre;
  };

  Mlp() = default;
  Mlp(std::vector<int> widths, bool activate_output, std::size_t offset);

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int layers() const { return static_cast<int>(widths_.size()) - 1; }
  const std::vector<int>& widths() const { return widths_; }
  std::size_t offset() const { return offset_; }
  std::size_t param_count() const { return count_; }

  /// He fan-in normal weights, zero biases; the output layer is zeroed when
  /// zero_output is set.
  void initialize(double* params, std::uint64_t seed, bool zero_output) const;

  Eigen::VectorXd forward(const double* params, const Eigen::VectorXd& in) const;
  Eigen::VectorXd forward(const double* params, const Eigen::VectorXd& in, Cache& cache) const;

  /// Accumulates d(out_bar . out)/dparams into grad (skipped when null) and
  /// returns the input adjoint.
  Eigen::VectorXd backward(const double* params, const Cache& cache,
                           const Eigen::VectorXd& out_bar, double* grad) const;

  /// Propagates an input tangent; returns the output tangent.
  Eigen::VectorXd tangent(const double* params, const Cache& cache,
                          const Eigen::VectorXd& in_dot, Tangent& tan) const;

  /// Reverse pass of s = out_bar . out + out_dot_bar . out_dot, where the
  /// input tangent is held fixed. Accumulates ds/dparams into grad and returns
  /// the primal input adjoint.
  Eigen::VectorXd backward_tangent(const double* params, const Cache& cache, const Tangent& tan,
                                   const Eigen::VectorXd& out_bar,
                                   const Eigen::VectorXd& out_dot_bar, double* grad) const;

 private:
  std::size_t weight_offset(int l) const { return layer_offset_[static_cast<std::size_t>(l)]; }

  std::vector<int> widths_;
  bool activate_output_ = false;
  std::size_t offset_ = 0;
  std::size_t count_ = 0;
  std::vector<std::size_t> layer_offset_;
};

struct NetworkConfig {
  int hidden = 64;
  /// Hidden layers of the scalar time network and of the main network.
  int layers = 3;
  /// Layers of the time encoder feeding the main network.
  int encoder_layers = 2;
  int embed_dim = 128;
};

/// Parameters of the two networks behind the learned potential:
/// a scalar time network r(t) and a vector field N(t, x) in R^d, built from a
/// time encoder whose features are concatenated with x.
class PotentialNetwork {
 public:
  /// Per-time quantities shared by every x evaluated at that time.
  struct TimeCache {
    double t = 0.0;
    double r = 0.0;
    Mlp::Cache r_cache;
    Mlp::Cache enc_cache;
    Eigen::VectorXd h;
  };

  PotentialNetwork(int dim, const NetworkConfig& config = {});

  static std::size_t parameter_count(int dim, const NetworkConfig& config = {});

  /// Fresh parameters; both output layers are zero so N = 0 and r is constant.
  void initialize(std::uint64_t seed);

  int dim() const { return dim_; }
  const NetworkConfig& config() const { return config_; }
  std::size_t size() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  const Mlp& r_net() const { return r_net_; }
  const Mlp& encoder() const { return encoder_; }
  const Mlp& main_net() const { return main_; }

  TimeCache time_features(double t) const;
  double r(double t) const;

  /// N(t, x) given the time features; fills cache for a later backward pass.
  Eigen::VectorXd field(const TimeCache& tc, const Eigen::VectorXd& x, Mlp::Cache& cache) const;

  struct Output {
    double r;
    Eigen::VectorXd n;
  };
  Output forward(double t, const Eigen::VectorXd& x) const;

  /// Accumulate upstream * dr(t)/dparams.
  void backward_r(const TimeCache& tc, double upstream, double* grad) const;
  /// Accumulate the encoder contribution for an adjoint on its output features.
  void backward_encoder(const TimeCache& tc, const Eigen::VectorXd& h_bar, double* grad) const;

 private:
  int dim_;
  NetworkConfig config_;
  Mlp r_net_;
  Mlp encoder_;
  Mlp main_;
  std::vector<double> params_;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  /// Staircase decay: lr * decay_rate^floor(step / decay_every). decay_every
  /// of 0 disables decay.
  double decay_rate = 0.95;
  int decay_every = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamOptions options;
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  AdamState() = default;
  AdamState(std::size_t n, const AdamOptions& opts);
  /// Learning rate applied by the next update.
  double current_lr() const;
};

/// One bias-corrected Adam update of theta in place.
void adam_step(AdamState& state, std::vector<double>& theta, const std::vector<double>& grad);

void save_checkpoint(const std::string& path, const PotentialNetwork& net);
PotentialNetwork load_checkpoint(const std::string& path);

}  // namespace pdds
