#include "pdds/potential.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "pdds/errors.hpp"

namespace pdds {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

double log_g0(const Target& target, const Vec& x) {
  return target.log_density(x) + 0.5 * x.squaredNorm() + 0.5 * target.dim() * kLog2Pi;
}

Vec grad_log_g0(const Target& target, const Vec& x) { return target.grad_log_density(x) + x; }

double simple_log_g(const Target& target, double kappa, const Vec& x) {
  return log_g0(target, kappa * x);
}

Vec simple_grad_log_g(const Target& target, double kappa, const Vec& x) {
  return kappa * grad_log_g0(target, kappa * x);
}

std::string to_string(PotentialVariant v) {
  return v == PotentialVariant::simple ? "simple" : "neural";
}

PotentialVariant potential_variant_from_string(const std::string& name) {
  if (name == "simple") return PotentialVariant::simple;
  if (name == "neural") return PotentialVariant::neural;
  throw ParameterError("unknown potential variant '" + name + "'");
}

PotentialModel::PotentialModel(TargetPtr target, NoiseSchedule schedule)
    : target_(std::move(target)), schedule_(std::move(schedule)) {
  if (!target_) throw ParameterError("potential: null target");
}

void PotentialModel::evaluate(int k, const Vec& x, double* log_value, Vec* grad) const {
  if (k < 0 || k > schedule_.steps()) {
    throw std::out_of_range("potential step " + std::to_string(k) + " out of range");
  }
  if (k == schedule_.steps()) {
    if (log_value != nullptr) *log_value = 0.0;
    if (grad != nullptr) *grad = Vec::Zero(x.size());
    return;
  }
  evaluate_interior(k, x, log_value, grad);
}

double PotentialModel::log_g(int k, const Vec& x) const {
  double v = 0.0;
  evaluate(k, x, &v, nullptr);
  return v;
}

Vec PotentialModel::grad_log_g(int k, const Vec& x) const {
  Vec g;
  evaluate(k, x, nullptr, &g);
  return g;
}

void SimplePotential::evaluate_interior(int k, const Vec& x, double* log_value,
                                        Vec* grad) const {
  const double kappa = schedule().kappa_at(k);
  const Vec y = kappa * x;
  if (log_value != nullptr) *log_value = log_g0(target(), y);
  if (grad != nullptr) *grad = kappa * grad_log_g0(target(), y);
}

NeuralPotential::NeuralPotential(TargetPtr target, NoiseSchedule schedule,
                                 std::shared_ptr<const PotentialNetwork> network)
    : PotentialModel(std::move(target), std::move(schedule)), network_(std::move(network)) {
  if (!network_) throw ParameterError("neural potential: null network");
  if (network_->dim() != this->target().dim()) {
    throw ParameterError("neural potential: network dimension " +
                         std::to_string(network_->dim()) + " does not match target dimension " +
                         std::to_string(this->target().dim()));
  }
  const int K = this->schedule().steps();
  time_.reserve(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    time_.push_back(network_->time_features(static_cast<double>(k) / K));
  }
}

double NeuralPotential::mixing(int k) const {
  return time_.at(static_cast<std::size_t>(k)).r - time_.front().r;
}

void NeuralPotential::evaluate_interior(int k, const Vec& x, double* log_value,
                                        Vec* grad) const {
  const double kappa = schedule().kappa_at(k);
  const double c = mixing(k);
  const Vec y = kappa * x;
  const double G = log_value != nullptr ? log_g0(target(), y) : 0.0;
  if (c == 0.0) {
    if (log_value != nullptr) *log_value = G;
    if (grad != nullptr) *grad = kappa * grad_log_g0(target(), y);
    return;
  }
  const auto& tc = time_[static_cast<std::size_t>(k)];
  Mlp::Cache cache;
  const Vec n = network_->field(tc, x, cache);
  if (log_value != nullptr) *log_value = c * n.dot(x) + (1.0 - c) * G;
  if (grad != nullptr) {
    const Eigen::VectorXd in_bar =
        network_->main_net().backward(network_->params().data(), cache, x, nullptr);
    *grad = c * (in_bar.tail(x.size()) + n) + (1.0 - c) * kappa * grad_log_g0(target(), y);
  }
}

NeuralPotential::Gradients NeuralPotential::backprop(int k, const Vec& x,
                                                     double upstream) const {
  Gradients out;
  out.theta.assign(network_->size(), 0.0);
  out.x = Vec::Zero(x.size());
  if (k == schedule().steps()) return out;

  double value = 0.0;
  Vec grad;
  evaluate(k, x, &value, &grad);
  out.x = upstream * grad;

  const double kappa = schedule().kappa_at(k);
  const double c = mixing(k);
  const auto& tc = time_.at(static_cast<std::size_t>(k));
  Mlp::Cache cache;
  const Vec n = network_->field(tc, x, cache);
  const double G = log_g0(target(), kappa * x);
  double* g = out.theta.data();

  // d/dc of log g is <n, x> - G; c depends on the time network at t and at 0.
  const double dc = upstream * (n.dot(x) - G);
  network_->backward_r(tc, dc, g);
  network_->backward_r(time_.front(), -dc, g);

  const Eigen::VectorXd in_bar =
      network_->main_net().backward(network_->params().data(), cache, upstream * c * x, g);
  network_->backward_encoder(tc, in_bar.head(network_->config().hidden), g);
  return out;
}

std::shared_ptr<const SimplePotential> make_simple_potential(TargetPtr target,
                                                             const NoiseSchedule& schedule) {
  return std::make_shared<SimplePotential>(std::move(target), schedule);
}

}  // namespace pdds
