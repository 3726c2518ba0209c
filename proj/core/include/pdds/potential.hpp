#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pdds/neuralnet.hpp"
#include "pdds/schedule.hpp"
#include "pdds/target.hpp"

namespace pdds {

/// log g0(x) = log gamma(x) - log N(x; 0, I), so that the reference times g0
/// integrates to Z.
double log_g0(const Target& target, const Vec& x);
Vec grad_log_g0(const Target& target, const Vec& x);

/// log g0(kappa x): the guidance obtained by evaluating g0 at the conditional
/// mean of X_0 given X_k = x.
double simple_log_g(const Target& target, double kappa, const Vec& x);
/// Gradient in x of simple_log_g: kappa * grad log g0(kappa x).
Vec simple_grad_log_g(const Target& target, double kappa, const Vec& x);

enum class PotentialVariant { simple, neural };
std::string to_string(PotentialVariant v);
PotentialVariant potential_variant_from_string(const std::string& name);

/// Step-indexed guidance potential used by the sampler.
///
/// Every variant returns exactly g0 at step 0 and the constant 1 at the final
/// step K (log value 0, zero gradient).
class PotentialModel {
 public:
  PotentialModel(TargetPtr target, NoiseSchedule schedule);
  virtual ~PotentialModel() = default;

  virtual PotentialVariant variant() const = 0;

  const Target& target() const { return *target_; }
  const TargetPtr& target_ptr() const { return target_; }
  const NoiseSchedule& schedule() const { return schedule_; }

  double log_g(int k, const Vec& x) const;
  Vec grad_log_g(int k, const Vec& x) const;
  /// Value and gradient together; either output may be null.
  void evaluate(int k, const Vec& x, double* log_value, Vec* grad) const;

 protected:
  /// Called for 0 <= k < K only.
  virtual void evaluate_interior(int k, const Vec& x, double* log_value, Vec* grad) const = 0;

 private:
  TargetPtr target_;
  NoiseSchedule schedule_;
};

using PotentialPtr = std::shared_ptr<const PotentialModel>;

class SimplePotential final : public PotentialModel {
 public:
  using PotentialModel::PotentialModel;
  PotentialVariant variant() const override { return PotentialVariant::simple; }

 protected:
  void evaluate_interior(int k, const Vec& x, double* log_value, Vec* grad) const override;
};

/// Learned potential
///   log g(k, x) = c_k <N(t, x), x> + (1 - c_k) log g0(kappa_k x),
/// with t = k/K and c_k = r(t) - r(0). Time features for every step are
/// computed once at construction; the network must not change afterwards.
class NeuralPotential final : public PotentialModel {
 public:
  NeuralPotential(TargetPtr target, NoiseSchedule schedule,
                  std::shared_ptr<const PotentialNetwork> network);

  PotentialVariant variant() const override { return PotentialVariant::neural; }
  const PotentialNetwork& network() const { return *network_; }
  std::shared_ptr<const PotentialNetwork> network_ptr() const { return network_; }

  /// c_k = r(k/K) - r(0).
  double mixing(int k) const;
  const PotentialNetwork::TimeCache& time_cache(int k) const {
    return time_.at(static_cast<std::size_t>(k));
  }

  struct Gradients {
    std::vector<double> theta;
    Vec x;
  };
  /// Gradients of upstream * log g(k, x) with respect to the parameters and x.
  Gradients backprop(int k, const Vec& x, double upstream) const;

 protected:
  void evaluate_interior(int k, const Vec& x, double* log_value, Vec* grad) const override;

 private:
  std::shared_ptr<const PotentialNetwork> network_;
  std::vector<PotentialNetwork::TimeCache> time_;
};

std::shared_ptr<const SimplePotential> make_simple_potential(TargetPtr target,
                                                             const NoiseSchedule& schedule);

}  // namespace pdds
