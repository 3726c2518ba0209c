#include "pdds/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pdds/errors.hpp"
#include "pdds/parallel.hpp"

namespace pdds {

namespace {

constexpr std::uint64_t kPairTag = 21;
constexpr std::uint64_t kRoundRunTag = 22;
constexpr std::uint64_t kRoundTrainTag = 23;
constexpr std::uint64_t kFinalRunTag = 24;
// Pairs per gradient accumulation buffer. Fixed so the floating-point
// reduction order does not depend on the thread count.
constexpr int kChunk = 16;

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::dsm ? "dsm" : "nsm"; }

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "dsm") return LossKind::dsm;
  if (name == "nsm") return LossKind::nsm;
  throw ParameterError("unknown loss '" + name + "'");
}

void TrainConfig::validate() const {
  if (batch < 1) throw ParameterError("train.batch must be >= 1");
  if (updates < 0) throw ParameterError("train.updates must be >= 0");
  if (rounds < 1) throw ParameterError("train.rounds must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ParameterError("train.lr must be positive");
}

TrainingPair make_training_pair(const Vec& x0, int k, const NoiseSchedule& schedule,
                                RandomStream& rng) {
  TrainingPair p;
  p.x0 = x0;
  p.k = k;
  p.xk = schedule.kappa_at(k) * x0 + std::sqrt(schedule.lambda_at(k)) * rng.normal_vector(x0.size());
  return p;
}

namespace {

// Adjoints on the time-network outputs of one pair. The parameter gradient of
// r and the encoder is linear in them, so a batch can sum them per step and
// backpropagate through the time networks once per distinct step.
struct TimeAdjoint {
  double r_k = 0.0;  // on r(t_k); r(0) receives the negative
  Eigen::VectorXd h;  // on the encoder features at t_k; empty when unused
};

// Loss and main-network gradient; the time-network part goes to adj.
double local_loss_deferred(const PotentialNetwork& net, const PotentialNetwork::TimeCache& tc_k,
                           const PotentialNetwork::TimeCache& tc_0, const Target& target,
                           const NoiseSchedule& schedule, LossKind kind, const TrainingPair& pair,
                           double* grad, TimeAdjoint* adj) {
  const int k = pair.k;
  const int K = schedule.steps();
  if (k < 1 || k > K) throw ParameterError("training pair step must lie in [1, K]");
  const double kappa = schedule.kappa_at(k);
  const double lambda = schedule.lambda_at(k);
  const Vec& x = pair.xk;

  // Everything in the residual except the model's grad log g.
  Vec offset;
  if (kind == LossKind::nsm) {
    const Vec g0 = grad_log_g0(target, pair.x0);
    if (!g0.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    offset = -kappa * g0;
  } else {
    if (!(lambda > 0.0)) throw ParameterError("dsm loss undefined where lambda_k = 0");
    offset = -x + (x - kappa * pair.x0) / lambda;
  }

  if (k == K) return offset.squaredNorm();

  const double c = tc_k.r - tc_0.r;
  const Vec gG = kappa * grad_log_g0(target, kappa * x);
  Mlp::Cache cache;
  const Vec n = net.field(tc_k, x, cache);
  const double* params = net.params().data();
  const Eigen::VectorXd in_bar = net.main_net().backward(params, cache, x, nullptr);
  const Vec jx = in_bar.tail(x.size()) + n;  // grad_x <N(t, x), x>
  const Vec u = c * jx + (1.0 - c) * gG + offset;
  const double loss = u.squaredNorm();
  if (grad == nullptr) return loss;

  adj->r_k = 2.0 * u.dot(jx - gG);
  adj->h.resize(0);
  if (c != 0.0) {
    const int h = net.config().hidden;
    Eigen::VectorXd in_dot(h + x.size());
    in_dot << Eigen::VectorXd::Zero(h), u;
    Mlp::Tangent tan;
    net.main_net().tangent(params, cache, in_dot, tan);
    const Eigen::VectorXd h_in_bar =
        net.main_net().backward_tangent(params, cache, tan, 2.0 * c * u, 2.0 * c * x, grad);
    adj->h = h_in_bar.head(h);
  }
  return loss;
}

}  // namespace

double local_loss(const PotentialNetwork& net, const PotentialNetwork::TimeCache& tc_k,
                  const PotentialNetwork::TimeCache& tc_0, const Target& target,
                  const NoiseSchedule& schedule, LossKind kind, const TrainingPair& pair,
                  double* grad) {
  TimeAdjoint adj;
  const double loss =
      local_loss_deferred(net, tc_k, tc_0, target, schedule, kind, pair, grad, &adj);
  if (grad == nullptr || std::isnan(loss) || pair.k == schedule.steps()) return loss;
  net.backward_r(tc_k, adj.r_k, grad);
  net.backward_r(tc_0, -adj.r_k, grad);
  if (adj.h.size() > 0) net.backward_encoder(tc_k, adj.h, grad);
  return loss;
}

namespace {

LossValue local_loss_value(const NeuralPotential& model, LossKind kind, const TrainingPair& pair) {
  LossValue out;
  out.grad.assign(model.network().size(), 0.0);
  out.loss = local_loss(model.network(), model.time_cache(pair.k), model.time_cache(0),
                        model.target(), model.schedule(), kind, pair, out.grad.data());
  return out;
}

}  // namespace

LossValue dsm_local_loss(const NeuralPotential& model, const TrainingPair& pair) {
  return local_loss_value(model, LossKind::dsm, pair);
}

LossValue nsm_local_loss(const NeuralPotential& model, const TrainingPair& pair) {
  return local_loss_value(model, LossKind::nsm, pair);
}

Vec loss_residual(const NeuralPotential& model, LossKind kind, const TrainingPair& pair) {
  const double kappa = model.schedule().kappa_at(pair.k);
  const Vec g = model.grad_log_g(pair.k, pair.xk);
  if (kind == LossKind::nsm) return g - kappa * grad_log_g0(model.target(), pair.x0);
  const double lambda = model.schedule().lambda_at(pair.k);
  return g - pair.xk + (pair.xk - kappa * pair.x0) / lambda;
}

TrainStats train_potential(const Eigen::MatrixXd& particles, const std::vector<double>& log_weights,
                           PotentialNetwork& network, const TrainConfig& config,
                           const NoiseSchedule& schedule, TargetPtr target, std::uint64_t seed,
                           int round) {
  config.validate();
  if (!target) throw ParameterError("train: null target");
  const auto n = static_cast<std::size_t>(particles.cols());
  if (n == 0) throw ParameterError("train: particle set is empty");
  if (log_weights.size() != n) throw ParameterError("train: one log weight per particle required");
  if (particles.rows() != network.dim()) throw ParameterError("train: dimension mismatch");

  std::vector<double> lw = log_weights;
  if (!std::isfinite(normalize_log_weights(lw))) throw TrainingError("train: all weights are zero");
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) cumulative[i] = (acc += std::exp(lw[i]));

  const int K = schedule.steps();
  const int B = config.batch;
  const int n_chunks = (B + kChunk - 1) / kChunk;
  const std::size_t P = network.size();

  TrainStats stats;
  AdamState adam(P, config.adam);
  std::vector<TrainingPair> pairs(static_cast<std::size_t>(B));
  std::vector<std::vector<double>> chunk_grad(static_cast<std::size_t>(n_chunks),
                                              std::vector<double>(P));
  std::vector<double> chunk_loss(static_cast<std::size_t>(n_chunks));
  std::vector<int> chunk_count(static_cast<std::size_t>(n_chunks));
  std::vector<double> grad(P);
  std::vector<TimeAdjoint> adjoints(static_cast<std::size_t>(B));

  for (int upd = 0; upd < config.updates; ++upd) {
    for (int b = 0; b < B; ++b) {
      RandomStream rng(seed, {kPairTag, static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(upd), static_cast<std::uint64_t>(b)});
      const double u = rng.uniform() * acc;
      auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
      const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
      const int k = 1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(K)));
      pairs[static_cast<std::size_t>(b)] =
          make_training_pair(particles.col(static_cast<Eigen::Index>(idx)), k, schedule, rng);
    }
    std::map<int, PotentialNetwork::TimeCache> time;
    time.emplace(0, network.time_features(0.0));
    for (const auto& p : pairs) {
      if (!time.count(p.k)) time.emplace(p.k, network.time_features(static_cast<double>(p.k) / K));
    }

    parallel_for(static_cast<std::size_t>(n_chunks), [&](std::size_t c) {
      auto& g = chunk_grad[c];
      std::fill(g.begin(), g.end(), 0.0);
      double sum = 0.0;
      int count = 0;
      const int lo = static_cast<int>(c) * kChunk;
      const int hi = std::min(B, lo + kChunk);
      for (int b = lo; b < hi; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        const auto& p = pairs[ub];
        adjoints[ub] = TimeAdjoint{};
        const double l = local_loss_deferred(network, time.at(p.k), time.at(0), *target, schedule,
                                             config.loss, p, g.data(), &adjoints[ub]);
        if (std::isnan(l)) {
          adjoints[ub] = TimeAdjoint{};
          continue;
        }
        sum += l;
        ++count;
      }
      chunk_loss[c] = sum;
      chunk_count[c] = count;
    });

    int count = 0;
    double loss = 0.0;
    std::fill(grad.begin(), grad.end(), 0.0);
    for (int c = 0; c < n_chunks; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      count += chunk_count[uc];
      loss += chunk_loss[uc];
      for (std::size_t i = 0; i < P; ++i) grad[i] += chunk_grad[uc][i];
    }
    // Time-network gradients: adjoints summed per step in pair order.
    std::map<int, TimeAdjoint> per_step;
    for (int b = 0; b < B; ++b) {
      const auto ub = static_cast<std::size_t>(b);
      const int k = pairs[ub].k;
      if (k == K) continue;
      auto& acc_k = per_step[k];
      acc_k.r_k += adjoints[ub].r_k;
      if (adjoints[ub].h.size() > 0) {
        if (acc_k.h.size() == 0) acc_k.h = Eigen::VectorXd::Zero(adjoints[ub].h.size());
        acc_k.h += adjoints[ub].h;
      }
    }
    double r0_adj = 0.0;
    for (const auto& [k, a] : per_step) {
      network.backward_r(time.at(k), a.r_k, grad.data());
      r0_adj -= a.r_k;
      if (a.h.size() > 0) network.backward_encoder(time.at(k), a.h, grad.data());
    }
    network.backward_r(time.at(0), r0_adj, grad.data());
    stats.skipped_pairs += B - count;
    if (count == 0) {
      throw TrainingError("every training pair was skipped at update " + std::to_string(upd));
    }
    const double inv = 1.0 / count;
    for (double& g : grad) g *= inv;
    adam_step(adam, network.params(), grad);
    stats.losses.push_back({round, upd, loss * inv});
  }
  return stats;
}

RefineResult refine(TargetPtr target, const NoiseSchedule& schedule, const SMCConfig& smc,
                    const TrainConfig& train, std::uint64_t seed, const NetworkConfig& net_config,
                    std::shared_ptr<PotentialNetwork> start) {
  train.validate();
  smc.validate();
  if (!target) throw ParameterError("refine: null target");
  RefineResult result;
  result.network = start;
  if (!result.network) {
    result.network = std::make_shared<PotentialNetwork>(target->dim(), net_config);
    result.network->initialize(train.init_seed);
  }

  auto sample_with_current = [&](std::uint64_t run_seed) {
    auto snapshot = std::make_shared<const PotentialNetwork>(*result.network);
    NeuralPotential potential(target, schedule, std::move(snapshot));
    return run_pdds_adaptive(potential, smc, run_seed);
  };

  for (int r = 0; r < train.rounds; ++r) {
    const auto ur = static_cast<std::uint64_t>(r);
    try {
      result.reports.push_back(sample_with_current(RandomStream(seed, {kRoundRunTag, ur}).key()));
    } catch (const DegenerateRunError& e) {
      result.aborted = "round " + std::to_string(r) + ": " + e.what();
      return result;
    }
    const auto& rep = result.reports.back();
    auto stats = train_potential(rep.samples, rep.log_weights, *result.network, train, schedule,
                                 target, RandomStream(seed, {kRoundTrainTag, ur}).key(), r);
    result.losses.insert(result.losses.end(), stats.losses.begin(), stats.losses.end());
    result.skipped_pairs += stats.skipped_pairs;
  }
  try {
    result.reports.push_back(sample_with_current(RandomStream(seed, {kFinalRunTag}).key()));
  } catch (const DegenerateRunError& e) {
    result.aborted = std::string("final run: ") + e.what();
  }
  return result;
}

}  // namespace pdds
