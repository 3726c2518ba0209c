#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include <pdds/neuralnet.hpp>
#include <pdds/potential.hpp>
#include <pdds/resample.hpp>
#include <pdds/smc.hpp>
#include <pdds/target.hpp>
#include <pdds/train.hpp>

using namespace pdds;

namespace {

std::vector<double> random_weights(std::size_t n) {
  RandomStream rng(1);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) total += (x = rng.uniform());
  for (double& x : w) x /= total;
  return w;
}

void BM_ProposeAndWeight(benchmark::State& state) {
  const auto model = make_simple_potential(make_mixture6(), NoiseSchedule::cosine(16));
  RandomStream rng(2);
  const Vec x_next = rng.normal_vector(2), eps = rng.normal_vector(2);
  for (auto _ : state) {
    const Vec x = propose(x_next, 7, *model, Integrator::standard, eps);
    benchmark::DoNotOptimize(log_weight(x, x_next, 7, *model, Integrator::standard));
  }
}
BENCHMARK(BM_ProposeAndWeight);

void BM_SimplePotentialRun(benchmark::State& state) {
  const auto model = make_simple_potential(make_mixture6(), NoiseSchedule::cosine(16));
  SMCConfig cfg;
  cfg.particles = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_pdds_adaptive(*model, cfg, ++seed).log_z);
  state.SetItemsProcessed(state.iterations() * state.range(0) * 16);
}
BENCHMARK(BM_SimplePotentialRun)->Arg(512)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_NetworkForward(benchmark::State& state) {
  PotentialNetwork net(2);
  net.initialize(3);
  const auto tc = net.time_features(0.4);
  const Vec x = Vec::Constant(2, 0.3);
  Mlp::Cache cache;
  for (auto _ : state) benchmark::DoNotOptimize(net.field(tc, x, cache));
}
BENCHMARK(BM_NetworkForward);

void BM_NeuralBackprop(benchmark::State& state) {
  auto net = std::make_shared<PotentialNetwork>(2);
  net->initialize(4);
  NeuralPotential model(make_mixture6(), NoiseSchedule::cosine(16), net);
  const Vec x = Vec::Constant(2, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(model.backprop(5, x, 1.0));
}
BENCHMARK(BM_NeuralBackprop);

void BM_NsmLocalLoss(benchmark::State& state) {
  const auto target = make_mixture6();
  const auto schedule = NoiseSchedule::cosine(16);
  auto net = std::make_shared<PotentialNetwork>(2);
  net->initialize(5);
  NeuralPotential model(target, schedule, net);
  RandomStream rng(6);
  const auto pair = make_training_pair(target->sample(rng), 5, schedule, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nsm_local_loss(model, pair));
}
BENCHMARK(BM_NsmLocalLoss);

void BM_Resample(benchmark::State& state) {
  const auto scheme = static_cast<ResampleScheme>(state.range(0));
  const std::size_t n = 2000;
  const auto w = random_weights(n);
  RandomStream rng(7);
  Eigen::MatrixXd pos(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < pos.cols(); ++i) pos.col(i) = rng.normal_vector(2);
  for (auto _ : state) benchmark::DoNotOptimize(resample_indices(w, scheme, rng, &pos));
  state.SetLabel(to_string(scheme));
}
BENCHMARK(BM_Resample)->DenseRange(0, 3);

void BM_HilbertOrder(benchmark::State& state) {
  RandomStream rng(8);
  Eigen::MatrixXd pos(state.range(0), 2000);
  for (Eigen::Index i = 0; i < pos.cols(); ++i) pos.col(i) = rng.normal_vector(pos.rows());
  for (auto _ : state) benchmark::DoNotOptimize(hilbert_order(pos));
}
BENCHMARK(BM_HilbertOrder)->Arg(2)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
