#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include <pdds/errors.hpp>
#include <pdds/metrics.hpp>
#include <pdds/parallel.hpp>
#include <pdds/potential.hpp>
#include <pdds/smc.hpp>
#include <pdds/train.hpp>
#include <pdds/vi.hpp>

namespace pdds::cli {

namespace fs = std::filesystem;
using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw DataError("failed writing '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

namespace {

std::string out_path(const ExperimentConfig& c, const std::string& name) {
  return (fs::path(c.out) / name).string();
}

void ensure_out_dir(const ExperimentConfig& c) { fs::create_directories(c.out); }

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vec json_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Reparameterization read_reparameterization(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
    Reparameterization rep{json_vec(j.at("mean")), json_vec(j.at("scale"))};
    if (rep.mean.size() != dim || rep.scale.size() != dim) {
      throw DataError("'" + path + "' does not match the target dimension");
    }
    return rep;
  } catch (const json::exception& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

struct PreparedTarget {
  TargetPtr raw;
  TargetPtr sampled;  // raw, or its reparameterisation
  std::optional<Reparameterization> rep;
};

PreparedTarget prepare_target(const ExperimentConfig& c, std::ostream& log) {
  PreparedTarget p;
  p.raw = build_target(c);
  p.sampled = p.raw;
  if (!c.vi_enabled) return p;
  if (!c.vi_load_path.empty()) {
    p.rep = read_reparameterization(c.vi_load_path, p.raw->dim());
    log << "vi: loaded reparameterization from " << c.vi_load_path << '\n';
  } else {
    p.rep = fit_meanfield(*p.raw, c.vi, c.vi_seed).rep;
    log << "vi: fitted mean-field reparameterization\n";
  }
  p.sampled = reparameterize(p.raw, *p.rep);
  return p;
}

PotentialPtr make_potential(const ExperimentConfig& c, const TargetPtr& target) {
  const NoiseSchedule schedule(c.schedule);
  if (c.potential == PotentialVariant::simple) return make_simple_potential(target, schedule);
  if (c.checkpoint.empty()) {
    throw ConfigError("potential.variant = neural requires potential.checkpoint");
  }
  auto net = std::make_shared<const PotentialNetwork>(load_checkpoint(c.checkpoint));
  if (net->dim() != target->dim()) {
    throw ConfigError("checkpoint dimension does not match the target");
  }
  return std::make_shared<NeuralPotential>(target, schedule, std::move(net));
}

SMCConfig smc_config(const ExperimentConfig& c) {
  SMCConfig s = c.smc;
  if (c.mcmc.n_steps > 0) s.mcmc = c.mcmc;
  return s;
}

RunReport run_once(const ExperimentConfig& c, const PotentialModel& model, std::uint64_t seed) {
  const SMCConfig s = smc_config(c);
  return c.mode == SmcMode::adaptive ? run_pdds_adaptive(model, s, seed) : run_pdds(model, s, seed);
}

void to_original_space(RunReport& report, const std::optional<Reparameterization>& rep) {
  if (!rep) return;
  for (Eigen::Index j = 0; j < report.samples.cols(); ++j) {
    report.samples.col(j) = rep->to_original(report.samples.col(j));
  }
}

// Runs body(i) for every seed index on a bounded pool. Per-particle loops run
// single-threaded while more than one seed is in flight.
void for_each_seed(const ExperimentConfig& c, const std::function<void(std::size_t)>& body) {
  const std::size_t n = c.seeds.size();
  unsigned workers = c.threads > 0 ? static_cast<unsigned>(c.threads)
                                   : std::max(1U, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    set_num_threads(c.threads);
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  set_num_threads(1);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  set_num_threads(c.threads);
  if (error) std::rethrow_exception(error);
}

std::string run_file(const ExperimentConfig& c, std::uint64_t seed) {
  return out_path(c, "run-" + std::to_string(seed) + ".jsonl");
}

}  // namespace

int cmd_vi(const ExperimentConfig& c, std::ostream& log) {
  ensure_out_dir(c);
  const TargetPtr target = build_target(c);
  json j;
  if (!c.vi_load_path.empty()) {
    const auto rep = read_reparameterization(c.vi_load_path, target->dim());
    j = {{"mean", vec_json(rep.mean)}, {"scale", vec_json(rep.scale)}, {"loaded", true}};
    log << "vi: reusing " << c.vi_load_path << " (fit skipped)\n";
  } else {
    const VIResult res = fit_meanfield(*target, c.vi, c.vi_seed);
    const std::size_t n = res.elbo_trace.size();
    const std::size_t window = std::max<std::size_t>(1, n / 10);
    double tail = 0.0;
    for (std::size_t i = n - window; i < n; ++i) tail += res.elbo_trace[i];
    j = {{"mean", vec_json(res.rep.mean)},
         {"scale", vec_json(res.rep.scale)},
         {"elbo_final_window", tail / static_cast<double>(window)},
         {"steps", c.vi.steps},
         {"redraws", res.redraws},
         {"loaded", false}};
  }
  write_file_atomic(out_path(c, "vi.json"), j.dump(2) + "\n");
  log << "vi: mean " << j["mean"].dump() << " scale " << j["scale"].dump() << '\n';
  return kExitOk;
}

int cmd_sample(const ExperimentConfig& c, std::ostream& log) {
  ensure_out_dir(c);
  const PreparedTarget prepared = prepare_target(c, log);
  const PotentialPtr model = make_potential(c, prepared.sampled);

  std::vector<json> records(c.seeds.size());
  for_each_seed(c, [&](std::size_t i) {
    const std::uint64_t seed = c.seeds[i];
    try {
      RunReport report = run_once(c, *model, seed);
      to_original_space(report, prepared.rep);
      std::ostringstream buf;
      write_run_report(buf, report, c.thin);
      write_file_atomic(run_file(c, seed), buf.str());
      records[i] = {{"seed", seed}, {"log_Z", report.log_z},
                    {"resample_events", report.resample_count()}};
    } catch (const DegenerateRunError& e) {
      records[i] = {{"seed", seed}, {"error", e.what()}, {"step", e.step()}};
    } catch (const ProposalError& e) {
      records[i] = {{"seed", seed}, {"error", e.what()}, {"particle", e.particle()}};
    }
  });

  std::string merged;
  std::size_t ok = 0;
  for (const auto& r : records) {
    merged += r.dump() + "\n";
    if (r.contains("log_Z")) ++ok;
  }
  write_file_atomic(out_path(c, "logz.jsonl"), merged);
  log << "sample: " << ok << " of " << records.size() << " seeds succeeded; logs in " << c.out
      << '\n';
  return ok > 0 ? kExitOk : kExitRuntime;
}

int cmd_train(const ExperimentConfig& c, std::ostream& log) {
  ensure_out_dir(c);
  set_num_threads(c.threads);
  const PreparedTarget prepared = prepare_target(c, log);
  const NoiseSchedule schedule(c.schedule);
  std::shared_ptr<PotentialNetwork> start;
  if (!c.checkpoint.empty()) {
    start = std::make_shared<PotentialNetwork>(load_checkpoint(c.checkpoint));
  }
  const RefineResult res = refine(prepared.sampled, schedule, smc_config(c), c.train,
                                  c.seeds.front(), c.net, start);

  save_checkpoint(out_path(c, "network.bin"), *res.network);
  std::string trace;
  for (const auto& l : res.losses) {
    trace += json{{"round", l.round}, {"update", l.update}, {"loss", l.loss}}.dump() + "\n";
  }
  write_file_atomic(out_path(c, "train.jsonl"), trace);
  for (std::size_t r = 0; r < res.reports.size(); ++r) {
    RunReport report = res.reports[r];
    to_original_space(report, prepared.rep);
    std::ostringstream buf;
    write_run_report(buf, report, c.thin);
    const bool final_run = r + 1 == res.reports.size() && !res.aborted;
    write_file_atomic(out_path(c, final_run ? "train-final.jsonl"
                                            : "train-round-" + std::to_string(r) + ".jsonl"),
                      buf.str());
  }
  log << "train: " << res.losses.size() << " updates over " << c.train.rounds << " rounds";
  if (!res.reports.empty()) log << ", final log Z " << res.reports.back().log_z;
  log << "; checkpoint " << out_path(c, "network.bin") << '\n';
  if (res.aborted) {
    log << "train: aborted: " << *res.aborted << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_eval(const ExperimentConfig& c, std::ostream& log) {
  std::vector<RunReport> runs;
  for (std::uint64_t seed : c.seeds) {
    const std::string path = run_file(c, seed);
    std::ifstream in(path);
    if (!in) throw ConfigError("eval: missing run log '" + path + "'");
    runs.push_back(read_run_report(in));
  }
  const TargetPtr target = build_target(c);
  const EstimateSummary s = summarize_logz(runs, target->known_log_z());

  json j{{"count", s.count()},
         {"mean_log_Z", s.mean},
         {"sd_log_Z", s.sd},
         {"log_linear_mean_Z", s.log_linear_mean},
         {"linear_mean_Z", std::exp(s.log_linear_mean)},
         {"linear_rel_se", s.linear_rel_se}};
  if (s.bias) j["bias"] = *s.bias;
  if (const auto known = target->known_log_z()) {
    j["known_log_Z"] = *known;
    if (s.count() > 1) j["linear_z_score"] = s.linear_z_score(*known);
  }

  const auto centers = mode_centers(c);
  if (!centers.empty()) {
    std::vector<std::vector<double>> per_seed;
    for (const auto& r : runs) {
      per_seed.push_back(mode_coverage(r.samples, centers, c.eval_radius, &r.log_weights));
    }
    std::vector<double> median(centers.size());
    for (std::size_t m = 0; m < centers.size(); ++m) {
      std::vector<double> v;
      for (const auto& f : per_seed) v.push_back(f[m]);
      std::sort(v.begin(), v.end());
      const std::size_t h = v.size() / 2;
      median[m] = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    }
    j["coverage_radius"] = c.eval_radius;
    j["coverage_median"] = median;
  }

  if (c.eval_sinkhorn_enabled && target->has_exact_sampler()) {
    const auto n = static_cast<Eigen::Index>(c.eval_exact_samples);
    std::vector<double> costs;
    std::vector<bool> converged;
    for (const auto& r : runs) {
      RandomStream rng(r.seed, {0x65766131ULL});
      Eigen::MatrixXd exact(target->dim(), n);
      for (Eigen::Index i = 0; i < n; ++i) exact.col(i) = target->sample(rng);
      std::vector<double> w = r.log_weights;
      normalize_log_weights(w);
      for (double& v : w) v = std::exp(v);
      // Equal-weight subsample of the run by systematic resampling.
      const auto idx = resample_indices(w, ResampleScheme::systematic, rng);
      const Eigen::Index m = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(idx.size()));
      Eigen::MatrixXd ours(target->dim(), m);
      const double stride = static_cast<double>(idx.size()) / static_cast<double>(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        ours.col(i) = r.samples.col(static_cast<Eigen::Index>(
            idx[static_cast<std::size_t>(std::floor(static_cast<double>(i) * stride))]));
      }
      const SinkhornResult sk = sinkhorn_w2(ours, exact, c.eval_sinkhorn);
      costs.push_back(sk.cost);
      converged.push_back(sk.converged);
    }
    j["sinkhorn_w2"] = costs;
    j["sinkhorn_converged"] = converged;
  }

  write_file_atomic(out_path(c, "eval.json"), j.dump(2) + "\n");
  log << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_demo(const ExperimentConfig& c, std::ostream& log) {
  ensure_out_dir(c);
  std::vector<double> grid(static_cast<std::size_t>(c.demo_points));
  for (int i = 0; i < c.demo_points; ++i) {
    grid[static_cast<std::size_t>(i)] =
        c.demo_min + (c.demo_max - c.demo_min) * i / (c.demo_points - 1);
  }
  const DemoCurves curves = tempering_vs_noising_demo(grid, c.demo_times, c.schedule);
  std::ostringstream buf;
  write_demo_csv(buf, curves);
  write_file_atomic(out_path(c, "demo.csv"), buf.str());
  log << "demo: wrote " << out_path(c, "demo.csv") << " (tempering ladder eta_t = t)\n";
  return kExitOk;
}

}  // namespace pdds::cli
