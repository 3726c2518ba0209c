#include "pdds/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "pdds/errors.hpp"

namespace pdds {

namespace {

double normal_pdf(double x, double mean, double var) {
  return std::exp(-0.5 * (x - mean) * (x - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

}  // namespace

double EstimateSummary::linear_z_score(double known_log_z) const {
  const std::size_t n = log_z.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mean = 0.0;
  for (double v : log_z) mean += std::exp(v - known_log_z);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : log_z) {
    const double r = std::exp(v - known_log_z) - mean;
    ss += r * r;
  }
  const double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return (mean - 1.0) / se;
}

EstimateSummary summarize_logz(const std::vector<double>& log_z,
                               std::optional<double> known_log_z) {
  if (log_z.empty()) throw ParameterError("summarize_logz: no runs");
  EstimateSummary s;
  s.log_z = log_z;
  const auto n = static_cast<double>(log_z.size());
  for (double v : log_z) s.mean += v;
  s.mean /= n;
  if (log_z.size() > 1) {
    double ss = 0.0;
    for (double v : log_z) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (n - 1.0));
  }
  if (known_log_z) s.bias = s.mean - *known_log_z;

  s.log_linear_mean = log_sum_exp(log_z) - std::log(n);
  if (log_z.size() > 1) {
    double ss = 0.0;
    for (double v : log_z) {
      const double r = std::exp(v - s.log_linear_mean) - 1.0;
      ss += r * r;
    }
    s.linear_rel_se = std::sqrt(ss / (n - 1.0) / n);
  }
  return s;
}

EstimateSummary summarize_logz(const std::vector<RunReport>& runs,
                               std::optional<double> known_log_z) {
  std::vector<double> v;
  v.reserve(runs.size());
  for (const auto& r : runs) v.push_back(r.log_z);
  return summarize_logz(v, known_log_z);
}

SinkhornResult sinkhorn_w2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const SinkhornOptions& options) {
  if (a.cols() == 0 || b.cols() == 0) throw ParameterError("sinkhorn: empty sample set");
  if (a.rows() != b.rows()) throw ParameterError("sinkhorn: sample sets differ in dimension");
  if (options.max_iter < 1 || !(options.tol > 0.0)) {
    throw ParameterError("sinkhorn: need max_iter >= 1 and tol > 0");
  }
  const Eigen::Index n = a.cols();
  const Eigen::Index m = b.cols();
  Eigen::MatrixXd C(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) C(i, j) = (a.col(i) - b.col(j)).squaredNorm();
  }

  double eps = options.epsilon;
  if (!(eps > 0.0)) {
    std::vector<double> costs(C.data(), C.data() + C.size());
    const auto mid = costs.begin() + static_cast<std::ptrdiff_t>(costs.size() / 2);
    std::nth_element(costs.begin(), mid, costs.end());
    double scale = *mid;
    if (!(scale > 0.0)) scale = C.mean();
    if (!(scale > 0.0)) scale = 1.0;
    eps = 0.05 * scale;
  }

  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);

  // Row-major copy so both half-steps read contiguous memory.
  const Eigen::MatrixXd Ct = C.transpose();
  std::vector<double> buf(static_cast<std::size_t>(std::max(n, m)));
  auto soft_min = [&](const double* cost, const Eigen::VectorXd& pot, double e) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < pot.size(); ++i) {
      buf[static_cast<std::size_t>(i)] = (pot[i] - cost[i]) / e;
      mx = std::max(mx, buf[static_cast<std::size_t>(i)]);
    }
    if (!std::isfinite(mx)) return mx;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pot.size(); ++i) sum += std::exp(buf[static_cast<std::size_t>(i)] - mx);
    return mx + std::log(sum);
  };
  auto update = [&](double e) {
    for (Eigen::Index i = 0; i < n; ++i) f[i] = e * (log_a - soft_min(Ct.col(i).data(), g, e));
    for (Eigen::Index j = 0; j < m; ++j) g[j] = e * (log_b - soft_min(C.col(j).data(), f, e));
  };
  // After the g half-step the column marginals are exact; only rows can be off.
  auto violation = [&](double e) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double row = 0.0;
      const double* cost = Ct.col(i).data();
      for (Eigen::Index j = 0; j < m; ++j) row += std::exp((f[i] + g[j] - cost[j]) / e);
      v += std::abs(row - std::exp(log_a));
    }
    return v;
  };
  constexpr int kCheckEvery = 10;

  if (options.epsilon_scaling) {
    double e = std::max(C.maxCoeff(), eps);
    while (e > eps) {
      for (int it = 1; it <= 50; ++it) {
        update(e);
        if (it % kCheckEvery == 0 && violation(e) < options.tol) break;
      }
      e *= 0.5;
    }
  }

  SinkhornResult res;
  res.epsilon = eps;
  for (int it = 0; it < options.max_iter; ++it) {
    update(eps);
    ++res.iterations;
    if (res.iterations % kCheckEvery != 0 && it + 1 < options.max_iter) continue;
    res.marginal_violation = violation(eps);
    if (res.marginal_violation < options.tol) {
      res.converged = true;
      break;
    }
  }
  double cost = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      cost += std::exp((f[i] + g[j] - C(i, j)) / eps) * C(i, j);
    }
  }
  res.cost = cost;
  return res;
}

std::vector<double> mode_coverage(const Eigen::MatrixXd& samples, const std::vector<Vec>& centers,
                                  double radius, const std::vector<double>* log_weights) {
  if (!(radius > 0.0)) throw ParameterError("mode_coverage: radius must be positive");
  std::vector<double> frac(centers.size(), 0.0);
  const auto n = static_cast<std::size_t>(samples.cols());
  if (n == 0 || centers.empty()) return frac;
  if (log_weights != nullptr && log_weights->size() != n) {
    throw ParameterError("mode_coverage: one weight per sample required");
  }
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (log_weights != nullptr) {
    std::vector<double> lw = *log_weights;
    normalize_log_weights(lw);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(lw[i]);
  }
  const double r2 = radius * radius;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = samples.col(static_cast<Eigen::Index>(i));
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double dist = (x - centers[c]).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    if (best_d <= r2) frac[best] += w[i];
  }
  return frac;
}

DemoCurves tempering_vs_noising_demo(const std::vector<double>& grid,
                                     const std::vector<double>& times,
                                     const ScheduleParams& schedule) {
  if (grid.size() < 2) throw ParameterError("demo: grid needs at least two points");
  for (double x : grid) {
    if (!std::isfinite(x)) throw ParameterError("demo: grid must be finite");
  }
  const NoiseSchedule sched(schedule);
  const double weights[2] = {0.8, 0.2};
  const double means[2] = {-4.0, 4.0};
  const double vars[2] = {0.25, 1.0};

  DemoCurves out;
  out.grid = grid;
  out.times = times;
  for (double t : times) {
    if (!(t >= 0.0 && t <= sched.horizon())) throw ParameterError("demo: time outside horizon");
    const double lambda = t == 0.0 ? 0.0 : std::clamp(sched.lambda_continuous(t), 0.0, 1.0);
    const double kappa = std::sqrt(1.0 - lambda);
    const double eta = t / sched.horizon();

    std::vector<double> noised(grid.size());
    std::vector<double> log_temp(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double x = grid[i];
      double target = 0.0;
      double noisy = 0.0;
      for (int c = 0; c < 2; ++c) {
        target += weights[c] * normal_pdf(x, means[c], vars[c]);
        noisy += weights[c] * normal_pdf(x, kappa * means[c], kappa * kappa * vars[c] + lambda);
      }
      noised[i] = noisy;
      log_temp[i] = (1.0 - eta) * std::log(target) + eta * std::log(normal_pdf(x, 0.0, 1.0));
    }
    // Normalise the tempered curve with the trapezoid rule on the grid.
    const double peak = *std::max_element(log_temp.begin(), log_temp.end());
    std::vector<double> tempered(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) tempered[i] = std::exp(log_temp[i] - peak);
    double mass = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      mass += 0.5 * (tempered[i] + tempered[i - 1]) * (grid[i] - grid[i - 1]);
    }
    for (double& v : tempered) v /= mass;
    out.tempered.push_back(std::move(tempered));
    out.noised.push_back(std::move(noised));
  }
  return out;
}

void write_demo_csv(std::ostream& out, const DemoCurves& curves) {
  out << "t,x,density_tempered,density_noised\n";
  out.precision(17);
  for (std::size_t k = 0; k < curves.times.size(); ++k) {
    for (std::size_t i = 0; i < curves.grid.size(); ++i) {
      out << curves.times[k] << ',' << curves.grid[i] << ',' << curves.tempered[k][i] << ','
          << curves.noised[k][i] << '\n';
    }
  }
}

}  // namespace pdds
