#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "pdds/errors.hpp"
#include "pdds/smc.hpp"

namespace pdds {

using nlohmann::json;

void write_run_report(std::ostream& out, const RunReport& report, std::size_t thin) {
  if (thin == 0) thin = 1;
  for (const auto& s : report.steps) {
    json rec{{"seed", report.seed},
             {"step", s.step},
             {"ess", s.ess},
             {"resampled", s.resampled},
             {"log_Z_partial", s.log_z_partial}};
    if (!std::isnan(s.acceptance)) rec["acceptance"] = s.acceptance;
    out << rec.dump() << '\n';
  }
  json samples = json::array();
  json log_weights = json::array();
  for (Eigen::Index j = 0; j < report.samples.cols(); j += static_cast<Eigen::Index>(thin)) {
    json point = json::array();
    for (Eigen::Index i = 0; i < report.samples.rows(); ++i) point.push_back(report.samples(i, j));
    samples.push_back(std::move(point));
    if (static_cast<std::size_t>(j) < report.log_weights.size()) {
      log_weights.push_back(report.log_weights[static_cast<std::size_t>(j)]);
    }
  }
  json fin{{"seed", report.seed},
           {"final", true},
           {"log_Z", report.log_z},
           {"dim", report.samples.rows()},
           {"thin", thin},
           {"samples", std::move(samples)},
           {"log_weights", std::move(log_weights)}};
  out << fin.dump() << '\n';
}

RunReport read_run_report(std::istream& in) {
  RunReport report;
  std::string line;
  bool have_final = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("run log line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (rec.value("final", false)) {
        report.seed = rec.at("seed").get<std::uint64_t>();
        report.log_z = rec.at("log_Z").get<double>();
        const auto& samples = rec.at("samples");
        const auto d = rec.at("dim").get<Eigen::Index>();
        report.samples.resize(d, static_cast<Eigen::Index>(samples.size()));
        for (std::size_t j = 0; j < samples.size(); ++j) {
          if (static_cast<Eigen::Index>(samples[j].size()) != d) {
            throw DataError("run log: sample has wrong dimension");
          }
          for (Eigen::Index i = 0; i < d; ++i) {
            report.samples(i, static_cast<Eigen::Index>(j)) =
                samples[j][static_cast<std::size_t>(i)].get<double>();
          }
        }
        report.log_weights = rec.at("log_weights").get<std::vector<double>>();
        if (report.log_weights.size() != samples.size()) {
          throw DataError("run log: weight and sample counts differ");
        }
        normalize_log_weights(report.log_weights);
        have_final = true;
      } else {
        StepRecord s;
        s.step = rec.at("step").get<int>();
        s.ess = rec.at("ess").get<double>();
        s.resampled = rec.at("resampled").get<bool>();
        s.log_z_partial = rec.at("log_Z_partial").get<double>();
        if (rec.contains("acceptance")) s.acceptance = rec["acceptance"].get<double>();
        report.steps.push_back(s);
      }
    } catch (const json::exception& e) {
      throw DataError("run log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_final) throw DataError("run log has no final record");
  return report;
}

}  // namespace pdds
