#pragma once

#include <iosfwd>
#include <string>

#include "config.hpp"

namespace pdds::cli {

enum ExitCode { kExitOk = 0, kExitRuntime = 1, kExitUsage = 2 };

/// Each command writes its outputs under config.out and a short summary to log.
int cmd_vi(const ExperimentConfig& config, std::ostream& log);
int cmd_sample(const ExperimentConfig& config, std::ostream& log);
int cmd_train(const ExperimentConfig& config, std::ostream& log);
int cmd_eval(const ExperimentConfig& config, std::ostream& log);
int cmd_demo(const ExperimentConfig& config, std::ostream& log);

/// Writes content to path through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace pdds::cli
