#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdds {

/// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (datasets, checkpoints, logs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The noise schedule cannot produce a valid transition at the requested step.
class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every particle received zero weight.
class DegenerateRunError : public std::runtime_error {
 public:
  DegenerateRunError(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// A guidance gradient evaluated to a non-finite value during the move step.
class ProposalError : public std::runtime_error {
 public:
  ProposalError(std::size_t particle, const std::string& what)
      : std::runtime_error(what), particle_(particle) {}
  std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t particle_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Variational fit produced non-finite parameters.
class FitError : public std::runtime_error {
 public:
  FitError(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace pdds
