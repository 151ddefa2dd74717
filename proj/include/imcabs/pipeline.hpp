#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "imcabs/config.hpp"

namespace imcabs {

enum class Phase { Abstract, Verify, Improve, Simulate, Run };

/// Receives progress messages when verbose output is requested.
using Logger = std::function<void(const std::string&)>;

/// Failure inside a phase, carrying the phase name and the exit status of the cause.
class PhaseFailure : public std::runtime_error {
 public:
  PhaseFailure(const std::string& phase, int status, const std::string& what)
      : std::runtime_error(phase + ": " + what), phase_(phase), status_(status) {}
  const std::string& phase() const noexcept { return phase_; }
  int status() const noexcept { return status_; }

 private:
  std::string phase_;
  int status_;
};

/// Executes one subcommand. Phases after the first read the artifacts written by
/// earlier phases from cfg.output_dir. Exceptions propagate to the caller.
void run_phase(const RunConfig& cfg, Phase phase, const Logger& log = {});

/// Maps an exception escaping run_phase to the process exit status:
/// 1 for input and specification errors, 2 for internal soundness failures.
int exit_status(const std::exception& e);

}  // namespace imcabs
