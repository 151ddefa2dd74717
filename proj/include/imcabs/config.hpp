#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "imcabs/dynamics.hpp"
#include "imcabs/geometry.hpp"
#include "imcabs/imc.hpp"
#include "imcabs/noise.hpp"
#include "imcabs/verify.hpp"

namespace imcabs {

/// Invalid configuration value; the message starts with the field path.
class ConfigError : public InputError {
 public:
  ConfigError(const std::string& field, const std::string& reason)
      : InputError(field + ": " + reason), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ValidationConfig {
  bool enabled = false;
  std::size_t trajectories = 1000;
  std::uint64_t seed = 0;
  double confidence = 0.99;
  std::optional<std::size_t> cells;  // number of sampled cells; all unlabelled cells if empty
  std::size_t max_steps = 10000;     // cap for unbounded horizons
  std::size_t export_trajectories = 0;  // per sampled cell
};

struct RunConfig {
  Box domain;
  std::vector<std::size_t> grid;
  std::optional<DynamicsModel> model;
  std::optional<NoiseModel> noise;
  std::vector<std::size_t> noise_grid;  // general structure only
  LabelBoxes labels;
  ReachAvoidSpec spec;
  std::size_t cluster_passes = 0;
  ValidationConfig validation;
  std::optional<std::filesystem::path> posterior_table;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
};

/// Parses and validates a JSON run configuration. Relative paths inside the
/// file are resolved against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

RunConfig load_config(const std::filesystem::path& path);

}  // namespace imcabs
