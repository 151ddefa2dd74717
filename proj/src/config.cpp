#include "imcabs/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "imcabs/errors.hpp"

namespace imcabs {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string element(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items()) {
    if (!keys.count(k)) throw ConfigError(child(path, k), "unknown field");
  }
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) throw ConfigError(child(path, key), "missing required field");
  return obj.at(key);
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

std::size_t count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(path, "expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

std::string text(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], element(path, i)));
  return out;
}

Box box(const json& v, const std::string& path, std::size_t dim) {
  check_keys(v, path, {"lower", "upper"});
  const auto lo = numbers(require(v, path, "lower"), child(path, "lower"));
  const auto hi = numbers(require(v, path, "upper"), child(path, "upper"));
  if (lo.size() != dim || hi.size() != dim) {
    throw ConfigError(path, "expected " + std::to_string(dim) + " bounds per side");
  }
  std::vector<Interval> sides;
  for (std::size_t i = 0; i < dim; ++i) {
    if (!(lo[i] < hi[i])) throw ConfigError(element(child(path, "lower"), i), "must be below upper");
    sides.emplace_back(lo[i], hi[i]);
  }
  return Box(std::move(sides));
}

NoiseComponent noise_component(const json& v, const std::string& path) {
  if (!v.is_object()) throw ConfigError(path, "expected an object");
  const auto type = text(require(v, path, "type"), child(path, "type"));
  try {
    if (type == "uniform") {
      check_keys(v, path, {"type", "lower", "upper"});
      return Uniform{number(require(v, path, "lower"), child(path, "lower")),
                     number(require(v, path, "upper"), child(path, "upper"))};
    }
    if (type == "truncated_gaussian") {
      check_keys(v, path, {"type", "mean", "stddev", "lower", "upper"});
      TruncatedGaussian g;
      g.mean = number(require(v, path, "mean"), child(path, "mean"));
      g.stddev = number(require(v, path, "stddev"), child(path, "stddev"));
      g.lo = v.contains("lower") ? number(v["lower"], child(path, "lower")) : -kInf;
      g.hi = v.contains("upper") ? number(v["upper"], child(path, "upper")) : kInf;
      return g;
    }
    if (type == "mixture") {
      check_keys(v, path, {"type", "weights", "components"});
      Mixture m;
      m.weights = numbers(require(v, path, "weights"), child(path, "weights"));
      const auto& comps = require(v, path, "components");
      if (!comps.is_array()) throw ConfigError(child(path, "components"), "expected an array");
      for (std::size_t i = 0; i < comps.size(); ++i) {
        m.components.push_back(noise_component(comps[i], element(child(path, "components"), i)));
      }
      return m;
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(child(path, "type"), "unknown distribution '" + type + "'");
}

Monotonicity monotonicity(const std::string& s, const std::string& path) {
  if (s == "unknown") return Monotonicity::Unknown;
  if (s == "increasing") return Monotonicity::Increasing;
  if (s == "decreasing") return Monotonicity::Decreasing;
  throw ConfigError(path, "expected 'unknown', 'increasing' or 'decreasing'");
}

std::vector<Box> label_boxes(const json& v, const std::string& path, const Box& domain) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of boxes");
  std::vector<Box> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    Box b = box(v[i], element(path, i), domain.dim());
    if (!box_contains(domain, b)) throw ConfigError(element(path, i), "box is not inside the domain");
    out.push_back(std::move(b));
  }
  return out;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& s, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, s.size()); ++i) {
    if (s[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column > 1 ? column - 1 : 1};
}

}  // namespace

RunConfig parse_config(const std::string& source, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(source);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(source, e.byte);
    throw ParseError("invalid JSON in configuration", line, column);
  }
  check_keys(root, "", {"domain", "grid", "dynamics", "noise", "noise_grid", "posterior_table",
                        "labels", "specification", "clustering", "validation", "output", "threads"});
  RunConfig cfg;

  const auto& domain = require(root, "", "domain");
  const auto lower = domain.is_object() && domain.contains("lower") ? domain["lower"] : json();
  const std::size_t dim = lower.is_array() ? lower.size() : 0;
  if (dim == 0) throw ConfigError("domain.lower", "expected a non-empty array of numbers");
  cfg.domain = box(domain, "domain", dim);

  const auto& grid = require(root, "", "grid");
  if (!grid.is_array() || grid.size() != dim) {
    throw ConfigError("grid", "expected one cell count per dimension");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    cfg.grid.push_back(count(grid[i], element("grid", i)));
    if (cfg.grid.back() == 0) throw ConfigError(element("grid", i), "must be at least 1");
  }

  const auto& dyn = require(root, "", "dynamics");
  check_keys(dyn, "dynamics", {"structure", "components", "monotonicity"});
  NoiseStructure structure;
  try {
    structure = parse_structure(text(require(dyn, "dynamics", "structure"), "dynamics.structure"));
  } catch (const InvalidArgument& e) {
    throw ConfigError("dynamics.structure", e.what());
  }
  const auto& comps = require(dyn, "dynamics", "components");
  if (!comps.is_array() || comps.size() != dim) {
    throw ConfigError("dynamics.components", "expected one expression per dimension");
  }
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < dim; ++i) lines.push_back(text(comps[i], element("dynamics.components", i)));
  std::vector<Monotonicity> mono;
  if (dyn.contains("monotonicity")) {
    const auto& m = dyn["monotonicity"];
    if (!m.is_array() || m.size() != dim) {
      throw ConfigError("dynamics.monotonicity", "expected one entry per dimension");
    }
    for (std::size_t i = 0; i < dim; ++i) {
      mono.push_back(monotonicity(text(m[i], element("dynamics.monotonicity", i)),
                                  element("dynamics.monotonicity", i)));
    }
  }
  try {
    cfg.model = parse_dynamics(lines, dim, structure, mono);
  } catch (const ParseError& e) {
    throw ConfigError(element("dynamics.components", e.line() - 1), e.what());
  } catch (const StructureError& e) {
    throw ConfigError("dynamics.components", e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError("dynamics", e.what());
  }

  const auto& noise = require(root, "", "noise");
  if (!noise.is_array() || noise.size() != dim) {
    throw ConfigError("noise", "expected one distribution per dimension");
  }
  std::vector<NoiseComponent> components;
  for (std::size_t i = 0; i < dim; ++i) components.push_back(noise_component(noise[i], element("noise", i)));
  cfg.noise = NoiseModel(std::move(components));

  if (root.contains("noise_grid")) {
    const auto& ng = root["noise_grid"];
    if (!ng.is_array() || ng.size() != dim) throw ConfigError("noise_grid", "expected one count per dimension");
    for (std::size_t i = 0; i < dim; ++i) {
      cfg.noise_grid.push_back(count(ng[i], element("noise_grid", i)));
      if (cfg.noise_grid.back() == 0) throw ConfigError(element("noise_grid", i), "must be at least 1");
    }
  }
  if (structure == NoiseStructure::General) {
    if (cfg.noise_grid.empty()) throw ConfigError("noise_grid", "required for the general structure");
    for (std::size_t i = 0; i < dim; ++i) {
      if (!(*cfg.noise)[i].support().is_bounded()) {
        throw ConfigError(element("noise", i), "the general structure needs bounded noise support");
      }
    }
  } else if (!cfg.noise_grid.empty()) {
    throw ConfigError("noise_grid", "only used by the general structure");
  }

  if (root.contains("posterior_table")) {
    if (structure == NoiseStructure::General) {
      throw ConfigError("posterior_table", "only supported for additive or multiplicative structure");
    }
    std::filesystem::path p = text(root["posterior_table"], "posterior_table");
    cfg.posterior_table = p.is_absolute() ? p : base_dir / p;
  }

  if (root.contains("labels")) {
    const auto& labels = root["labels"];
    check_keys(labels, "labels", {"goal", "obstacles"});
    if (labels.contains("goal")) cfg.labels.goals = label_boxes(labels["goal"], "labels.goal", cfg.domain);
    if (labels.contains("obstacles")) {
      cfg.labels.obstacles = label_boxes(labels["obstacles"], "labels.obstacles", cfg.domain);
    }
  }
  if (cfg.labels.goals.empty()) throw ConfigError("labels.goal", "at least one goal box is required");

  if (root.contains("specification")) {
    const auto& s = root["specification"];
    check_keys(s, "specification", {"horizon", "threshold", "convergence_tolerance", "max_iterations"});
    if (s.contains("horizon") && !s["horizon"].is_null()) {
      cfg.spec.horizon = count(s["horizon"], "specification.horizon");
    }
    if (s.contains("threshold")) {
      cfg.spec.threshold = number(s["threshold"], "specification.threshold");
      if (!(cfg.spec.threshold > 0.0 && cfg.spec.threshold < 1.0)) {
        throw ConfigError("specification.threshold", "must lie in (0, 1)");
      }
    }
    if (s.contains("convergence_tolerance")) {
      cfg.spec.convergence_tolerance = number(s["convergence_tolerance"], "specification.convergence_tolerance");
      if (!(cfg.spec.convergence_tolerance > 0.0)) {
        throw ConfigError("specification.convergence_tolerance", "must be positive");
      }
    }
    if (s.contains("max_iterations")) {
      cfg.spec.max_iterations = count(s["max_iterations"], "specification.max_iterations");
      if (cfg.spec.max_iterations == 0) throw ConfigError("specification.max_iterations", "must be at least 1");
    }
  }

  if (root.contains("clustering")) {
    const auto& c = root["clustering"];
    check_keys(c, "clustering", {"passes"});
    if (c.contains("passes")) cfg.cluster_passes = count(c["passes"], "clustering.passes");
    if (cfg.cluster_passes > 0 && cfg.spec.horizon) {
      throw ConfigError("clustering.passes", "clustering requires an unbounded horizon");
    }
  }

  if (root.contains("validation")) {
    const auto& v = root["validation"];
    check_keys(v, "validation", {"enabled", "trajectories", "seed", "confidence", "cells", "max_steps",
                                 "export_trajectories"});
    auto& val = cfg.validation;
    if (v.contains("enabled")) {
      if (!v["enabled"].is_boolean()) throw ConfigError("validation.enabled", "expected true or false");
      val.enabled = v["enabled"].get<bool>();
    }
    if (v.contains("trajectories")) {
      val.trajectories = count(v["trajectories"], "validation.trajectories");
      if (val.trajectories == 0) throw ConfigError("validation.trajectories", "must be at least 1");
    }
    if (v.contains("seed")) {
      if (!v["seed"].is_number_unsigned()) throw ConfigError("validation.seed", "expected a non-negative integer");
      val.seed = v["seed"].get<std::uint64_t>();
    }
    if (v.contains("confidence")) {
      val.confidence = number(v["confidence"], "validation.confidence");
      if (!(val.confidence > 0.0 && val.confidence < 1.0)) {
        throw ConfigError("validation.confidence", "must lie in (0, 1)");
      }
    }
    if (v.contains("cells") && !(v["cells"].is_string() && v["cells"] == "all")) {
      val.cells = count(v["cells"], "validation.cells");
    }
    if (v.contains("max_steps")) {
      val.max_steps = count(v["max_steps"], "validation.max_steps");
      if (val.max_steps == 0) throw ConfigError("validation.max_steps", "must be at least 1");
    }
    if (v.contains("export_trajectories")) {
      val.export_trajectories = count(v["export_trajectories"], "validation.export_trajectories");
    }
  }

  if (root.contains("output")) {
    std::filesystem::path p = text(root["output"], "output");
    cfg.output_dir = p.is_absolute() ? p : base_dir / p;
  } else {
    cfg.output_dir = base_dir / "out";
  }
  if (root.contains("threads")) {
    cfg.threads = static_cast<unsigned>(count(root["threads"], "threads"));
    if (cfg.threads == 0) throw ConfigError("threads", "must be at least 1");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open configuration '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace imcabs
