#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "imcabs/errors.hpp"
#include "imcabs/pipeline.hpp"

using namespace imcabs;
namespace fs = std::filesystem;

namespace {

const char* kToy = R"({
  "domain": {"lower": [-4.0], "upper": [4.0]},
  "grid": [16],
  "dynamics": {"structure": "additive", "components": ["x1 + 0.5 + w1"]},
  "noise": [{"type": "uniform", "lower": -0.6, "upper": 0.6}],
  "labels": {"goal": [{"lower": [3.0], "upper": [4.0]}], "obstacles": [{"lower": [-4.0], "upper": [-3.0]}]}
})";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("imcabs_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t data_rows(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n - 1;
}

nlohmann::json with(const char* base, const nlohmann::json& patch) {
  auto j = nlohmann::json::parse(base);
  j.merge_patch(patch);
  return j;
}

RunConfig config_in(const fs::path& dir, const nlohmann::json& j) {
  return parse_config(j.dump(), dir);
}

}  // namespace

TEST_CASE("minimal config") {
  const auto cfg = parse_config(kToy, "/tmp/base");
  CHECK(cfg.domain == Box{{-4, 4}});
  CHECK(cfg.grid == std::vector<std::size_t>{16});
  CHECK(cfg.spec.threshold == 0.9);
  CHECK_FALSE(cfg.spec.horizon);
  CHECK(cfg.cluster_passes == 0);
  CHECK_FALSE(cfg.validation.enabled);
  CHECK(cfg.output_dir == fs::path("/tmp/base") / "out");
}

TEST_CASE("validation errors name the field") {
  auto expect = [](const nlohmann::json& j, const std::string& field) {
    try {
      parse_config(j.dump(), ".");
      FAIL("expected a config error for " << field);
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find(field) != std::string::npos);
    }
  };
  expect(with(kToy, {{"specification", {{"threshold", 1.5}}}}), "specification.threshold");
  expect(with(kToy, {{"grid", {0}}}), "grid");
  expect(with(kToy, {{"surprise", 1}}), "surprise");
  expect(with(kToy, {{"labels", {{"goal", {{{"lower", {3.0}}, {"upper", {5.0}}}}}}}}), "labels.goal");
  expect(with(kToy, {{"noise", {{{"type", "uniform"}, {"lower", 1.0}, {"upper", 0.0}}}}}), "noise");
  expect(with(kToy, {{"specification", {{"horizon", 5}}}, {"clustering", {{"passes", 1}}}}), "clustering.passes");
  CHECK_THROWS_AS(parse_config("{\"domain\": ", "."), ParseError);
}

TEST_CASE("paper case-study config loads") {
  const auto cfg = load_config(fs::path(IMCABS_SOURCE_DIR) / "configs" / "multiplicative2d.json");
  CHECK(cfg.grid == std::vector<std::size_t>{20, 20});
  REQUIRE(cfg.model);
  CHECK(cfg.model->structure() == NoiseStructure::Multiplicative);
  CHECK(cfg.noise->components().size() == 2);
  CHECK(cfg.validation.enabled);
  CHECK(cfg.validation.trajectories == 1000);
}

TEST_CASE("toy pipeline writes all artifacts") {
  const auto dir = scratch("toy");
  const auto cfg = config_in(dir, with(kToy, {{"validation", {{"enabled", true}, {"trajectories", 200},
                                                              {"export_trajectories", 2}}}}));
  run_phase(cfg, Phase::Run);
  const auto out = dir / "out";
  for (const char* f : {"imc.csv", "labels.csv", "result.csv", "validation.csv", "trajectories.csv", "summary.json"}) {
    CHECK(fs::exists(out / f));
  }
  CHECK(data_rows(out / "result.csv") == 17);
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary["states"] == 17);
  CHECK(summary["abstraction"]["cells"] == 16);
  const auto& classes = summary["verification"]["classes"];
  CHECK(classes["satisfies"].get<int>() + classes["violates"].get<int>() + classes["undetermined"].get<int>() == 16);
  for (const char* phase : {"abstract", "verify", "simulate"}) CHECK(summary["timings_seconds"].contains(phase));
  const auto& verdicts = summary["validation"]["verdicts"];
  CHECK(verdicts.size() > 0);
  for (const auto& v : verdicts) CHECK(v["consistent"] == true);
}

TEST_CASE("cluster passes are reported per pass") {
  const auto dir = scratch("ring");
  auto cfg = load_config(fs::path(IMCABS_SOURCE_DIR) / "configs" / "cluster2d.json");
  cfg.output_dir = dir;
  cfg.validation.enabled = false;
  run_phase(cfg, Phase::Run);
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  const auto& per_pass = summary["clustering"]["improved_per_pass"];
  REQUIRE(per_pass.size() == 2);
  CHECK(per_pass[0].get<int>() >= 1);
  CHECK(per_pass[1] == 0);
  CHECK(fs::exists(dir / "result_improved.csv"));
}

TEST_CASE("determinism and phase isolation") {
  auto full = with(kToy, {{"clustering", {{"passes", 2}}},
                          {"validation", {{"enabled", true}, {"trajectories", 300}, {"export_trajectories", 3}}}});
  const auto a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  run_phase(config_in(a, full), Phase::Run);
  full["threads"] = 3;
  run_phase(config_in(b, full), Phase::Run);
  for (const char* f : {"imc.csv", "labels.csv", "result.csv", "result_improved.csv", "validation.csv",
                        "trajectories.csv"}) {
    CHECK_MESSAGE(slurp(a / "out" / f) == slurp(b / "out" / f), f);
  }
  run_phase(config_in(c, nlohmann::json::parse(kToy)), Phase::Run);
  for (const char* f : {"imc.csv", "labels.csv", "result.csv"}) {
    CHECK_MESSAGE(slurp(a / "out" / f) == slurp(c / "out" / f), f);
  }
  CHECK_FALSE(fs::exists(c / "out" / "validation.csv"));
}

TEST_CASE("phases reuse earlier artifacts") {
  const auto dir = scratch("phases");
  const auto cfg = config_in(dir, nlohmann::json::parse(kToy));
  CHECK_THROWS_AS(run_phase(cfg, Phase::Verify), InputError);
  run_phase(cfg, Phase::Abstract);
  CHECK_FALSE(fs::exists(dir / "out" / "result.csv"));
  run_phase(cfg, Phase::Verify);
  CHECK(fs::exists(dir / "out" / "result.csv"));
}

TEST_CASE("exit status mapping") {
  CHECK(exit_status(InputError("x")) == 1);
  CHECK(exit_status(PhaseFailure("verify", 2, "x")) == 2);
  CHECK(exit_status(SoundnessError("x")) == 2);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  const std::string cli = IMCABS_CLI_PATH;
  {
    std::ofstream(dir / "good.json") << kToy;
    std::ofstream(dir / "bad.json") << with(kToy, {{"specification", {{"threshold", 1.5}}}}).dump();
  }
  auto run = [&](const std::string& args) {
    const int raw = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(run("run -c " + (dir / "good.json").string()) == 0);
  CHECK(fs::exists(dir / "out" / "result.csv"));
  CHECK(run("run -c " + (dir / "bad.json").string()) == 1);
  CHECK(run("verify -c " + (dir / "good.json").string() + " -o " + (dir / "empty").string()) == 1);
}
