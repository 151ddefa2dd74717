#include "imcabs/pipeline.hpp"

#include <chrono>
#include <fstream>

#include <nlohmann/json.hpp>

#include "imcabs/cluster.hpp"
#include "imcabs/errors.hpp"
#include "imcabs/mc.hpp"
#include "imcabs/csv.hpp"

namespace imcabs {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

struct Context {
  const RunConfig& cfg;
  const Logger& log;
  StatePartition partition;
  std::optional<PosteriorTable> table;
  AbstractionSource source;
  ordered_json summary = ordered_json::object();

  Context(const RunConfig& c, const Logger& l)
      : cfg(c), log(l), partition(partition_domain(c.domain, c.grid)) {
    source.model = &*cfg.model;
    source.noise = &*cfg.noise;
    if (!cfg.noise_grid.empty()) source.noise_cells = uniform_noise_grid(*cfg.noise, cfg.noise_grid);
    if (cfg.posterior_table) {
      table = read_posterior_table(cfg.posterior_table->string(), partition.state_count(),
                                   cfg.domain.dim());
      source.posterior_table = &*table;
    }
  }

  void info(const std::string& msg) const {
    if (log) log(msg);
  }
  fs::path file(const char* name) const { return cfg.output_dir / name; }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write '" + p.string() + "'");
  return out;
}

std::ifstream open_in(const fs::path& p, const char* produced_by) {
  std::ifstream in(p);
  if (!in) {
    throw InputError("missing artifact '" + p.string() + "'; run the " + produced_by + " phase first");
  }
  return in;
}

template <typename F>
auto timed(Context& ctx, const char* name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  ctx.info(std::string("phase ") + name + ": start");
  auto result = [&] {
    try {
      return body();
    } catch (const std::exception& e) {
      ctx.summary["failed_phase"] = name;
      throw PhaseFailure(name, exit_status(e), e.what());
    }
  }();
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ctx.summary["timings_seconds"][name] = seconds;
  ctx.info(std::string("phase ") + name + ": done in " + std::to_string(seconds) + " s");
  return result;
}

ordered_json class_counts(const VerificationResult& r, std::size_t cells) {
  std::size_t counts[3] = {0, 0, 0};
  for (std::size_t q = 0; q < cells; ++q) ++counts[static_cast<int>(r.classification[q])];
  ordered_json j;
  const double n = static_cast<double>(cells);
  j["satisfies"] = counts[0];
  j["violates"] = counts[1];
  j["undetermined"] = counts[2];
  j["fraction_satisfies"] = counts[0] / n;
  j["fraction_violates"] = counts[1] / n;
  j["fraction_undetermined"] = counts[2] / n;
  return j;
}

Imc abstract_phase(Context& ctx) {
  return timed(ctx, "abstract", [&] {
    BuildStats stats;
    Imc imc = build_imc(ctx.partition, ctx.source, ctx.cfg.labels, &stats, ctx.cfg.threads);
    auto t = open_out(ctx.file("imc.csv"));
    write_imc(t, imc);
    auto l = open_out(ctx.file("labels.csv"));
    write_labels(l, imc);
    ctx.summary["abstraction"] = {{"cells", ctx.partition.cell_count()},
                                  {"states", imc.state_count},
                                  {"transitions", imc.transition_count()},
                                  {"candidate_pairs", stats.candidate_pairs},
                                  {"max_noise_cells_per_component", stats.partitions.max_cells_per_component}};
    ctx.info("abstraction: " + std::to_string(imc.state_count) + " states, " +
             std::to_string(imc.transition_count()) + " transitions");
    return imc;
  });
}

Imc load_imc(const Context& ctx) {
  auto t = open_in(ctx.file("imc.csv"), "abstract");
  auto l = open_in(ctx.file("labels.csv"), "abstract");
  return read_imc(t, l, ctx.partition.state_count());
}

VerificationResult verify_phase(Context& ctx, const Imc& imc) {
  return timed(ctx, "verify", [&] {
    VerificationResult r = robust_value_iteration(imc, ctx.cfg.spec);
    auto out = open_out(ctx.file("result.csv"));
    write_result(out, r, ctx.partition);
    ordered_json j = {{"iterations", r.iterations}, {"converged", r.converged}};
    j["classes"] = class_counts(r, ctx.partition.cell_count());
    ctx.summary["verification"] = j;
    ctx.info("verification: " + std::to_string(r.iterations) + " iterations" +
             (r.converged ? "" : " (not converged)"));
    return r;
  });
}

VerificationResult load_result(const Context& ctx, const char* name, const char* phase) {
  auto in = open_in(ctx.file(name), phase);
  return read_result(in, ctx.partition.state_count());
}

VerificationResult improve_phase(Context& ctx, const Imc& imc, const VerificationResult& base) {
  return timed(ctx, "improve", [&] {
    ClusterStats stats;
    VerificationResult r =
        cluster_improve(imc, ctx.partition, ctx.source, ctx.cfg.spec, base, ctx.cfg.cluster_passes, &stats);
    r.iterations = base.iterations;
    r.converged = base.converged;
    auto out = open_out(ctx.file("result_improved.csv"));
    write_result(out, r, ctx.partition);
    ordered_json j = {{"passes_requested", ctx.cfg.cluster_passes},
                      {"proposals", stats.proposals},
                      {"improved_per_pass", stats.improved_per_pass}};
    j["classes"] = class_counts(r, ctx.partition.cell_count());
    ctx.summary["clustering"] = j;
    return r;
  });
}

// Evenly spaced unlabelled cells, or all of them.
std::vector<std::size_t> validation_cells(const Context& ctx, const Imc& imc) {
  std::vector<std::size_t> free;
  for (std::size_t q = 0; q < ctx.partition.cell_count(); ++q) {
    if (imc.labels[q] == kNoLabel) free.push_back(q);
  }
  const auto& want = ctx.cfg.validation.cells;
  if (!want || *want >= free.size()) return free;
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < *want; ++i) picked.push_back(free[i * free.size() / *want]);
  return picked;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t cell) {
  // splitmix64 finaliser keeps per-cell streams apart.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(cell) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void simulate_phase(Context& ctx, const Imc& imc, const VerificationResult& r) {
  timed(ctx, "simulate", [&] {
    const auto& v = ctx.cfg.validation;
    SimulationSpec sim{ctx.cfg.domain, ctx.cfg.labels, ctx.cfg.spec.horizon, v.max_steps};
    const auto cells = validation_cells(ctx, imc);
    auto out = open_out(ctx.file("validation.csv"));
    const std::size_t n = ctx.cfg.domain.dim();
    out << "state";
    for (std::size_t d = 1; d <= n; ++d) out << ",x0_" << d;
    out << ",successes,trials,estimate,ci_lower,ci_upper,p_lower,p_upper,consistent\n";
    std::vector<Trajectory> exported;
    ordered_json verdicts = ordered_json::array();
    std::size_t inconsistent = 0;
    for (std::size_t q : cells) {
      const Eigen::VectorXd x0 = ctx.partition.cells()[q].center();
      const std::uint64_t seed = cell_seed(v.seed, q);
      const auto e = estimate_satisfaction(*ctx.cfg.model, *ctx.cfg.noise, sim, x0, v.trajectories, seed,
                                           v.confidence, ctx.cfg.threads);
      const bool ok = consistent(e, r.lower[q], r.upper[q]);
      if (!ok) ++inconsistent;
      out << q;
      for (std::size_t d = 0; d < n; ++d) out << ',' << csv::number(x0[static_cast<Eigen::Index>(d)]);
      out << ',' << e.successes << ',' << e.trials << ',' << csv::number(e.estimate) << ','
          << csv::number(e.ci_lower) << ',' << csv::number(e.ci_upper) << ',' << csv::number(r.lower[q])
          << ',' << csv::number(r.upper[q]) << ',' << (ok ? "yes" : "no") << '\n';
      verdicts.push_back({{"state", q}, {"consistent", ok}});
      for (std::size_t i = 0; i < std::min(v.export_trajectories, v.trajectories); ++i) {
        Rng rng = trajectory_rng(seed, i);
        exported.push_back(simulate(*ctx.cfg.model, *ctx.cfg.noise, sim, x0, rng));
      }
    }
    if (v.export_trajectories > 0) {
      auto t = open_out(ctx.file("trajectories.csv"));
      write_trajectories(t, exported);
    }
    ctx.summary["validation"] = {{"cells", cells.size()},
                                 {"trajectories_per_cell", v.trajectories},
                                 {"confidence", v.confidence},
                                 {"inconsistent", inconsistent},
                                 {"verdicts", verdicts}};
    ctx.info("validation: " + std::to_string(cells.size() - inconsistent) + "/" +
             std::to_string(cells.size()) + " cells consistent");
    return 0;
  });
}

void write_summary(const Context& ctx) {
  auto out = open_out(ctx.file("summary.json"));
  out << ctx.summary.dump(2) << '\n';
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Abstract: return "abstract";
    case Phase::Verify: return "verify";
    case Phase::Improve: return "improve";
    case Phase::Simulate: return "simulate";
    case Phase::Run: return "run";
  }
  return "?";
}

}  // namespace

void run_phase(const RunConfig& cfg, Phase phase, const Logger& log) {
  fs::create_directories(cfg.output_dir);
  Context ctx(cfg, log);
  ctx.summary["phase"] = phase_name(phase);
  ctx.summary["dimension"] = cfg.domain.dim();
  ctx.summary["states"] = ctx.partition.state_count();
  try {
    switch (phase) {
      case Phase::Abstract:
        abstract_phase(ctx);
        break;
      case Phase::Verify:
        verify_phase(ctx, load_imc(ctx));
        break;
      case Phase::Improve: {
        const Imc imc = load_imc(ctx);
        improve_phase(ctx, imc, load_result(ctx, "result.csv", "verify"));
        break;
      }
      case Phase::Simulate: {
        const Imc imc = load_imc(ctx);
        const bool improved = cfg.cluster_passes > 0;
        simulate_phase(ctx, imc,
                       load_result(ctx, improved ? "result_improved.csv" : "result.csv",
                                   improved ? "improve" : "verify"));
        break;
      }
      case Phase::Run: {
        const Imc imc = abstract_phase(ctx);
        VerificationResult r = verify_phase(ctx, imc);
        if (cfg.cluster_passes > 0) r = improve_phase(ctx, imc, r);
        if (cfg.validation.enabled) simulate_phase(ctx, imc, r);
        break;
      }
    }
  } catch (...) {
    write_summary(ctx);
    throw;
  }
  write_summary(ctx);
}

int exit_status(const std::exception& e) {
  if (const auto* f = dynamic_cast<const PhaseFailure*>(&e)) return f->status();
  if (dynamic_cast<const std::logic_error*>(&e) && !dynamic_cast<const std::invalid_argument*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace imcabs
