#include "imcabs/mc.hpp"

#include <algorithm>
#include <optional>
#include <ostream>

#include <boost/math/special_functions/beta.hpp>

#include "imcabs/csv.hpp"
#include "imcabs/errors.hpp"
#include "imcabs/parallel.hpp"

namespace imcabs {

namespace {

bool in_any(const std::vector<Box>& boxes, const Eigen::VectorXd& x) {
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains_point(x); });
}

// Termination at x, if any.
std::optional<Termination> check(const SimulationSpec& spec, const Eigen::VectorXd& x) {
  if (!spec.domain.contains_point(x)) return Termination::LeftDomain;
  if (in_any(spec.labels.obstacles, x)) return Termination::AvoidHit;
  if (in_any(spec.labels.goals, x)) return Termination::GoalHit;
  return std::nullopt;
}

}  // namespace

Rng trajectory_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::VectorXd sample_noise(const NoiseModel& noise, Rng& rng) {
  Eigen::VectorXd w(noise.dim());
  for (std::size_t i = 0; i < noise.dim(); ++i) w[i] = quantile(noise[i], uniform01(rng));
  return w;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Horizon: return "horizon";
    case Termination::GoalHit: return "goal";
    case Termination::AvoidHit: return "avoid";
    case Termination::LeftDomain: return "left_domain";
  }
  return "?";
}

Trajectory simulate(const DynamicsModel& model, const NoiseModel& noise, const SimulationSpec& spec,
                    const Eigen::VectorXd& x0, Rng& rng) {
  if (x0.size() != static_cast<Eigen::Index>(model.dim()) || noise.dim() != model.dim()) {
    throw InvalidArgument("simulation dimension mismatch");
  }
  Trajectory t;
  t.states.push_back(x0);
  const std::size_t steps = spec.horizon ? *spec.horizon : spec.max_steps;
  for (std::size_t k = 0;; ++k) {
    if (auto end = check(spec, t.states.back())) {
      t.cause = *end;
      return t;
    }
    if (k == steps) break;
    t.states.push_back(eval_point(model, t.states.back(), sample_noise(noise, rng)));
  }
  t.cause = Termination::Horizon;
  return t;
}

std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials,
                                          double confidence) {
  if (trials == 0 || successes > trials) throw InvalidArgument("need 0 <= successes <= trials, trials >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
  const double alpha = 1.0 - confidence;
  const double k = static_cast<double>(successes), n = static_cast<double>(trials);
  const double lo = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, alpha / 2.0);
  const double hi = successes == trials ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - alpha / 2.0);
  return {lo, hi};
}

SatisfactionEstimate estimate_satisfaction(const DynamicsModel& model, const NoiseModel& noise,
                                           const SimulationSpec& spec, const Eigen::VectorXd& x0,
                                           std::size_t trials, std::uint64_t seed,
                                           double confidence, unsigned threads) {
  if (trials == 0) throw InvalidArgument("need at least one trajectory");
  std::vector<char> hit(trials, 0);
  parallel_for(trials, threads, [&](std::size_t i) {
    Rng rng = trajectory_rng(seed, i);
    hit[i] = simulate(model, noise, spec, x0, rng).satisfied();
  });
  SatisfactionEstimate e;
  e.trials = trials;
  e.successes = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  e.estimate = static_cast<double>(e.successes) / static_cast<double>(trials);
  std::tie(e.ci_lower, e.ci_upper) = clopper_pearson(e.successes, trials, confidence);
  return e;
}

bool consistent(const SatisfactionEstimate& e, double lower, double upper) {
  return e.ci_lower <= upper && e.ci_upper >= lower;
}

void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories,
                        std::size_t first_id) {
  const std::size_t n = trajectories.empty() ? 0 : trajectories.front().states.front().size();
  out << "trajectory,step";
  for (std::size_t d = 1; d <= n; ++d) out << ",x_" << d;
  out << ",termination\n";
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const auto& t = trajectories[i];
    for (std::size_t k = 0; k < t.states.size(); ++k) {
      out << first_id + i << ',' << k;
      for (Eigen::Index d = 0; d < t.states[k].size(); ++d) out << ',' << csv::number(t.states[k][d]);
      out << ',';
      if (k + 1 == t.states.size()) out << to_string(t.cause);
      out << '\n';
    }
  }
}

}  // namespace imcabs
