#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "imcabs/dynamics.hpp"
#include "imcabs/imc.hpp"
#include "imcabs/noise.hpp"
#include "imcabs/verify.hpp"

namespace imcabs {

using Rng = std::mt19937_64;

/// Generator for trajectory `index` of a run seeded with `seed`.
Rng trajectory_rng(std::uint64_t seed, std::uint64_t index);

/// Uniform draw in [0, 1) with 53 random bits.
double uniform01(Rng& rng);

/// Inverse-CDF sample of every noise component.
Eigen::VectorXd sample_noise(const NoiseModel& noise, Rng& rng);

enum class Termination { Horizon, GoalHit, AvoidHit, LeftDomain };
std::string_view to_string(Termination t);

struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  Termination cause = Termination::Horizon;

  bool satisfied() const { return cause == Termination::GoalHit; }
};

/// What a trajectory is checked against at every visited state.
struct SimulationSpec {
  Box domain;
  LabelBoxes labels;
  std::optional<std::size_t> horizon;  // steps; unbounded if empty
  std::size_t max_steps = 10000;       // cap for unbounded horizons
};

/// Iterates x' = f(x, w). Each visited state is checked in order: outside the
/// domain, inside an obstacle, inside a goal. A trajectory cut off by the horizon
/// or the step cap ends with Termination::Horizon.
Trajectory simulate(const DynamicsModel& model, const NoiseModel& noise, const SimulationSpec& spec,
                    const Eigen::VectorXd& x0, Rng& rng);

/// Two-sided Clopper-Pearson interval for `successes` out of `trials`.
std::pair<double, double> clopper_pearson(std::size_t successes, std::size_t trials,
                                          double confidence);

struct SatisfactionEstimate {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double estimate = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 1.0;
};

/// Fraction of `trials` trajectories from x0 that hit the goal first. Trajectory
/// i uses trajectory_rng(seed, i), so the outcome is independent of `threads`.
SatisfactionEstimate estimate_satisfaction(const DynamicsModel& model, const NoiseModel& noise,
                                           const SimulationSpec& spec, const Eigen::VectorXd& x0,
                                           std::size_t trials, std::uint64_t seed,
                                           double confidence = 0.99, unsigned threads = 1);

/// True when the CI-widened estimate meets the verified interval.
bool consistent(const SatisfactionEstimate& e, double lower, double upper);

/// "trajectory,step,x_1,...,x_n,termination"; the cause is written on the last row only.
void write_trajectories(std::ostream& out, const std::vector<Trajectory>& trajectories,
                        std::size_t first_id = 0);

}  // namespace imcabs
