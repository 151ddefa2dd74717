#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "imcabs/geometry.hpp"
#include "imcabs/imc.hpp"

namespace imcabs {

enum class Extreme { Min, Max };

enum class Classification { Satisfies, Violates, Undetermined };

std::string_view to_string(Classification c);
Classification parse_classification(std::string_view s);

/// Reach `goal` while never visiting `avoid`, within `horizon` steps (unbounded if empty).
struct ReachAvoidSpec {
  LabelMask goal = kGoal;
  LabelMask avoid = kObstacle | kUnsafe;
  std::optional<std::size_t> horizon;
  double threshold = 0.9;
  double convergence_tolerance = 1e-6;
  std::size_t max_iterations = 100000;
};

struct VerificationResult {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Classification> classification;
  std::size_t iterations = 0;
  bool converged = false;
};

/// min (or max) over all distributions gamma with lower <= gamma <= upper,
/// sum(gamma) = 1 of sum gamma(q') * values(q'). Ties in value are ordered by
/// ascending state index.
double adversary_extreme_expectation(std::span<const double> values,
                                     std::span<const TransitionBound> row, Extreme mode);

/// Same, also returning the extremal distribution (aligned with `row`).
double adversary_extreme_expectation(std::span<const double> values,
                                     std::span<const TransitionBound> row, Extreme mode,
                                     std::vector<double>& gamma);

/// Satisfaction bounds by robust interval value iteration; labels are pinned
/// (goal states to 1, avoid states to 0) at every iteration.
VerificationResult robust_value_iteration(const Imc& imc, const ReachAvoidSpec& spec);

Classification classify(double lower, double upper, double threshold);
void classify(VerificationResult& result, double threshold);

/// "state,lo_1,hi_1,...,lo_n,hi_n,p_lower,p_upper,class"; box columns are empty for the unsafe state.
void write_result(std::ostream& out, const VerificationResult& result,
                  const StatePartition& partition);
VerificationResult read_result(std::istream& in, std::size_t state_count);

}  // namespace imcabs
