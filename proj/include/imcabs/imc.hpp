#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "imcabs/dynamics.hpp"
#include "imcabs/geometry.hpp"
#include "imcabs/noise.hpp"

namespace imcabs {

/// Atomic propositions as a bit set.
enum Label : std::uint8_t {
  kNoLabel = 0,
  kGoal = 1u << 0,
  kObstacle = 1u << 1,
  kUnsafe = 1u << 2,
};
using LabelMask = std::uint8_t;

std::string label_names(LabelMask mask);

struct TransitionBound {
  std::size_t from = 0;
  std::size_t to = 0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Interval Markov chain with sparse rows sorted by target index.
struct Imc {
  std::size_t state_count = 0;
  std::size_t unsafe_state = 0;
  std::vector<std::vector<TransitionBound>> rows;
  std::vector<LabelMask> labels;

  std::size_t transition_count() const;
  /// Throws InvalidModelError unless every row has 0 <= lower <= upper <= 1 and
  /// sum(lower) <= 1 <= sum(upper) within `tolerance`.
  void validate(double tolerance = 1e-9) const;
};

/// Lower/upper transition probability pair.
struct BoundPair {
  double lower = 0.0;
  double upper = 0.0;
};

/// Externally supplied Post_f(q) per abstract state, e.g. from a learned model.
struct PosteriorTable {
  std::vector<std::optional<Box>> posteriors;  // indexed by state
  std::vector<bool> valid;                     // false: no trustworthy posterior for this state
};

/// Reads "state,component,lo,hi[,valid]" rows (header required, zero-based indices).
PosteriorTable read_posterior_table(std::istream& in, std::size_t state_count, std::size_t dim);
PosteriorTable read_posterior_table(const std::string& path, std::size_t state_count,
                                    std::size_t dim);

/// Cells evaluated per noise component for one (q, q') pair by the structured route.
struct PartitionStats {
  std::size_t max_cells_per_component = 0;
  std::size_t pairs = 0;
};

/// Bounds on T(target | x) over x in q from three-interval optimal noise partitions.
BoundPair transition_bounds_structured(const PosteriorBox& postf, const Box& target,
                                       const NoiseModel& noise, NoiseStructure structure,
                                       PartitionStats* stats = nullptr);

/// Bounds from an explicit measure-preserving noise partition.
BoundPair transition_bounds_general(const DynamicsModel& model, std::span<const NoiseCell> cells,
                                    const Box& q, const Box& target);

/// Same as above with the posteriors of each noise cell precomputed.
BoundPair transition_bounds_general(std::span<const Box> cell_posteriors,
                                    std::span<const NoiseCell> cells, const Box& target);

/// Bounds on escaping the safe set X from q (the unsafe-state column).
BoundPair unsafe_transitions(const BoundPair& to_safe_set);

/// How transition bounds are computed for each source state.
struct AbstractionSource {
  const DynamicsModel* model = nullptr;
  const NoiseModel* noise = nullptr;
  /// Noise cells for general structure; ignored for structured models.
  std::vector<NoiseCell> noise_cells;
  /// Overrides posterior_f for structured models.
  const PosteriorTable* posterior_table = nullptr;

  /// Pair bounds of state q (Post_f or noise-cell posteriors computed on demand) to any box.
  BoundPair bounds(std::size_t q, const Box& q_box, const Box& target,
                   PartitionStats* stats = nullptr) const;
  /// Over-approximation of Post(q, W), or nullopt if the state has no valid posterior.
  std::optional<Box> reach_hull(std::size_t q, const Box& q_box) const;
};

struct LabelBoxes {
  std::vector<Box> goals;
  std::vector<Box> obstacles;
};

/// Labels every cell whose interior meets a goal/obstacle box; a cell that
/// meets a label box without lying inside it is an input error.
std::vector<LabelMask> label_cells(const StatePartition& partition, const LabelBoxes& labels);

struct BuildStats {
  PartitionStats partitions;
  std::size_t candidate_pairs = 0;
};

/// Sound IMC of the dynamics over the partition. State partition.unsafe_index()
/// is the absorbing unsafe state.
Imc build_imc(const StatePartition& partition, const AbstractionSource& source,
              const LabelBoxes& labels, BuildStats* stats = nullptr, unsigned threads = 1);

/// "from,to,lower,upper" sorted by (from, to).
void write_imc(std::ostream& out, const Imc& imc);
/// "state,label" one row per (state, proposition).
void write_labels(std::ostream& out, const Imc& imc);
/// Rebuilds an IMC from its two exports.
Imc read_imc(std::istream& transitions, std::istream& labels, std::size_t state_count);

}  // namespace imcabs
