#pragma once

#include <optional>
#include <vector>

#include "imcabs/geometry.hpp"
#include "imcabs/imc.hpp"
#include "imcabs/verify.hpp"

namespace imcabs {

/// Successors of one source state merged into a single box-shaped super-state.
struct ClusterProposal {
  std::size_t source = 0;
  std::vector<std::size_t> members;  // ascending; empty means no proposal
  std::optional<Box> box;            // hull of the member cells
  double lower_value = 0.0;          // min of member lower bounds
  double upper_value = 0.0;          // max of member upper bounds

  bool empty() const { return members.empty(); }
};

/// Members are the grid cells lying inside hull(Post(q, W)) clipped to the
/// domain; they must form a block of at least two cells, all successors of q.
ClusterProposal select_cluster(std::size_t q, const Imc& imc, const StatePartition& partition,
                               const AbstractionSource& source, const VerificationResult& result);

struct ClusterStats {
  std::vector<std::size_t> improved_per_pass;
  std::size_t proposals = 0;
};

/// Runs up to `passes` clustering passes (stopping early after a pass with no
/// change). States are visited in descending lower-bound order; a state's
/// bounds are replaced only when the clustered one-step bound is strictly
/// tighter. Requires a result for an unbounded horizon.
VerificationResult cluster_improve(const Imc& imc, const StatePartition& partition,
                                   const AbstractionSource& source, const ReachAvoidSpec& spec,
                                   const VerificationResult& result, std::size_t passes = 1,
                                   ClusterStats* stats = nullptr);

}  // namespace imcabs
