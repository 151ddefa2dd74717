#include "imcabs/cluster.hpp"

#include <algorithm>
#include <numeric>

#include "imcabs/errors.hpp"

namespace imcabs {

namespace {

constexpr double kRowTolerance = 1e-9;

// Grid indices per dimension of cells lying inside `region`; {1, 0} if none.
std::vector<std::pair<std::size_t, std::size_t>> inner_block(const StatePartition& partition,
                                                             const Box& region) {
  const auto& grid = *partition.grid();
  const Box& domain = partition.domain();
  std::vector<std::pair<std::size_t, std::size_t>> block(domain.dim());
  for (std::size_t d = 0; d < domain.dim(); ++d) {
    const double tol = 1e-9 * std::max(partition.cell_width(d), 1.0);
    const std::size_t r = grid.resolution[d];
    std::vector<std::size_t> index(domain.dim(), 0);
    std::size_t first = r, last = 0;
    for (std::size_t k = 0; k < r; ++k) {
      index[d] = k;
      const Interval& side = partition.cells()[grid.ravel(index)][d];
      const double lo = side.lo, hi = side.hi;
      if (lo >= region[d].lo - tol && hi <= region[d].hi + tol) {
        first = std::min(first, k);
        last = k;
      }
    }
    if (first > last) return {{1, 0}};
    block[d] = {first, last};
  }
  return block;
}

}  // namespace

ClusterProposal select_cluster(std::size_t q, const Imc& imc, const StatePartition& partition,
                               const AbstractionSource& source, const VerificationResult& result) {
  ClusterProposal p;
  p.source = q;
  if (q >= partition.cell_count() || !partition.grid()) return p;

  std::vector<bool> successor(partition.cell_count(), false);
  std::size_t successors = 0;
  for (const auto& t : imc.rows[q]) {
    if (t.to < partition.cell_count() && t.upper > 0.0) {
      successor[t.to] = true;
      ++successors;
    }
  }
  if (successors < 2) return p;

  const auto hull = source.reach_hull(q, partition.cells()[q]);
  if (!hull) return p;
  const Box& domain = partition.domain();
  std::vector<Interval> sides(domain.dim());
  for (std::size_t d = 0; d < domain.dim(); ++d) {
    sides[d] = intersect((*hull)[d], domain[d]);
    if (sides[d].is_empty()) return p;
  }
  const auto block = inner_block(partition, Box(std::move(sides)));
  if (block.size() != domain.dim()) return p;

  const auto& grid = *partition.grid();
  std::vector<std::size_t> index(domain.dim());
  for (std::size_t d = 0; d < domain.dim(); ++d) index[d] = block[d].first;
  std::vector<std::size_t> members;
  for (bool more = true; more;) {
    const std::size_t cell = grid.ravel(index);
    if (!successor[cell]) return p;
    members.push_back(cell);
    more = false;
    for (std::size_t d = domain.dim(); d-- > 0;) {
      if (index[d] < block[d].second) {
        ++index[d];
        more = true;
        break;
      }
      index[d] = block[d].first;
    }
  }
  if (members.size() < 2) return p;

  std::sort(members.begin(), members.end());
  Box box = partition.cells()[members.front()];
  p.lower_value = result.lower[members.front()];
  p.upper_value = result.upper[members.front()];
  for (std::size_t m : members) {
    box = box_hull(box, partition.cells()[m]);
    p.lower_value = std::min(p.lower_value, result.lower[m]);
    p.upper_value = std::max(p.upper_value, result.upper[m]);
  }
  p.members = std::move(members);
  p.box = std::move(box);
  return p;
}

VerificationResult cluster_improve(const Imc& imc, const StatePartition& partition,
                                   const AbstractionSource& source, const ReachAvoidSpec& spec,
                                   const VerificationResult& result, std::size_t passes,
                                   ClusterStats* stats) {
  if (spec.horizon) {
    throw UnsupportedConfiguration(
        "clustering needs an unbounded-horizon result; a one-step update of k-step values "
        "bounds the (k+1)-step probability instead");
  }
  if (result.lower.size() != imc.state_count || result.upper.size() != imc.state_count) {
    throw InvalidArgument("result does not match the IMC");
  }
  VerificationResult out = result;
  const std::size_t extra = imc.state_count;  // value slot of the cluster super-state

  for (std::size_t pass = 0; pass < passes; ++pass) {
    std::vector<std::size_t> order;
    for (std::size_t q = 0; q < partition.cell_count(); ++q) {
      if (!(imc.labels[q] & (spec.goal | spec.avoid))) order.push_back(q);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return out.lower[a] > out.lower[b]; });

    std::size_t improved = 0;
    for (std::size_t q : order) {
      const auto proposal = select_cluster(q, imc, partition, source, out);
      if (proposal.empty()) continue;
      if (stats) ++stats->proposals;

      const BoundPair cb = source.bounds(q, partition.cells()[q], *proposal.box);
      std::vector<TransitionBound> row;
      for (const auto& t : imc.rows[q]) {
        if (!std::binary_search(proposal.members.begin(), proposal.members.end(), t.to)) {
          row.push_back(t);
        }
      }
      row.push_back({q, extra, cb.lower, cb.upper});
      double sum_lower = 0.0, sum_upper = 0.0;
      for (const auto& t : row) {
        sum_lower += t.lower;
        sum_upper += t.upper;
      }
      if (sum_lower > 1.0 + kRowTolerance || sum_upper < 1.0 - kRowTolerance) {
        throw SoundnessError("clustered row of state " + std::to_string(q) + " is infeasible");
      }

      std::vector<double> lo_values = out.lower, up_values = out.upper;
      lo_values.push_back(proposal.lower_value);
      up_values.push_back(proposal.upper_value);
      const double new_lower = adversary_extreme_expectation(lo_values, row, Extreme::Min);
      const double new_upper = adversary_extreme_expectation(up_values, row, Extreme::Max);
      bool changed = false;
      if (new_lower > out.lower[q]) {
        out.lower[q] = std::min(new_lower, out.upper[q]);
        changed = true;
      }
      if (new_upper < out.upper[q]) {
        out.upper[q] = std::max(new_upper, out.lower[q]);
        changed = true;
      }
      if (changed) ++improved;
    }
    if (stats) stats->improved_per_pass.push_back(improved);
    if (improved == 0) break;
  }
  classify(out, spec.threshold);
  return out;
}

}  // namespace imcabs
