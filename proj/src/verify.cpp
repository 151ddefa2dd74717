#include "imcabs/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "imcabs/csv.hpp"
#include "imcabs/errors.hpp"

namespace imcabs {

namespace {

constexpr double kRowTolerance = 1e-9;
constexpr double kFixedPointTolerance = 1e-12;

std::vector<double> initial_values(const Imc& imc, const ReachAvoidSpec& spec) {
  std::vector<double> v(imc.state_count, 0.0);
  for (std::size_t q = 0; q < imc.state_count; ++q) {
    if (imc.labels[q] & spec.goal) v[q] = 1.0;
  }
  return v;
}

bool pinned(const Imc& imc, const ReachAvoidSpec& spec, std::size_t q) {
  return (imc.labels[q] & (spec.goal | spec.avoid)) != 0;
}

// One Jacobi sweep; returns the largest per-state change.
double bellman_sweep(const Imc& imc, const ReachAvoidSpec& spec, const std::vector<double>& prev,
                     std::vector<double>& next, Extreme mode) {
  double change = 0.0;
  for (std::size_t q = 0; q < imc.state_count; ++q) {
    if (pinned(imc, spec, q)) {
      next[q] = prev[q];
      continue;
    }
    next[q] = adversary_extreme_expectation(prev, imc.rows[q], mode);
    change = std::max(change, std::abs(next[q] - prev[q]));
  }
  return change;
}

// States from which some adversary avoids the goal forever: the greatest set Z
// of non-goal states where every state can keep all of its mass inside Z.
std::vector<bool> zero_states(const Imc& imc, const ReachAvoidSpec& spec) {
  std::vector<bool> in_z(imc.state_count);
  for (std::size_t q = 0; q < imc.state_count; ++q) in_z[q] = !(imc.labels[q] & spec.goal);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t q = 0; q < imc.state_count; ++q) {
      if (!in_z[q] || (imc.labels[q] & spec.avoid)) continue;
      double inside_upper = 0.0;
      bool forced_out = false;
      for (const auto& t : imc.rows[q]) {
        if (in_z[t.to]) {
          inside_upper += t.upper;
        } else if (t.lower > 0.0) {
          forced_out = true;
        }
      }
      if (forced_out || inside_upper < 1.0 - kRowTolerance) {
        in_z[q] = false;
        changed = true;
      }
    }
  }
  return in_z;
}

// Reachability values of the Markov chain induced by the extremal adversaries of
// `values`, with `fixed` states held at their current value. Returns nullopt if
// the linear system is singular (some free state never reaches a fixed one).
std::optional<std::vector<double>> induced_chain_values(const Imc& imc,
                                                        const std::vector<bool>& fixed,
                                                        const std::vector<double>& values,
                                                        Extreme mode) {
  const std::size_t n = imc.state_count;
  std::vector<std::vector<double>> gammas(n);
  for (std::size_t q = 0; q < n; ++q) {
    if (!fixed[q]) adversary_extreme_expectation(values, imc.rows[q], mode, gammas[q]);
  }
  // Free states with positive mass flow towards a fixed state with a positive value.
  std::vector<bool> reaches(n, false);
  for (std::size_t q = 0; q < n; ++q) reaches[q] = fixed[q] && values[q] > 0.0;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t q = 0; q < n; ++q) {
      if (fixed[q] || reaches[q]) continue;
      for (std::size_t k = 0; k < imc.rows[q].size(); ++k) {
        if (gammas[q][k] > 0.0 && reaches[imc.rows[q][k].to]) {
          reaches[q] = true;
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<Eigen::Index> slot(n, -1);
  Eigen::Index unknowns = 0;
  for (std::size_t q = 0; q < n; ++q) {
    if (!fixed[q] && reaches[q]) slot[q] = unknowns++;
  }
  std::vector<double> out = values;
  for (std::size_t q = 0; q < n; ++q) {
    if (!fixed[q] && !reaches[q]) out[q] = 0.0;
  }
  if (unknowns == 0) return out;

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
  for (std::size_t q = 0; q < n; ++q) {
    if (slot[q] < 0) continue;
    triplets.emplace_back(slot[q], slot[q], 1.0);
    for (std::size_t k = 0; k < imc.rows[q].size(); ++k) {
      const double g = gammas[q][k];
      const std::size_t t = imc.rows[q][k].to;
      if (g == 0.0) continue;
      if (slot[t] >= 0) {
        triplets.emplace_back(slot[q], slot[t], -g);
      } else {
        rhs[slot[q]] += g * out[t];
      }
    }
  }
  Eigen::SparseMatrix<double> system(unknowns, unknowns);
  system.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !sol.allFinite()) return std::nullopt;
  for (std::size_t q = 0; q < n; ++q) {
    if (slot[q] >= 0) out[q] = std::clamp(sol[slot[q]], 0.0, 1.0);
  }
  return out;
}

bool is_fixed_point(const Imc& imc, const ReachAvoidSpec& spec, const std::vector<double>& v,
                    Extreme mode) {
  for (std::size_t q = 0; q < imc.state_count; ++q) {
    if (pinned(imc, spec, q)) continue;
    if (std::abs(adversary_extreme_expectation(v, imc.rows[q], mode) - v[q]) > kFixedPointTolerance) {
      return false;
    }
  }
  return true;
}

// After value iteration has settled, solve the chain induced by the extremal
// adversary exactly and keep it only if it provably equals the least fixed point:
//  - max: an adversary's value never exceeds the optimum, and a fixed point is
//    never below the least one, so a fixed-point adversary value is the optimum;
//  - min: with the zero states pinned the min operator has a unique fixed point.
void refine_to_fixed_point(const Imc& imc, const ReachAvoidSpec& spec, std::vector<double>& values,
                           Extreme mode) {
  std::vector<bool> fixed(imc.state_count);
  for (std::size_t q = 0; q < imc.state_count; ++q) fixed[q] = pinned(imc, spec, q);
  std::vector<double> start = values;
  if (mode == Extreme::Min) {
    const auto z = zero_states(imc, spec);
    for (std::size_t q = 0; q < imc.state_count; ++q) {
      if (z[q]) {
        fixed[q] = true;
        start[q] = 0.0;
      }
    }
  }
  auto exact = induced_chain_values(imc, fixed, start, mode);
  if (!exact || !is_fixed_point(imc, spec, *exact, mode)) return;
  for (std::size_t q = 0; q < imc.state_count; ++q) {
    // Both recursions increase from the goal indicator towards the limit.
    if (values[q] - (*exact)[q] > kFixedPointTolerance) return;
  }
  values = std::move(*exact);
}

}  // namespace

std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::Satisfies: return "satisfies";
    case Classification::Violates: return "violates";
    case Classification::Undetermined: return "undetermined";
  }
  return "?";
}

Classification parse_classification(std::string_view s) {
  if (s == "satisfies") return Classification::Satisfies;
  if (s == "violates") return Classification::Violates;
  if (s == "undetermined") return Classification::Undetermined;
  throw InputError("unknown classification '" + std::string(s) + "'");
}

double adversary_extreme_expectation(std::span<const double> values,
                                     std::span<const TransitionBound> row, Extreme mode,
                                     std::vector<double>& gamma) {
  double sum_lower = 0.0, sum_upper = 0.0;
  for (const auto& t : row) {
    if (t.to >= values.size()) throw InvalidModelError("row target outside the value vector");
    sum_lower += t.lower;
    sum_upper += t.upper;
  }
  if (sum_lower > 1.0 + kRowTolerance || sum_upper < 1.0 - kRowTolerance) {
    throw InvalidModelError("infeasible row: sum(lower) = " + csv::number(sum_lower) +
                            ", sum(upper) = " + csv::number(sum_upper));
  }
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = values[row[a].to], vb = values[row[b].to];
    if (va != vb) return mode == Extreme::Min ? va < vb : va > vb;
    return row[a].to < row[b].to;
  });
  gamma.resize(row.size());
  for (std::size_t k = 0; k < row.size(); ++k) gamma[k] = row[k].lower;
  double remaining = 1.0 - sum_lower;
  for (std::size_t k : order) {
    if (remaining <= 0.0) break;
    const double add = std::min(row[k].upper - row[k].lower, remaining);
    gamma[k] += add;
    remaining -= add;
  }
  double expectation = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) expectation += gamma[k] * values[row[k].to];
  return expectation;
}

double adversary_extreme_expectation(std::span<const double> values,
                                     std::span<const TransitionBound> row, Extreme mode) {
  std::vector<double> gamma;
  return adversary_extreme_expectation(values, row, mode, gamma);
}

VerificationResult robust_value_iteration(const Imc& imc, const ReachAvoidSpec& spec) {
  if (spec.goal & spec.avoid) throw SpecificationError("goal and avoid labels overlap");
  if (!(spec.threshold > 0.0 && spec.threshold < 1.0)) {
    throw SpecificationError("threshold must lie in (0, 1)");
  }
  if (imc.rows.size() != imc.state_count || imc.labels.size() != imc.state_count) {
    throw InvalidModelError("IMC rows/labels do not match the state count");
  }
  for (std::size_t q = 0; q < imc.state_count; ++q) {
    if ((imc.labels[q] & spec.goal) && (imc.labels[q] & spec.avoid)) {
      throw SpecificationError("state " + std::to_string(q) + " is labelled both goal and avoid");
    }
  }

  VerificationResult r;
  r.lower = initial_values(imc, spec);
  r.upper = r.lower;
  std::vector<double> next_lower(imc.state_count), next_upper(imc.state_count);

  if (spec.horizon) {
    for (std::size_t k = 0; k < *spec.horizon; ++k) {
      bellman_sweep(imc, spec, r.lower, next_lower, Extreme::Min);
      bellman_sweep(imc, spec, r.upper, next_upper, Extreme::Max);
      r.lower.swap(next_lower);
      r.upper.swap(next_upper);
    }
    r.iterations = *spec.horizon;
    r.converged = true;
  } else {
    while (r.iterations < spec.max_iterations) {
      const double dl = bellman_sweep(imc, spec, r.lower, next_lower, Extreme::Min);
      const double du = bellman_sweep(imc, spec, r.upper, next_upper, Extreme::Max);
      r.lower.swap(next_lower);
      r.upper.swap(next_upper);
      ++r.iterations;
      if (std::max(dl, du) < spec.convergence_tolerance) {
        r.converged = true;
        break;
      }
    }
    if (r.converged) {
      refine_to_fixed_point(imc, spec, r.lower, Extreme::Min);
      refine_to_fixed_point(imc, spec, r.upper, Extreme::Max);
    }
  }
  for (std::size_t q = 0; q < imc.state_count; ++q) {
    // Both recursions start from the same indicator; rounding must not cross them.
    if (r.lower[q] > r.upper[q]) r.upper[q] = r.lower[q];
  }
  classify(r, spec.threshold);
  return r;
}

Classification classify(double lower, double upper, double threshold) {
  if (lower >= threshold) return Classification::Satisfies;
  if (upper < threshold) return Classification::Violates;
  return Classification::Undetermined;
}

void classify(VerificationResult& result, double threshold) {
  result.classification.resize(result.lower.size());
  for (std::size_t q = 0; q < result.lower.size(); ++q) {
    result.classification[q] = classify(result.lower[q], result.upper[q], threshold);
  }
}

void write_result(std::ostream& out, const VerificationResult& result,
                  const StatePartition& partition) {
  const std::size_t n = partition.domain().dim();
  out << "state";
  for (std::size_t d = 1; d <= n; ++d) out << ",lo_" << d << ",hi_" << d;
  out << ",p_lower,p_upper,class\n";
  for (std::size_t q = 0; q < result.lower.size(); ++q) {
    out << q;
    for (std::size_t d = 0; d < n; ++d) {
      if (q < partition.cell_count()) {
        out << ',' << csv::number(partition.cells()[q][d].lo) << ','
            << csv::number(partition.cells()[q][d].hi);
      } else {
        out << ",,";
      }
    }
    out << ',' << csv::number(result.lower[q]) << ',' << csv::number(result.upper[q]) << ','
        << to_string(result.classification[q]) << '\n';
  }
}

VerificationResult read_result(std::istream& in, std::size_t state_count) {
  VerificationResult r;
  r.lower.assign(state_count, 0.0);
  r.upper.assign(state_count, 0.0);
  r.classification.assign(state_count, Classification::Undetermined);
  std::vector<bool> seen(state_count, false);
  csv::for_each_row(in, 4, [&](const std::vector<std::string>& f, std::size_t line) {
    const auto q = csv::to_index(f[0], line);
    if (q >= state_count) throw InputError("line " + std::to_string(line) + ": state out of range");
    const std::size_t k = f.size();
    r.lower[q] = csv::to_double(f[k - 3], line);
    r.upper[q] = csv::to_double(f[k - 2], line);
    r.classification[q] = parse_classification(f[k - 1]);
    seen[q] = true;
  });
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw InputError("result table does not cover every state");
  }
  r.converged = true;
  return r;
}

}  // namespace imcabs
