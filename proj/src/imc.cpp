#include "imcabs/imc.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "imcabs/csv.hpp"
#include "imcabs/errors.hpp"
#include "imcabs/parallel.hpp"

namespace imcabs {

namespace {

// Three-interval partitions per component; at most (3 + 2d)n cells with d = 0.
constexpr std::size_t kCellsPerComponent = 3;

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// Tolerance used when matching label boxes to grid faces.
double align_tolerance(const Box& cell) {
  double w = 0.0;
  for (std::size_t d = 0; d < cell.dim(); ++d) w = std::max(w, cell[d].width());
  return 1e-9 * std::max(w, 1.0);
}

bool contains_tol(const Box& outer, const Box& inner, double tol) {
  for (std::size_t d = 0; d < outer.dim(); ++d) {
    if (inner[d].lo < outer[d].lo - tol || inner[d].hi > outer[d].hi + tol) return false;
  }
  return true;
}

bool interiors_meet_tol(const Box& a, const Box& b, double tol) {
  for (std::size_t d = 0; d < a.dim(); ++d) {
    if (std::min(a[d].hi, b[d].hi) - std::max(a[d].lo, b[d].lo) <= tol) return false;
  }
  return true;
}

}  // namespace

std::string label_names(LabelMask mask) {
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (mask & kGoal) add("goal");
  if (mask & kObstacle) add("obstacle");
  if (mask & kUnsafe) add("unsafe");
  return out;
}

std::size_t Imc::transition_count() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

void Imc::validate(double tolerance) const {
  if (rows.size() != state_count || labels.size() != state_count) {
    throw InvalidModelError("IMC rows/labels do not match the state count");
  }
  for (std::size_t q = 0; q < state_count; ++q) {
    double lo = 0.0, up = 0.0;
    for (const auto& t : rows[q]) {
      if (t.from != q || t.to >= state_count) throw InvalidModelError("IMC row index out of range");
      if (!(0.0 <= t.lower && t.lower <= t.upper && t.upper <= 1.0)) {
        throw InvalidModelError("state " + std::to_string(q) + " -> " + std::to_string(t.to) +
                                ": bounds not ordered in [0, 1]");
      }
      lo += t.lower;
      up += t.upper;
    }
    if (lo > 1.0 + tolerance || up < 1.0 - tolerance) {
      throw InvalidModelError("state " + std::to_string(q) + ": sum(lower) = " + csv::number(lo) +
                              ", sum(upper) = " + csv::number(up) + " admits no distribution");
    }
  }
}

BoundPair transition_bounds_structured(const PosteriorBox& postf, const Box& target,
                                       const NoiseModel& noise, NoiseStructure structure,
                                       PartitionStats* stats) {
  if (postf.dim() != target.dim() || noise.dim() != target.dim()) {
    throw InvalidArgument("transition bound dimension mismatch");
  }
  if (structure == NoiseStructure::General) {
    throw InvalidArgument("structured transition bounds need additive or multiplicative noise");
  }
  double lower = 1.0;
  double upper = 1.0;
  for (std::size_t i = 0; i < target.dim(); ++i) {
    const PartitionPair pp = structure == NoiseStructure::Additive
                                 ? optimal_partition_affine(postf[i], target[i])
                                 : optimal_partition_multiplicative(postf[i], target[i]);
    const auto upper_cells = pp.upper_cells();
    const auto lower_cells = pp.lower_cells();
    if (upper_cells.size() > kCellsPerComponent || lower_cells.size() > kCellsPerComponent) {
      throw SoundnessError("structured partition exceeds 3 cells per noise component");
    }
    // Only the middle cell can reach (upper) or fit inside (lower) the target.
    upper *= interval_probability(noise[i], pp.upper_cell());
    lower *= interval_probability(noise[i], pp.lower_cell());
  }
  if (stats) {
    stats->max_cells_per_component = std::max(stats->max_cells_per_component, kCellsPerComponent);
    ++stats->pairs;
  }
  upper = clamp01(upper);
  lower = std::min(clamp01(lower), upper);
  return {lower, upper};
}

BoundPair transition_bounds_general(std::span<const Box> cell_posteriors,
                                    std::span<const NoiseCell> cells, const Box& target) {
  if (cell_posteriors.size() != cells.size()) {
    throw InvalidArgument("one posterior per noise cell required");
  }
  double lower = 0.0;
  double upper = 0.0;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (box_intersects(cell_posteriors[k], target)) {
      upper += cells[k].probability;
      if (box_contains(target, cell_posteriors[k])) lower += cells[k].probability;
    }
  }
  upper = clamp01(upper);
  return {std::min(clamp01(lower), upper), upper};
}

BoundPair transition_bounds_general(const DynamicsModel& model, std::span<const NoiseCell> cells,
                                    const Box& q, const Box& target) {
  std::vector<Box> posts;
  posts.reserve(cells.size());
  for (const auto& c : cells) posts.push_back(posterior(model, q, c.bounds));
  return transition_bounds_general(posts, cells, target);
}

BoundPair unsafe_transitions(const BoundPair& to_safe_set) {
  return {clamp01(1.0 - to_safe_set.upper), clamp01(1.0 - to_safe_set.lower)};
}

BoundPair AbstractionSource::bounds(std::size_t q, const Box& q_box, const Box& target,
                                    PartitionStats* stats) const {
  if (model->is_structured()) {
    if (posterior_table) {
      if (!posterior_table->valid[q]) return {0.0, 1.0};
      return transition_bounds_structured(*posterior_table->posteriors[q], target, *noise,
                                          model->structure(), stats);
    }
    return transition_bounds_structured(posterior_f(*model, q_box), target, *noise,
                                        model->structure(), stats);
  }
  return transition_bounds_general(*model, noise_cells, q_box, target);
}

std::optional<Box> AbstractionSource::reach_hull(std::size_t q, const Box& q_box) const {
  if (model->is_structured()) {
    if (posterior_table) {
      if (!posterior_table->valid[q]) return std::nullopt;
      return posterior_from_f(model->structure(), *posterior_table->posteriors[q], noise->support());
    }
    return posterior_from_f(model->structure(), posterior_f(*model, q_box), noise->support());
  }
  if (noise_cells.empty()) return posterior(*model, q_box, noise->support());
  std::optional<Box> h;
  for (const auto& c : noise_cells) {
    Box p = posterior(*model, q_box, c.bounds);
    h = h ? box_hull(*h, p) : p;
  }
  return h;
}

std::vector<LabelMask> label_cells(const StatePartition& partition, const LabelBoxes& labels) {
  std::vector<LabelMask> out(partition.cell_count(), kNoLabel);
  auto apply = [&](const std::vector<Box>& boxes, Label label, const char* name) {
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (!box_contains(partition.domain(), boxes[b])) {
        throw InputError(std::string(name) + " box " + std::to_string(b) + " is not inside the domain");
      }
      for (std::size_t q = 0; q < partition.cell_count(); ++q) {
        const Box& cell = partition.cells()[q];
        const double tol = align_tolerance(cell);
        if (!interiors_meet_tol(cell, boxes[b], tol)) continue;
        if (!contains_tol(boxes[b], cell, tol)) {
          throw InputError(std::string(name) + " box " + std::to_string(b) +
                           " is not aligned with the state grid (cell " + std::to_string(q) + ")");
        }
        out[q] |= label;
      }
    }
  };
  apply(labels.goals, kGoal, "goal");
  apply(labels.obstacles, kObstacle, "obstacle");
  return out;
}

Imc build_imc(const StatePartition& partition, const AbstractionSource& source,
              const LabelBoxes& labels, BuildStats* stats, unsigned threads) {
  if (!source.model || !source.noise) throw InvalidArgument("abstraction source is incomplete");
  const auto& model = *source.model;
  const std::size_t n_cells = partition.cell_count();
  const std::size_t unsafe = partition.unsafe_index();
  if (model.dim() != partition.domain().dim() || source.noise->dim() != model.dim()) {
    throw InvalidArgument("dynamics, noise and partition dimensions differ");
  }
  if (source.posterior_table) {
    if (!model.is_structured()) {
      throw InputError("posterior tables apply to additive or multiplicative models only");
    }
    const auto& t = *source.posterior_table;
    if (t.posteriors.size() < n_cells || t.valid.size() < n_cells) {
      throw InputError("posterior table does not cover every state");
    }
    for (std::size_t q = 0; q < n_cells; ++q) {
      if (t.valid[q] && !t.posteriors[q]) {
        throw InputError("posterior table has no entry for state " + std::to_string(q));
      }
    }
  }
  if (!model.is_structured() && source.noise_cells.empty()) {
    throw InvalidArgument("general structure needs a noise partition");
  }

  Imc imc;
  imc.state_count = partition.state_count();
  imc.unsafe_state = unsafe;
  imc.rows.resize(imc.state_count);
  imc.labels = label_cells(partition, labels);
  imc.labels.push_back(kUnsafe);

  std::vector<PartitionStats> row_stats(n_cells);
  std::vector<std::size_t> row_candidates(n_cells, 0);

  parallel_for(n_cells, threads, [&](std::size_t q) {
    const Box& q_box = partition.cells()[q];
    auto& row = imc.rows[q];
    const auto hull = source.reach_hull(q, q_box);
    if (!hull) {
      // No usable posterior: every successor is possible, none is certain.
      for (std::size_t t = 0; t < n_cells; ++t) row.push_back({q, t, 0.0, 1.0});
      row.push_back({q, unsafe, 0.0, 1.0});
      row_candidates[q] = n_cells;
      return;
    }

    std::vector<std::size_t> candidates;
    if (partition.grid()) {
      const auto range = partition.grid_range(*hull, 1);
      const auto& shape = *partition.grid();
      std::vector<std::size_t> idx(range.size());
      bool empty = false;
      for (std::size_t d = 0; d < range.size(); ++d) {
        if (range[d].first > range[d].second) empty = true;
        idx[d] = range[d].first;
      }
      while (!empty) {
        candidates.push_back(shape.ravel(idx));
        std::size_t d = range.size();
        while (d-- > 0) {
          if (idx[d] < range[d].second) {
            ++idx[d];
            break;
          }
          idx[d] = range[d].first;
        }
        if (d == static_cast<std::size_t>(-1)) break;
      }
    } else {
      for (std::size_t t = 0; t < n_cells; ++t) {
        if (box_intersects(*hull, partition.cells()[t])) candidates.push_back(t);
      }
    }
    std::sort(candidates.begin(), candidates.end());
    row_candidates[q] = candidates.size();

    // General structure: posteriors of the noise cells are shared by all targets of q.
    std::vector<Box> cell_posts;
    if (!model.is_structured()) {
      cell_posts.reserve(source.noise_cells.size());
      for (const auto& c : source.noise_cells) cell_posts.push_back(posterior(model, q_box, c.bounds));
    }
    auto pair_bounds = [&](const Box& target) {
      if (model.is_structured()) return source.bounds(q, q_box, target, &row_stats[q]);
      return transition_bounds_general(cell_posts, source.noise_cells, target);
    };

    for (std::size_t t : candidates) {
      const BoundPair b = pair_bounds(partition.cells()[t]);
      if (b.upper > 0.0) row.push_back({q, t, b.lower, b.upper});
    }
    const BoundPair esc = unsafe_transitions(pair_bounds(partition.domain()));
    row.push_back({q, unsafe, esc.lower, esc.upper});

    double lo = 0.0, up = 0.0;
    for (const auto& tb : row) {
      lo += tb.lower;
      up += tb.upper;
    }
    if (lo > 1.0 + 1e-9 || up < 1.0 - 1e-9) {
      throw SoundnessError("state " + std::to_string(q) + ": sum(lower) = " + csv::number(lo) +
                           ", sum(upper) = " + csv::number(up) + " violates row validity");
    }
  });
  imc.rows[unsafe].push_back({unsafe, unsafe, 1.0, 1.0});

  if (stats) {
    for (std::size_t q = 0; q < n_cells; ++q) {
      stats->partitions.max_cells_per_component =
          std::max(stats->partitions.max_cells_per_component, row_stats[q].max_cells_per_component);
      stats->partitions.pairs += row_stats[q].pairs;
      stats->candidate_pairs += row_candidates[q];
    }
  }
  return imc;
}

PosteriorTable read_posterior_table(std::istream& in, std::size_t state_count, std::size_t dim) {
  PosteriorTable table;
  std::vector<std::vector<std::optional<Interval>>> parts(state_count,
                                                          std::vector<std::optional<Interval>>(dim));
  table.valid.assign(state_count, true);
  csv::for_each_row(in, 4, [&](const std::vector<std::string>& f, std::size_t line) {
    const auto q = csv::to_index(f[0], line);
    const auto i = csv::to_index(f[1], line);
    if (q >= state_count || i >= dim) {
      throw InputError("line " + std::to_string(line) + ": state or component index out of range");
    }
    const double lo = csv::to_double(f[2], line);
    const double hi = csv::to_double(f[3], line);
    if (!(lo <= hi)) throw InputError("line " + std::to_string(line) + ": empty interval");
    parts[q][i] = Interval{lo, hi};
    if (f.size() > 4 && !f[4].empty() && csv::to_double(f[4], line) == 0.0) table.valid[q] = false;
  });
  table.posteriors.resize(state_count);
  for (std::size_t q = 0; q < state_count; ++q) {
    const bool complete =
        std::all_of(parts[q].begin(), parts[q].end(), [](const auto& p) { return p.has_value(); });
    if (complete) {
      std::vector<Interval> sides;
      for (const auto& p : parts[q]) sides.push_back(*p);
      table.posteriors[q] = Box(std::move(sides));
    } else if (table.valid[q]) {
      throw InputError("posterior table is missing state " + std::to_string(q));
    }
  }
  return table;
}

PosteriorTable read_posterior_table(const std::string& path, std::size_t state_count,
                                    std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open posterior table '" + path + "'");
  return read_posterior_table(in, state_count, dim);
}

void write_imc(std::ostream& out, const Imc& imc) {
  out << "from,to,lower,upper\n";
  for (const auto& row : imc.rows) {
    for (const auto& t : row) {
      out << t.from << ',' << t.to << ',' << csv::number(t.lower) << ',' << csv::number(t.upper)
          << '\n';
    }
  }
}

void write_labels(std::ostream& out, const Imc& imc) {
  out << "state,label\n";
  for (std::size_t q = 0; q < imc.labels.size(); ++q) {
    for (auto [bit, name] : {std::pair{kGoal, "goal"}, std::pair{kObstacle, "obstacle"},
                             std::pair{kUnsafe, "unsafe"}}) {
      if (imc.labels[q] & bit) out << q << ',' << name << '\n';
    }
  }
}

Imc read_imc(std::istream& transitions, std::istream& labels, std::size_t state_count) {
  Imc imc;
  imc.state_count = state_count;
  imc.rows.resize(state_count);
  imc.labels.assign(state_count, kNoLabel);
  csv::for_each_row(transitions, 4, [&](const std::vector<std::string>& f, std::size_t line) {
    TransitionBound t{csv::to_index(f[0], line), csv::to_index(f[1], line),
                      csv::to_double(f[2], line), csv::to_double(f[3], line)};
    if (t.from >= state_count || t.to >= state_count) {
      throw InputError("line " + std::to_string(line) + ": state index out of range");
    }
    imc.rows[t.from].push_back(t);
  });
  bool have_unsafe = false;
  csv::for_each_row(labels, 2, [&](const std::vector<std::string>& f, std::size_t line) {
    const auto q = csv::to_index(f[0], line);
    if (q >= state_count) throw InputError("line " + std::to_string(line) + ": state out of range");
    if (f[1] == "goal") {
      imc.labels[q] |= kGoal;
    } else if (f[1] == "obstacle") {
      imc.labels[q] |= kObstacle;
    } else if (f[1] == "unsafe") {
      imc.labels[q] |= kUnsafe;
      imc.unsafe_state = q;
      have_unsafe = true;
    } else {
      throw InputError("line " + std::to_string(line) + ": unknown label '" + f[1] + "'");
    }
  });
  if (!have_unsafe) throw InputError("label file has no unsafe state");
  for (auto& row : imc.rows) {
    std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.to < b.to; });
  }
  imc.validate();
  return imc;
}

}  // namespace imcabs
