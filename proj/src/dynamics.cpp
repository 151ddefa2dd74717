#include "imcabs/dynamics.hpp"

#include <sstream>

#include "imcabs/errors.hpp"

namespace imcabs {

namespace {

struct SignedTerm {
  std::int32_t node;
  bool negative;
};

void flatten_sum(const Expr& e, std::int32_t i, bool negative, std::vector<SignedTerm>& out) {
  const auto& n = e.node(i);
  if (n.op == Op::Add) {
    flatten_sum(e, n.lhs, negative, out);
    flatten_sum(e, n.rhs, negative, out);
  } else if (n.op == Op::Sub) {
    flatten_sum(e, n.lhs, negative, out);
    flatten_sum(e, n.rhs, !negative, out);
  } else {
    out.push_back({i, negative});
  }
}

void flatten_product(const Expr& e, std::int32_t i, std::vector<std::int32_t>& out) {
  const auto& n = e.node(i);
  if (n.op == Op::Mul) {
    flatten_product(e, n.lhs, out);
    flatten_product(e, n.rhs, out);
  } else {
    out.push_back(i);
  }
}

bool is_noise_var(const Expr& e, std::int32_t i, int index) {
  const auto& n = e.node(i);
  return n.op == Op::NoiseVar && n.index == index;
}

std::string component_label(std::size_t i) { return "component " + std::to_string(i + 1); }

// g_i from f_i = g_i + w_i, verified syntactically.
Expr additive_nominal(const Expr& f, std::size_t i) {
  const int wi = static_cast<int>(i);
  if (!f.has_noise()) return f;
  std::vector<SignedTerm> terms;
  flatten_sum(f, f.root(), false, terms);
  Expr g;
  bool found = false;
  for (const auto& t : terms) {
    if (!found && !t.negative && is_noise_var(f, t.node, wi)) {
      found = true;
      continue;
    }
    Expr sub = f.subtree(t.node);
    if (sub.has_noise()) {
      throw StructureError(component_label(i) + ": additive structure requires w" +
                           std::to_string(i + 1) + " to appear once as '+ w" +
                           std::to_string(i + 1) + "'");
    }
    if (g.empty()) {
      g = t.negative ? Expr::unary(Op::Neg, sub) : sub;
    } else {
      g = Expr::binary(t.negative ? Op::Sub : Op::Add, g, sub);
    }
  }
  if (!found) {
    throw StructureError(component_label(i) + ": additive structure requires a '+ w" +
                         std::to_string(i + 1) + "' term");
  }
  return g.empty() ? Expr::constant(0.0) : g;
}

// g_i from f_i = g_i * w_i, verified syntactically.
Expr multiplicative_nominal(const Expr& f, std::size_t i) {
  const int wi = static_cast<int>(i);
  if (!f.has_noise()) return f;
  std::vector<std::int32_t> factors;
  flatten_product(f, f.root(), factors);
  Expr g;
  bool found = false;
  for (auto k : factors) {
    if (!found && is_noise_var(f, k, wi)) {
      found = true;
      continue;
    }
    Expr sub = f.subtree(k);
    if (sub.has_noise()) {
      throw StructureError(component_label(i) + ": multiplicative structure requires w" +
                           std::to_string(i + 1) + " to appear once as a top-level factor");
    }
    g = g.empty() ? sub : Expr::binary(Op::Mul, g, sub);
  }
  if (!found) {
    throw StructureError(component_label(i) + ": multiplicative structure requires a '* w" +
                         std::to_string(i + 1) + "' factor");
  }
  return g.empty() ? Expr::constant(1.0) : g;
}

}  // namespace

NoiseStructure parse_structure(std::string_view name) {
  if (name == "additive") return NoiseStructure::Additive;
  if (name == "multiplicative") return NoiseStructure::Multiplicative;
  if (name == "general") return NoiseStructure::General;
  throw InvalidArgument("unknown noise structure '" + std::string(name) + "'");
}

std::string_view to_string(NoiseStructure s) {
  switch (s) {
    case NoiseStructure::Additive: return "additive";
    case NoiseStructure::Multiplicative: return "multiplicative";
    case NoiseStructure::General: return "general";
  }
  return "?";
}

DynamicsModel::DynamicsModel(std::vector<Expr> components, NoiseStructure structure,
                             std::vector<Monotonicity> monotonicity)
    : components_(std::move(components)),
      monotonicity_(std::move(monotonicity)),
      structure_(structure) {
  const std::size_t n = components_.size();
  if (n == 0) throw InvalidArgument("dynamics need at least one component");
  if (monotonicity_.empty()) monotonicity_.assign(n, Monotonicity::Unknown);
  if (monotonicity_.size() != n) throw InvalidArgument("one monotonicity flag per component");
  if (structure_ != NoiseStructure::General &&
      std::any_of(monotonicity_.begin(), monotonicity_.end(),
                  [](Monotonicity m) { return m != Monotonicity::Unknown; })) {
    throw InvalidArgument("monotonicity flags apply to general structure only");
  }
  nominal_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& f = components_[i];
    if (f.empty()) throw InvalidArgument(component_label(i) + " is empty");
    if (f.max_state_index() >= static_cast<int>(n)) {
      throw StructureError(component_label(i) + " references x" +
                           std::to_string(f.max_state_index() + 1) + " beyond dimension " +
                           std::to_string(n));
    }
    for (int j = 0; j <= f.max_noise_index(); ++j) {
      if (j != static_cast<int>(i) && f.noise_occurrences(j) > 0) {
        throw StructureError(component_label(i) + " references w" + std::to_string(j + 1) +
                             "; noise must act component-wise");
      }
    }
    switch (structure_) {
      case NoiseStructure::Additive:
        nominal_[i] = additive_nominal(f, i);
        if (!f.has_noise()) f = Expr::binary(Op::Add, f, Expr::noise(static_cast<int>(i)));
        break;
      case NoiseStructure::Multiplicative:
        nominal_[i] = multiplicative_nominal(f, i);
        if (!f.has_noise()) f = Expr::binary(Op::Mul, f, Expr::noise(static_cast<int>(i)));
        break;
      case NoiseStructure::General:
        break;
    }
  }
}

DynamicsModel parse_dynamics(std::span<const std::string> lines, std::size_t n,
                             NoiseStructure structure, std::vector<Monotonicity> monotonicity) {
  if (lines.size() != n) {
    throw InvalidArgument("expected " + std::to_string(n) + " dynamics expressions, got " +
                          std::to_string(lines.size()));
  }
  std::vector<Expr> components;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    components.push_back(parse_expression(lines[i], i + 1));
  }
  return DynamicsModel(std::move(components), structure, std::move(monotonicity));
}

DynamicsModel parse_dynamics(std::string_view text, std::size_t n, NoiseStructure structure,
                             std::vector<Monotonicity> monotonicity) {
  std::vector<std::string> lines;
  std::vector<std::size_t> line_numbers;
  std::istringstream is{std::string(text)};
  std::string line;
  for (std::size_t no = 1; std::getline(is, line); ++no) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(line);
    line_numbers.push_back(no);
  }
  if (lines.size() != n) {
    throw InvalidArgument("expected " + std::to_string(n) + " dynamics expressions, got " +
                          std::to_string(lines.size()));
  }
  std::vector<Expr> components;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    components.push_back(parse_expression(lines[i], line_numbers[i]));
  }
  return DynamicsModel(std::move(components), structure, std::move(monotonicity));
}

Eigen::VectorXd eval_point(const DynamicsModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::VectorXd>& w) {
  const auto n = static_cast<Eigen::Index>(model.dim());
  if (x.size() != n || w.size() != n) throw InvalidArgument("eval_point dimension mismatch");
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    try {
      out[i] = evaluate<double>(model.component(static_cast<std::size_t>(i)), x, w);
    } catch (const EvaluationError& e) {
      throw EvaluationError(component_label(static_cast<std::size_t>(i)) + ": " + e.what());
    }
  }
  return out;
}

Interval interval_extension(const Expr& expr, const Box& xbox, const Box& wbox) {
  if (expr.max_state_index() >= static_cast<int>(xbox.dim()) ||
      expr.max_noise_index() >= static_cast<int>(wbox.dim())) {
    throw InvalidArgument("expression references variables beyond the box dimensions");
  }
  return evaluate<Interval>(expr, xbox.sides(), wbox.sides());
}

PosteriorBox posterior_f(const DynamicsModel& model, const Box& q) {
  if (!model.is_structured()) {
    throw InvalidArgument("posterior_f needs an additive or multiplicative model");
  }
  if (q.dim() != model.dim()) throw InvalidArgument("posterior_f dimension mismatch");
  std::vector<Interval> sides(model.dim());
  for (std::size_t i = 0; i < model.dim(); ++i) {
    try {
      sides[i] = interval_extension(model.nominal(i), q, q);
    } catch (const EvaluationError& e) {
      throw EvaluationError(component_label(i) + ": " + e.what());
    }
  }
  return Box(std::move(sides));
}

Box posterior_from_f(NoiseStructure structure, const PosteriorBox& postf, const Box& c) {
  if (postf.dim() != c.dim()) throw InvalidArgument("posterior dimension mismatch");
  std::vector<Interval> sides(postf.dim());
  for (std::size_t i = 0; i < postf.dim(); ++i) {
    switch (structure) {
      case NoiseStructure::Additive: sides[i] = postf[i] + c[i]; break;
      case NoiseStructure::Multiplicative: sides[i] = postf[i] * c[i]; break;
      case NoiseStructure::General:
        throw InvalidArgument("posterior_from_f needs an additive or multiplicative structure");
    }
  }
  return Box(std::move(sides));
}

Box posterior(const DynamicsModel& model, const Box& q, const Box& c) {
  if (q.dim() != model.dim() || c.dim() != model.dim()) {
    throw InvalidArgument("posterior dimension mismatch");
  }
  if (model.is_structured()) return posterior_from_f(model.structure(), posterior_f(model, q), c);
  std::vector<Interval> sides(model.dim());
  for (std::size_t i = 0; i < model.dim(); ++i) {
    try {
      const auto m = model.monotonicity(i);
      if (m == Monotonicity::Unknown || !c[i].is_bounded()) {
        sides[i] = interval_extension(model.component(i), q, c);
      } else {
        // Monotone in w_i: the image over c is spanned by the images at its two ends.
        std::vector<Interval> lo_side(c.sides().begin(), c.sides().end());
        std::vector<Interval> hi_side = lo_side;
        lo_side[i] = Interval(c[i].lo);
        hi_side[i] = Interval(c[i].hi);
        sides[i] = hull(interval_extension(model.component(i), q, Box(std::move(lo_side))),
                        interval_extension(model.component(i), q, Box(std::move(hi_side))));
      }
    } catch (const EvaluationError& e) {
      throw EvaluationError(component_label(i) + ": " + e.what());
    }
  }
  return Box(std::move(sides));
}

}  // namespace imcabs
