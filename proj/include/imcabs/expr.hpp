#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "imcabs/errors.hpp"
#include "imcabs/interval.hpp"

namespace imcabs {

enum class Op : std::uint8_t {
  Constant,
  StateVar,  // x<index>, zero-based internally
  NoiseVar,  // w<index>
  Add,
  Sub,
  Mul,
  Div,
  Pow,  // integer exponent stored in the node
  Neg,
  Sin,
  Cos,
  Exp,
  Sqrt,
  Abs,
};

/// Expression tree stored as a flat node arena; children precede parents.
class Expr {
 public:
  struct Node {
    Op op = Op::Constant;
    double value = 0.0;
    int index = 0;  // variable index or integer exponent
    std::int32_t lhs = -1;
    std::int32_t rhs = -1;
  };

  Expr() = default;

  static Expr constant(double v);
  static Expr state(int index);
  static Expr noise(int index);
  static Expr unary(Op op, const Expr& arg);
  static Expr binary(Op op, const Expr& lhs, const Expr& rhs);
  static Expr power(const Expr& base, int exponent);

  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::int32_t root() const { return static_cast<std::int32_t>(nodes_.size()) - 1; }
  const Node& node(std::int32_t i) const { return nodes_[static_cast<std::size_t>(i)]; }

  /// Subtree rooted at node `i` as a standalone expression.
  Expr subtree(std::int32_t i) const;

  /// Highest state / noise variable index referenced, or -1.
  int max_state_index() const;
  int max_noise_index() const;
  /// Number of occurrences of noise variable w<index>.
  std::size_t noise_occurrences(int index) const;
  bool has_noise() const;

  std::string to_string() const;

 private:
  std::int32_t append(const Expr& other);
  std::vector<Node> nodes_;
};

/// Parses one expression; line numbers in errors are offset by `line`.
Expr parse_expression(std::string_view text, std::size_t line = 1);

namespace detail {

inline double checked_div(double a, double b) {
  if (b == 0.0) throw EvaluationError("division by zero");
  return a / b;
}
inline Interval checked_div(const Interval& a, const Interval& b) { return a / b; }

inline double checked_sqrt(double a) {
  if (a < 0.0) throw EvaluationError("sqrt of a negative value");
  return std::sqrt(a);
}
inline Interval checked_sqrt(const Interval& a) { return imcabs::sqrt(a); }

inline double int_pow(double x, int n) {
  if (n >= 0) return ipow(x, n);
  return checked_div(1.0, ipow(x, -n));
}
inline Interval int_pow(const Interval& x, int n) { return imcabs::pow(x, n); }

}  // namespace detail

/// Evaluates `expr` with state values `x` and noise values `w`. Scalar is
/// double for pointwise evaluation and Interval for the natural interval
/// extension; both share this single traversal.
template <typename Scalar, typename StateVec, typename NoiseVec>
Scalar evaluate(const Expr& expr, const StateVec& x, const NoiseVec& w) {
  using std::abs, std::cos, std::exp, std::sin;
  using imcabs::abs, imcabs::cos, imcabs::exp, imcabs::sin;
  const auto& nodes = expr.nodes();
  std::vector<Scalar> val(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    auto arg = [&](std::int32_t k) -> const Scalar& { return val[static_cast<std::size_t>(k)]; };
    switch (n.op) {
      case Op::Constant: val[i] = Scalar(n.value); break;
      case Op::StateVar: val[i] = Scalar(x[n.index]); break;
      case Op::NoiseVar: val[i] = Scalar(w[n.index]); break;
      case Op::Add: val[i] = arg(n.lhs) + arg(n.rhs); break;
      case Op::Sub: val[i] = arg(n.lhs) - arg(n.rhs); break;
      case Op::Mul: val[i] = arg(n.lhs) * arg(n.rhs); break;
      case Op::Div: val[i] = detail::checked_div(arg(n.lhs), arg(n.rhs)); break;
      case Op::Pow: val[i] = detail::int_pow(arg(n.lhs), n.index); break;
      case Op::Neg: val[i] = -arg(n.lhs); break;
      case Op::Sin: val[i] = sin(arg(n.lhs)); break;
      case Op::Cos: val[i] = cos(arg(n.lhs)); break;
      case Op::Exp: val[i] = exp(arg(n.lhs)); break;
      case Op::Sqrt: val[i] = detail::checked_sqrt(arg(n.lhs)); break;
      case Op::Abs: val[i] = abs(arg(n.lhs)); break;
    }
  }
  return val.back();
}

}  // namespace imcabs
