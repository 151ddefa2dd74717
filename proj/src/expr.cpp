#include "imcabs/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace imcabs {

Expr Expr::constant(double v) {
  Expr e;
  e.nodes_.push_back({Op::Constant, v, 0, -1, -1});
  return e;
}

Expr Expr::state(int index) {
  Expr e;
  e.nodes_.push_back({Op::StateVar, 0.0, index, -1, -1});
  return e;
}

Expr Expr::noise(int index) {
  Expr e;
  e.nodes_.push_back({Op::NoiseVar, 0.0, index, -1, -1});
  return e;
}

std::int32_t Expr::append(const Expr& other) {
  const auto offset = static_cast<std::int32_t>(nodes_.size());
  for (auto n : other.nodes_) {
    if (n.lhs >= 0) n.lhs += offset;
    if (n.rhs >= 0) n.rhs += offset;
    nodes_.push_back(n);
  }
  return static_cast<std::int32_t>(nodes_.size()) - 1;
}

Expr Expr::unary(Op op, const Expr& arg) {
  Expr e;
  const auto a = e.append(arg);
  e.nodes_.push_back({op, 0.0, 0, a, -1});
  return e;
}

Expr Expr::binary(Op op, const Expr& lhs, const Expr& rhs) {
  Expr e;
  const auto a = e.append(lhs);
  const auto b = e.append(rhs);
  e.nodes_.push_back({op, 0.0, 0, a, b});
  return e;
}

Expr Expr::power(const Expr& base, int exponent) {
  Expr e;
  const auto a = e.append(base);
  e.nodes_.push_back({Op::Pow, 0.0, exponent, a, -1});
  return e;
}

Expr Expr::subtree(std::int32_t i) const {
  // Collect the reachable nodes in ascending order, then remap indices.
  std::vector<char> keep(nodes_.size(), 0);
  keep[static_cast<std::size_t>(i)] = 1;
  for (std::int32_t k = i; k >= 0; --k) {
    if (!keep[static_cast<std::size_t>(k)]) continue;
    const auto& n = node(k);
    if (n.lhs >= 0) keep[static_cast<std::size_t>(n.lhs)] = 1;
    if (n.rhs >= 0) keep[static_cast<std::size_t>(n.rhs)] = 1;
  }
  std::vector<std::int32_t> remap(nodes_.size(), -1);
  Expr out;
  for (std::int32_t k = 0; k <= i; ++k) {
    if (!keep[static_cast<std::size_t>(k)]) continue;
    auto n = node(k);
    if (n.lhs >= 0) n.lhs = remap[static_cast<std::size_t>(n.lhs)];
    if (n.rhs >= 0) n.rhs = remap[static_cast<std::size_t>(n.rhs)];
    remap[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(out.nodes_.size());
    out.nodes_.push_back(n);
  }
  return out;
}

int Expr::max_state_index() const {
  int m = -1;
  for (const auto& n : nodes_) {
    if (n.op == Op::StateVar) m = std::max(m, n.index);
  }
  return m;
}

int Expr::max_noise_index() const {
  int m = -1;
  for (const auto& n : nodes_) {
    if (n.op == Op::NoiseVar) m = std::max(m, n.index);
  }
  return m;
}

std::size_t Expr::noise_occurrences(int index) const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [&](const Node& n) {
    return n.op == Op::NoiseVar && n.index == index;
  }));
}

bool Expr::has_noise() const { return max_noise_index() >= 0; }

namespace {

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    default: return "?";
  }
}

void print(const Expr& e, std::int32_t i, std::ostringstream& os) {
  const auto& n = e.node(i);
  switch (n.op) {
    case Op::Constant: os << n.value; break;
    case Op::StateVar: os << 'x' << n.index + 1; break;
    case Op::NoiseVar: os << 'w' << n.index + 1; break;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const char sym = n.op == Op::Add ? '+' : n.op == Op::Sub ? '-' : n.op == Op::Mul ? '*' : '/';
      os << '(';
      print(e, n.lhs, os);
      os << ' ' << sym << ' ';
      print(e, n.rhs, os);
      os << ')';
      break;
    }
    case Op::Pow:
      os << '(';
      print(e, n.lhs, os);
      os << ")^" << n.index;
      break;
    case Op::Neg:
      os << "-(";
      print(e, n.lhs, os);
      os << ')';
      break;
    default:
      os << function_name(n.op) << '(';
      print(e, n.lhs, os);
      os << ')';
  }
}

class Parser {
 public:
  Parser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, line_, pos_ + 1); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = Expr::binary(Op::Add, lhs, term());
      } else if (accept('-')) {
        lhs = Expr::binary(Op::Sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (accept('*')) {
        lhs = Expr::binary(Op::Mul, lhs, factor());
      } else if (accept('/')) {
        lhs = Expr::binary(Op::Div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    Expr b = base();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) ++pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      int exponent = 0;
      const char* first = text_.data() + start;
      const char* last = text_.data() + pos_;
      if (*first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, exponent);
      if (ec != std::errc() || ptr != last || first == last) {
        pos_ = start;
        fail("expected integer exponent");
      }
      return Expr::power(b, exponent);
    }
    return b;
  }

  int variable_index() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    int index = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, index);
    if (ec != std::errc() || start == pos_ || index < 1) {
      pos_ = start;
      fail("expected variable index >= 1");
    }
    return index - 1;
  }

  Expr base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("missing operand");
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return Expr::unary(Op::Neg, base());
    }
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view word = text_.substr(start, pos_ - start);
      if (word == "x") return Expr::state(variable_index());
      if (word == "w") return Expr::noise(variable_index());
      Op op;
      if (word == "sin") {
        op = Op::Sin;
      } else if (word == "cos") {
        op = Op::Cos;
      } else if (word == "exp") {
        op = Op::Exp;
      } else if (word == "sqrt") {
        op = Op::Sqrt;
      } else if (word == "abs") {
        op = Op::Abs;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(word) + "'");
      }
      expect('(');
      Expr arg = expr();
      expect(')');
      return Expr::unary(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return Expr::constant(v);
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Expr::to_string() const {
  if (nodes_.empty()) return "";
  std::ostringstream os;
  print(*this, root(), os);
  return os.str();
}

Expr parse_expression(std::string_view text, std::size_t line) { return Parser(text, line).parse(); }

}  // namespace imcabs
