#pragma once

// Initial-data expressions in x: numbers, pi, x, sin(.), cos(.), + - * / and
// integer powers. Division is by x-free subexpressions only.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | '+' unary | power
//   power  := atom ('^' integer)?
//   atom   := number | 'x' | 'pi' | ('sin' | 'cos') '(' expr ')' | '(' expr ')'

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>

#include "hierarg/error.hpp"
#include "hierarg/grid_function.hpp"

namespace hierarg {

class expression_error : public domain_error {
 public:
  using domain_error::domain_error;
};

class Expression {
 public:
  double operator()(double x) const { return root_->eval(x); }
  bool depends_on_x() const { return root_->has_x; }
  const std::string& source() const { return source_; }

  struct Node {
    enum Op { constant, var, add, sub, mul, div, neg, pow, sin, cos } op = constant;
    double value = 0.0;
    int exponent = 0;
    bool has_x = false;
    std::unique_ptr<Node> lhs, rhs;

    double eval(double x) const {
      switch (op) {
        case constant: return value;
        case var: return x;
        case add: return lhs->eval(x) + rhs->eval(x);
        case sub: return lhs->eval(x) - rhs->eval(x);
        case mul: return lhs->eval(x) * rhs->eval(x);
        case div: return lhs->eval(x) / rhs->eval(x);
        case neg: return -lhs->eval(x);
        case pow: return std::pow(lhs->eval(x), exponent);
        case sin: return std::sin(lhs->eval(x));
        case cos: return std::cos(lhs->eval(x));
      }
      return 0.0;
    }
  };

  Expression(std::string source, std::unique_ptr<Node> root) : source_(std::move(source)), root_(std::move(root)) {}

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

namespace detail {

class expression_parser {
 public:
  using Node = Expression::Node;
  using Ptr = std::unique_ptr<Node>;

  explicit expression_parser(std::string_view text) : s_(text) {}

  Ptr parse() {
    auto e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  static Ptr binary(Node::Op op, Ptr a, Ptr b) {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->has_x = a->has_x || (b && b->has_x);
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw expression_error("expression '" + std::string(s_) + "': " + what + " at position " + std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Ptr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = binary(Node::add, std::move(lhs), term());
      else if (accept('-')) lhs = binary(Node::sub, std::move(lhs), term());
      else return lhs;
    }
  }

  Ptr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = binary(Node::mul, std::move(lhs), unary());
      } else if (accept('/')) {
        auto rhs = unary();
        if (rhs->has_x) fail("division by an expression in x");
        lhs = binary(Node::div, std::move(lhs), std::move(rhs));
      } else {
        return lhs;
      }
    }
  }

  Ptr unary() {
    if (accept('-')) return binary(Node::neg, unary(), nullptr);
    if (accept('+')) return unary();
    return power();
  }

  Ptr power() {
    auto base = atom();
    if (!accept('^')) return base;
    skip();
    int e = 0;
    auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), e);
    if (ec != std::errc{} || e < 0) fail("exponent must be a non-negative integer");
    pos_ = static_cast<std::size_t>(end - s_.data());
    auto n = binary(Node::pow, std::move(base), nullptr);
    n->exponent = e;
    return n;
  }

  Ptr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double v = 0.0;
      auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
      if (ec != std::errc{}) fail("malformed number");
      pos_ = static_cast<std::size_t>(end - s_.data());
      auto n = std::make_unique<Node>();
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view word = s_.substr(start, pos_ - start);
      if (word == "x") {
        auto n = std::make_unique<Node>();
        n->op = Node::var;
        n->has_x = true;
        return n;
      }
      if (word == "pi") {
        auto n = std::make_unique<Node>();
        n->value = std::numbers::pi;
        return n;
      }
      if (word == "sin" || word == "cos") {
        expect('(');
        auto arg = expr();
        expect(')');
        return binary(word == "sin" ? Node::sin : Node::cos, std::move(arg), nullptr);
      }
      pos_ = start;
      fail("unknown name '" + std::string(word) + "'");
    }
    if (accept('(')) {
      auto e = expr();
      expect(')');
      return e;
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse_expression(std::string_view text) {
  return Expression(std::string(text), detail::expression_parser(text).parse());
}

/// A constant such as "12*pi".
inline double parse_constant(std::string_view text) {
  const auto e = parse_expression(text);
  if (e.depends_on_x()) throw expression_error("expression '" + std::string(text) + "' must not depend on x");
  return e(0.0);
}

/// Samples `e` on [0, π] as a function of the given parity after spot-checking
/// the symmetry.
inline GridFunction sample_expression(const Expression& e, Parity parity, std::size_t n) {
  const double sign = parity == Parity::odd ? -1.0 : 1.0;
  for (double x : {0.3, 1.1, 2.0, 2.9, std::numbers::pi}) {
    const double a = e(x), b = e(-x);
    if (std::abs(a - sign * b) > 1e-12 * std::max(1.0, std::abs(a)))
      throw expression_error("initial data '" + e.source() + "' is not " + to_string(parity));
  }
  if (parity == Parity::odd && std::abs(e(std::numbers::pi)) > 1e-12 * std::max(1.0, e.depends_on_x() ? std::abs(e(1.0)) : 1.0))
    throw expression_error("odd initial data '" + e.source() + "' must vanish at x = pi");
  return sample(parity, n, [&](double x) { return e(x); });
}

}  // namespace hierarg
