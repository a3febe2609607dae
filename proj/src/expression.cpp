#include "openfluid/expression.hpp"

#include <cctype>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace openfluid {

namespace {

enum class Op { add, sub, mul, div, pow, neg, var_x, var_y, var_t, number, call };

double call_fn(int id, double a) {
  switch (id) {
    case 0: return std::sin(a);
    case 1: return std::cos(a);
    case 2: return std::exp(a);
    case 3: return std::sqrt(a);
    case 4: return std::tanh(a);
    case 5: return std::log(a);
    case 6: return std::abs(a);
    default: return 0.0;
  }
}

int fn_id(const std::string& name) {
  static const char* names[] = {"sin", "cos", "exp", "sqrt", "tanh", "log", "abs"};
  for (int i = 0; i < 7; ++i)
    if (name == names[i]) return i;
  return -1;
}

}  // namespace

struct Expression::Node {
  Op op;
  double value = 0.0;  // for number
  int fn = -1;         // for call
  std::shared_ptr<const Node> lhs, rhs;

  double eval(double x, double y, double t) const {
    switch (op) {
      case Op::number: return value;
      case Op::var_x: return x;
      case Op::var_y: return y;
      case Op::var_t: return t;
      case Op::add: return lhs->eval(x, y, t) + rhs->eval(x, y, t);
      case Op::sub: return lhs->eval(x, y, t) - rhs->eval(x, y, t);
      case Op::mul: return lhs->eval(x, y, t) * rhs->eval(x, y, t);
      case Op::div: return lhs->eval(x, y, t) / rhs->eval(x, y, t);
      case Op::pow: return std::pow(lhs->eval(x, y, t), rhs->eval(x, y, t));
      case Op::neg: return -lhs->eval(x, y, t);
      case Op::call: return call_fn(fn, lhs->eval(x, y, t));
    }
    return 0.0;
  }

  bool uses_t() const {
    if (op == Op::var_t) return true;
    if (lhs && lhs->uses_t()) return true;
    if (rhs && rhs->uses_t()) return true;
    return false;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr run() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
    return e;
  }

private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("expression error at position " + std::to_string(pos_) +
                                " in \"" + s_ + "\": " + what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(Op op, NodePtr l = nullptr, NodePtr r = nullptr) {
    auto n = std::make_shared<Expression::Node>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  static NodePtr number(double v) {
    auto n = std::make_shared<Expression::Node>();
    n->op = Op::number;
    n->value = v;
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+'))
        lhs = make(Op::add, lhs, term());
      else if (eat('-'))
        lhs = make(Op::sub, lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*'))
        lhs = make(Op::mul, lhs, unary());
      else if (eat('/'))
        lhs = make(Op::div, lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    // right associative
    if (eat('^')) return make(Op::pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t end = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &end);
      } catch (...) {
        fail("bad number");
      }
      pos_ += end;
      return number(v);
    }
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      if (name == "x") return make(Op::var_x);
      if (name == "y") return make(Op::var_y);
      if (name == "t") return make(Op::var_t);
      if (name == "pi") return number(M_PI);
      if (name == "e") return number(M_E);
      int id = fn_id(name);
      if (id >= 0) {
        if (!eat('(')) fail("expected '(' after function name");
        NodePtr arg = expr();
        if (!eat(')')) fail("expected ')'");
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::call;
        n->fn = id;
        n->lhs = arg;
        return n;
      }
      fail("unknown identifier '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

Expression Expression::parse(const std::string& src) {
  Expression e;
  e.src_ = src;
  e.root_ = Parser(src).run();
  return e;
}

double Expression::operator()(double x, double y, double t) const {
  if (!root_) throw std::logic_error("evaluating empty expression");
  return root_->eval(x, y, t);
}

bool Expression::time_dependent() const { return root_ && root_->uses_t(); }

}  // namespace openfluid
