#include "otlab/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

namespace otlab {

struct Expression::Node {
  enum class Kind { Number, Variable, Negate, Binary, Call1, Call2 };
  Kind kind = Kind::Number;
  double value = 0.0;
  int variable = 0;
  char op = 0;
  std::string name;
  std::shared_ptr<const Node> a, b;

  double eval(const Vec3& x) const {
    switch (kind) {
      case Kind::Number:
        return value;
      case Kind::Variable:
        return x[variable];
      case Kind::Negate:
        return -a->eval(x);
      case Kind::Binary: {
        const double l = a->eval(x), r = b->eval(x);
        switch (op) {
          case '+': return l + r;
          case '-': return l - r;
          case '*': return l * r;
          case '/': return l / r;
          default: return std::pow(l, r);
        }
      }
      case Kind::Call1: {
        const double v = a->eval(x);
        if (name == "sin") return std::sin(v);
        if (name == "cos") return std::cos(v);
        if (name == "tan") return std::tan(v);
        if (name == "exp") return std::exp(v);
        if (name == "log") return std::log(v);
        if (name == "sqrt") return std::sqrt(v);
        if (name == "abs") return std::abs(v);
        if (name == "tanh") return std::tanh(v);
        if (name == "cosh") return std::cosh(v);
        if (name == "sinh") return std::sinh(v);
        // bump
        return std::abs(v) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - v * v)) : 0.0;
      }
      case Kind::Call2: {
        const double l = a->eval(x), r = b->eval(x);
        if (name == "pow") return std::pow(l, r);
        if (name == "min") return std::min(l, r);
        return std::max(l, r);
      }
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

bool is_unary_function(const std::string& n) {
  static const std::vector<std::string> names{"sin", "cos", "tan", "exp", "log", "sqrt",
                                              "abs", "tanh", "cosh", "sinh", "bump"};
  for (const auto& s : names)
    if (s == n) return true;
  return false;
}

bool is_binary_function(const std::string& n) { return n == "pow" || n == "min" || n == "max"; }

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    auto n = expression();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("", "expression '" + s_ + "' at offset " + std::to_string(pos_) + ": " + msg);
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

  static NodePtr binary(char op, NodePtr l, NodePtr r) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = Expression::Node::Kind::Binary;
    n->op = op;
    n->a = std::move(l);
    n->b = std::move(r);
    return n;
  }

  NodePtr expression() {
    auto lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = binary('+', lhs, term());
      else if (accept('-'))
        lhs = binary('-', lhs, term());
      else
        return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*'))
        lhs = binary('*', lhs, unary());
      else if (accept('/'))
        lhs = binary('/', lhs, unary());
      else
        return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Expression::Node::Kind::Negate;
      n->a = unary();
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return binary('^', base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      auto n = expression();
      expect(')');
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Expression::Node>();
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    auto n = std::make_shared<Expression::Node>();
    if (name == "pi" || name == "e") {
      n->value = name == "pi" ? std::numbers::pi : std::numbers::e;
      return n;
    }
    int var = -1;
    if (name == "x1" || name == "x") var = 0;
    if (name == "x2" || name == "y") var = 1;
    if (name == "x3" || name == "z") var = 2;
    if (var >= 0) {
      n->kind = Expression::Node::Kind::Variable;
      n->variable = var;
      return n;
    }
    if (is_unary_function(name)) {
      expect('(');
      n->kind = Expression::Node::Kind::Call1;
      n->name = name;
      n->a = expression();
      expect(')');
      return n;
    }
    if (is_binary_function(name)) {
      expect('(');
      n->kind = Expression::Node::Kind::Call2;
      n->name = name;
      n->a = expression();
      expect(',');
      n->b = expression();
      expect(')');
      return n;
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& source) {
  Expression e;
  e.source_ = source;
  e.root_ = Parser(source).parse();
  return e;
}

Expression Expression::constant(double value) {
  Expression e;
  auto n = std::make_shared<Node>();
  n->value = value;
  e.source_ = std::to_string(value);
  e.root_ = std::move(n);
  return e;
}

double Expression::operator()(const Vec3& x) const { return root_->eval(x); }

}  // namespace otlab
