#include "homog/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

namespace homog {

struct Expression::Node {
  enum Kind { Number, X1, X2, Y1, Y2, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Arcsin, Abs, Sqrt } kind;
  double value = 0.0;
  int a = -1;
  int b = -1;
};

class ExpressionParser {
 public:
  ExpressionParser(const std::string& s, bool allow_x) : s_(s), allow_x_(allow_x) {}

  Expression run() {
    Expression e;
    e.text_ = s_;
    const int root = expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
    e.root_ = root;
    e.uses_x_ = uses_x_;
    e.nodes_ = std::make_shared<const std::vector<Expression::Node>>(std::move(nodes_));
    return e;
  }

 private:
  using Node = Expression::Node;

  int add(Node::Kind k, int a = -1, int b = -1, double v = 0.0) {
    nodes_.push_back(Node{k, v, a, b});
    return static_cast<int>(nodes_.size()) - 1;
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  int expr() {
    int lhs = term();
    for (;;) {
      if (accept('+')) lhs = add(Node::Add, lhs, term());
      else if (accept('-')) lhs = add(Node::Sub, lhs, term());
      else return lhs;
    }
  }

  int term() {
    int lhs = factor();
    for (;;) {
      if (accept('*')) lhs = add(Node::Mul, lhs, factor());
      else if (accept('/')) lhs = add(Node::Div, lhs, factor());
      else return lhs;
    }
  }

  int factor() {
    const int b = base();
    if (accept('^')) return add(Node::Pow, b, factor());
    return b;
  }

  int base() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of expression", pos_);
    const char c = s_[pos_];
    if (c == '-') {
      ++pos_;
      return add(Node::Neg, base());
    }
    if (c == '(') {
      ++pos_;
      const int e = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) throw ParseError("malformed number", pos_);
      pos_ += static_cast<std::size_t>(end - begin);
      return add(Node::Number, -1, -1, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == '(') {
        Node::Kind k;
        if (id == "sin") k = Node::Sin;
        else if (id == "cos") k = Node::Cos;
        else if (id == "exp") k = Node::Exp;
        else if (id == "arcsin") k = Node::Arcsin;
        else if (id == "abs") k = Node::Abs;
        else if (id == "sqrt") k = Node::Sqrt;
        else throw ParseError("unknown function '" + id + "'", start);
        ++pos_;
        const int arg = expr();
        if (!accept(')')) throw ParseError("expected ')' after function argument", pos_);
        return add(k, arg);
      }
      if (id == "pi") return add(Node::Number, -1, -1, kPi);
      if (id == "e") return add(Node::Number, -1, -1, std::numbers::e);
      if (id == "y1") return add(Node::Y1);
      if (id == "y2") return add(Node::Y2);
      if (id == "x1" || id == "x2") {
        if (!allow_x_) throw ParseError("identifier '" + id + "' not allowed in a cell-only field", start);
        uses_x_ = true;
        return add(id == "x1" ? Node::X1 : Node::X2);
      }
      throw ParseError("unknown identifier '" + id + "'", start);
    }
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  const std::string& s_;
  bool allow_x_;
  std::size_t pos_ = 0;
  bool uses_x_ = false;
  std::vector<Node> nodes_;
};

Expression Expression::parse(const std::string& text, bool allow_x) {
  return ExpressionParser(text, allow_x).run();
}

double Expression::eval(const ExprVars& v) const {
  if (!nodes_) throw InvalidArgument("evaluating an empty expression");
  return eval_node(root_, v);
}

double Expression::eval_node(int id, const ExprVars& v) const {
  const Node& n = (*nodes_)[id];
  switch (n.kind) {
    case Node::Number: return n.value;
    case Node::X1: return v.x1;
    case Node::X2: return v.x2;
    case Node::Y1: return v.y1;
    case Node::Y2: return v.y2;
    case Node::Add: return eval_node(n.a, v) + eval_node(n.b, v);
    case Node::Sub: return eval_node(n.a, v) - eval_node(n.b, v);
    case Node::Mul: return eval_node(n.a, v) * eval_node(n.b, v);
    case Node::Div: return eval_node(n.a, v) / eval_node(n.b, v);
    case Node::Pow: {
      const double base = eval_node(n.a, v);
      const double ex = eval_node(n.b, v);
      if (ex == 2.0) return base * base;
      return std::pow(base, ex);
    }
    case Node::Neg: return -eval_node(n.a, v);
    case Node::Sin: return std::sin(eval_node(n.a, v));
    case Node::Cos: return std::cos(eval_node(n.a, v));
    case Node::Exp: return std::exp(eval_node(n.a, v));
    case Node::Arcsin: return std::asin(std::clamp(eval_node(n.a, v), -1.0, 1.0));
    case Node::Abs: return std::abs(eval_node(n.a, v));
    case Node::Sqrt: return std::sqrt(eval_node(n.a, v));
  }
  return 0.0;
}

}  // namespace homog
