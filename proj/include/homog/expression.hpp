#pragma once

#include "homog/common.hpp"

#include <memory>
#include <string>
#include <vector>

namespace homog {

/// Variables available to an expression.
struct ExprVars {
  double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
};

/// Compiled arithmetic expression over x1, x2, y1, y2.
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := base ('^' factor)?
///   base   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' base
///
/// Constants: pi, e. Functions: sin, cos, exp, arcsin, abs, sqrt.
class Expression {
 public:
  /// Throws ParseError (with byte offset) on syntax errors and unknown
  /// identifiers. When `allow_x` is false, x1/x2 are rejected.
  static Expression parse(const std::string& text, bool allow_x = true);

  double eval(const ExprVars& v) const;
  const std::string& text() const { return text_; }
  bool uses_x() const { return uses_x_; }

 private:
  struct Node;
  std::string text_;
  std::shared_ptr<const std::vector<Node>> nodes_;
  int root_ = -1;
  bool uses_x_ = false;

  double eval_node(int id, const ExprVars& v) const;
  friend class ExpressionParser;
};

}  // namespace homog
