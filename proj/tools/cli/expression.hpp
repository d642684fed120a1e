#pragma once

#include "helmopt/common.hpp"

#include <memory>
#include <string>

namespace helmopt::cli {

/// Scalar expression in x and y, e.g. "1 + x + y^2/2" or "sin(pi*x)*exp(-y)".
/// Grammar: + - * / ^ (right-associative), unary minus, numbers, the
/// variables x and y, the constant pi and the functions sin, cos, tan, exp,
/// log, sqrt, abs.
class Expression {
 public:
  struct Node;

  static Expression parse(const std::string& text);

  double operator()(const Vec2& p) const;
  const std::string& text() const { return text_; }
  /// True when the expression does not reference x or y.
  bool is_constant() const { return constant_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  bool constant_ = true;
};

}  // namespace helmopt::cli
