#pragma once

#include <memory>
#include <string>

#include "otlab/common.hpp"

namespace otlab {

/// Compiled arithmetic expression over the coordinates x1, x2, x3.
///
/// Grammar: numbers, the variables x1..x3 (aliases x, y, z), the constants
/// pi and e, binary + - * / ^, unary minus, parentheses, the functions
/// sin cos tan exp log sqrt abs tanh cosh sinh, the two-argument functions
/// pow min max, and bump(s) = exp(1 - 1/(1 - s^2)) for |s| < 1, else 0.
/// `^` is right associative and binds tighter than unary minus.
class Expression {
 public:
  /// Throws ValidationError (empty pointer) describing the first syntax error.
  static Expression parse(const std::string& source);
  static Expression constant(double value);

  double operator()(const Vec3& x) const;
  const std::string& source() const noexcept { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace otlab
