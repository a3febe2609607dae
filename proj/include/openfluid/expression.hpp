#pragma once

#include <memory>
#include <string>

namespace openfluid {

/// Arithmetic expression over (x, y, t).
///
/// Grammar: + - * / ^, unary minus, parentheses, functions
/// sin cos exp sqrt tanh log abs, constants pi and e, literals.
/// Used for initial conditions, source terms, R/phi/Z profiles and
/// boundary data given as strings in scenario configs.
class Expression {
public:
  Expression() = default;

  /// Parses `src`; throws std::invalid_argument with position info on failure.
  static Expression parse(const std::string& src);

  double operator()(double x, double y = 0.0, double t = 0.0) const;

  bool valid() const { return root_ != nullptr; }
  const std::string& source() const { return src_; }

  /// True when the expression references the time variable.
  bool time_dependent() const;

  struct Node;

private:
  std::shared_ptr<const Node> root_;
  std::string src_;
};

}  // namespace openfluid
