#pragma once

#include <optional>
#include <string>
#include <vector>

#include "regulab/function.hpp"

namespace regulab {

/// One term of a component: coef * prod_j x_j^{powers_j}, or coef * fn(x_var)
/// with fn one of sin, cos, sqrt_abs, cube.
struct Term {
  double coef = 0.0;
  std::optional<std::vector<int>> powers;
  std::optional<std::string> fn;
  std::optional<int> var;
};

/// A closed-form function R^input_dim -> R^{components.size()}; each
/// component is a sum of terms.
struct FunctionSpec {
  int input_dim = 0;
  std::vector<std::vector<Term>> components;

  int output_dim() const { return static_cast<int>(components.size()); }

  /// Throws SchemaError naming the offending term.
  void validate() const;
};

/// Builds the oracle with an analytic Jacobian. Specs made only of monomials
/// of degree at most one come back as exactly affine functions.
Function build_function(const FunctionSpec& spec);

}  // namespace regulab
