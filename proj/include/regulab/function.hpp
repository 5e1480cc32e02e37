#pragma once

#include <functional>
#include <optional>

#include "regulab/geometry.hpp"

namespace regulab {

/// f(x) = M x + b.
struct AffineForm {
  Matrix M;
  Vector b;
};

/// A vector-valued function oracle R^n -> R^m with an optional Jacobian.
///
/// Oracles must be pure and reentrant. When no analytic Jacobian is supplied,
/// jacobian() falls back to central finite differences.
class Function {
 public:
  using Eval = std::function<Vector(const Vector&)>;
  using Jac = std::function<Matrix(const Vector&)>;

  Function() = default;
  Function(int input_dim, int output_dim, Eval eval, Jac jac = {});

  static Function affine(Matrix M, Vector b);
  static Function zero(int input_dim, int output_dim);
  static Function identity(int dim);

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  bool valid() const { return static_cast<bool>(eval_); }
  bool has_jacobian() const { return static_cast<bool>(jac_); }

  /// Set when the function is known to be exactly affine.
  const std::optional<AffineForm>& affine_form() const { return affine_; }

  Vector operator()(const Vector& x) const;
  Matrix jacobian(const Vector& x) const;
  Matrix finite_difference_jacobian(const Vector& x, double h = 1e-6) const;

  friend Function operator+(const Function& a, const Function& b);
  friend Function operator-(const Function& a, const Function& b);
  friend Function operator*(double s, const Function& f);

 private:
  int input_dim_ = 0;
  int output_dim_ = 0;
  Eval eval_;
  Jac jac_;
  std::optional<AffineForm> affine_;
};

/// Scalar oracle for slopes; may return +inf outside its domain.
using ScalarFunction = std::function<double(const Vector&)>;

}  // namespace regulab
