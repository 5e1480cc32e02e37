#include "regulab/function.hpp"

#include <cmath>

#include "regulab/errors.hpp"

namespace regulab {

Function::Function(int input_dim, int output_dim, Eval eval, Jac jac)
    : input_dim_(input_dim),
      output_dim_(output_dim),
      eval_(std::move(eval)),
      jac_(std::move(jac)) {
  if (input_dim <= 0 || output_dim <= 0) {
    throw DimensionError("Function: dimensions must be positive");
  }
  if (!eval_) throw PreconditionError("Function: empty evaluation oracle");
}

Function Function::affine(Matrix M, Vector b) {
  if (M.rows() != b.size()) throw DimensionError("Function::affine");
  Function f(
      static_cast<int>(M.cols()), static_cast<int>(M.rows()),
      [M, b](const Vector& x) -> Vector { return M * x + b; },
      [M](const Vector&) -> Matrix { return M; });
  f.affine_ = AffineForm{std::move(M), std::move(b)};
  return f;
}

Function Function::zero(int input_dim, int output_dim) {
  return affine(Matrix::Zero(output_dim, input_dim), Vector::Zero(output_dim));
}

Function Function::identity(int dim) {
  return affine(Matrix::Identity(dim, dim), Vector::Zero(dim));
}

Vector Function::operator()(const Vector& x) const {
  if (!eval_) throw PreconditionError("Function: evaluation of an empty oracle");
  if (x.size() != input_dim_) {
    throw DimensionError("Function: expected input of dimension " +
                         std::to_string(input_dim_) + ", got " +
                         std::to_string(x.size()));
  }
  Vector y = eval_(x);
  if (y.size() != output_dim_) {
    throw DimensionError("Function: oracle returned wrong output dimension");
  }
  return y;
}

Matrix Function::jacobian(const Vector& x) const {
  if (jac_) {
    Matrix J = jac_(x);
    if (J.rows() != output_dim_ || J.cols() != input_dim_) {
      throw DimensionError("Function: Jacobian oracle has wrong shape");
    }
    return J;
  }
  return finite_difference_jacobian(x);
}

Matrix Function::finite_difference_jacobian(const Vector& x, double h) const {
  Matrix J(output_dim_, input_dim_);
  Vector xp = x;
  for (int j = 0; j < input_dim_; ++j) {
    const double step = h * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + step;
    const Vector fp = (*this)(xp);
    xp(j) = x(j) - step;
    const Vector fm = (*this)(xp);
    xp(j) = x(j);
    J.col(j) = (fp - fm) / (2.0 * step);
  }
  return J;
}

namespace {

void check_compatible(const Function& a, const Function& b) {
  if (!a.valid() || !b.valid()) {
    throw PreconditionError("Function: combining an empty oracle");
  }
  if (a.input_dim() != b.input_dim() || a.output_dim() != b.output_dim()) {
    throw DimensionError("Function: combining oracles of different shapes");
  }
}

Function combine(const Function& a, const Function& b, double sign) {
  check_compatible(a, b);
  if (a.affine_form() && b.affine_form()) {
    return Function::affine(a.affine_form()->M + sign * b.affine_form()->M,
                            a.affine_form()->b + sign * b.affine_form()->b);
  }
  Function::Jac jac;
  if (a.has_jacobian() && b.has_jacobian()) {
    jac = [a, b, sign](const Vector& x) -> Matrix {
      return a.jacobian(x) + sign * b.jacobian(x);
    };
  }
  return Function(
      a.input_dim(), a.output_dim(),
      [a, b, sign](const Vector& x) -> Vector { return a(x) + sign * b(x); },
      std::move(jac));
}

}  // namespace

Function operator+(const Function& a, const Function& b) {
  return combine(a, b, 1.0);
}

Function operator-(const Function& a, const Function& b) {
  return combine(a, b, -1.0);
}

Function operator*(double s, const Function& f) {
  if (!f.valid()) throw PreconditionError("Function: scaling an empty oracle");
  if (f.affine_form()) {
    return Function::affine(s * f.affine_form()->M, s * f.affine_form()->b);
  }
  Function::Jac jac;
  if (f.has_jacobian()) {
    jac = [f, s](const Vector& x) -> Matrix { return s * f.jacobian(x); };
  }
  return Function(
      f.input_dim(), f.output_dim(),
      [f, s](const Vector& x) -> Vector { return s * f(x); }, std::move(jac));
}

}  // namespace regulab
