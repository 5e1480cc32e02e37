#include "regulab/expression.hpp"

#include <cmath>

#include "regulab/errors.hpp"

namespace regulab {

namespace {

enum class Fn { Sin, Cos, SqrtAbs, Cube };

Fn parse_fn(const std::string& name) {
  if (name == "sin") return Fn::Sin;
  if (name == "cos") return Fn::Cos;
  if (name == "sqrt_abs") return Fn::SqrtAbs;
  if (name == "cube") return Fn::Cube;
  throw SchemaError("function term: unknown fn \"" + name +
                    "\" (expected sin, cos, sqrt_abs or cube)");
}

double apply(Fn fn, double u) {
  switch (fn) {
    case Fn::Sin: return std::sin(u);
    case Fn::Cos: return std::cos(u);
    case Fn::SqrtAbs: return std::sqrt(std::abs(u));
    case Fn::Cube: return u * u * u;
  }
  return 0.0;
}

// d/du; sqrt_abs has no derivative at 0 and reports 0 there.
double derivative(Fn fn, double u) {
  switch (fn) {
    case Fn::Sin: return std::cos(u);
    case Fn::Cos: return -std::sin(u);
    case Fn::SqrtAbs:
      return u == 0.0 ? 0.0 : (u > 0 ? 1.0 : -1.0) / (2.0 * std::sqrt(std::abs(u)));
    case Fn::Cube: return 3.0 * u * u;
  }
  return 0.0;
}

struct Compiled {
  double coef;
  bool is_fn;
  Fn fn;
  int var;
  std::vector<int> powers;
};

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

}  // namespace

void FunctionSpec::validate() const {
  if (input_dim <= 0) throw SchemaError("function: input_dim must be positive");
  if (components.empty()) throw SchemaError("function: no components");
  for (size_t c = 0; c < components.size(); ++c) {
    for (size_t t = 0; t < components[c].size(); ++t) {
      const Term& term = components[c][t];
      const std::string where = "function component " + std::to_string(c) +
                                " term " + std::to_string(t);
      if (!std::isfinite(term.coef)) throw SchemaError(where + ": coef");
      if (term.powers.has_value() == term.fn.has_value()) {
        throw SchemaError(where + ": give exactly one of powers or fn");
      }
      if (term.powers) {
        if (term.var) throw SchemaError(where + ": var only goes with fn");
        if (static_cast<int>(term.powers->size()) != input_dim) {
          throw SchemaError(where + ": powers length differs from input_dim");
        }
        for (int p : *term.powers) {
          if (p < 0) throw SchemaError(where + ": negative power");
        }
      } else {
        parse_fn(*term.fn);
        if (!term.var || *term.var < 0 || *term.var >= input_dim) {
          throw SchemaError(where + ": var missing or out of range");
        }
      }
    }
  }
}

Function build_function(const FunctionSpec& spec) {
  spec.validate();
  const int n = spec.input_dim;
  const int m = spec.output_dim();

  bool affine = true;
  std::vector<std::vector<Compiled>> comps(m);
  for (int c = 0; c < m; ++c) {
    for (const Term& t : spec.components[c]) {
      Compiled k{t.coef, t.fn.has_value(), Fn::Sin, t.var.value_or(0), {}};
      if (k.is_fn) {
        k.fn = parse_fn(*t.fn);
        affine = false;
      } else {
        k.powers = *t.powers;
        int degree = 0;
        for (int p : k.powers) degree += p;
        if (degree > 1) affine = false;
      }
      comps[c].push_back(std::move(k));
    }
  }

  if (affine) {
    Matrix M = Matrix::Zero(m, n);
    Vector b = Vector::Zero(m);
    for (int c = 0; c < m; ++c) {
      for (const auto& k : comps[c]) {
        int j = -1;
        for (int i = 0; i < n; ++i) {
          if (k.powers[i] == 1) j = i;
        }
        if (j < 0) {
          b(c) += k.coef;
        } else {
          M(c, j) += k.coef;
        }
      }
    }
    return Function::affine(std::move(M), std::move(b));
  }

  auto eval = [comps, m](const Vector& x) -> Vector {
    Vector y = Vector::Zero(m);
    for (int c = 0; c < m; ++c) {
      for (const auto& k : comps[c]) {
        if (k.is_fn) {
          y(c) += k.coef * apply(k.fn, x(k.var));
        } else {
          double v = k.coef;
          for (int i = 0; i < x.size(); ++i) v *= ipow(x(i), k.powers[i]);
          y(c) += v;
        }
      }
    }
    return y;
  };
  auto jac = [comps, m, n](const Vector& x) -> Matrix {
    Matrix J = Matrix::Zero(m, n);
    for (int c = 0; c < m; ++c) {
      for (const auto& k : comps[c]) {
        if (k.is_fn) {
          J(c, k.var) += k.coef * derivative(k.fn, x(k.var));
          continue;
        }
        for (int j = 0; j < n; ++j) {
          if (k.powers[j] == 0) continue;
          double v = k.coef * k.powers[j] * ipow(x(j), k.powers[j] - 1);
          for (int i = 0; i < n; ++i) {
            if (i != j) v *= ipow(x(i), k.powers[i]);
          }
          J(c, j) += v;
        }
      }
    }
    return J;
  };
  return Function(n, m, std::move(eval), std::move(jac));
}

}  // namespace regulab
