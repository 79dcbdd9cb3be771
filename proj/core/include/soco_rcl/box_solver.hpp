#pragma once

#include "soco_rcl/types.hpp"

#include <functional>
#include <vector>

namespace soco {

struct BoxQpResult {
  Vector x;
  /// -1 pinned at lower, +1 pinned at upper, 0 free.
  std::vector<int> bound;
  int iterations = 0;
};

/// min 1/2 x'Px + q'x subject to lower <= x <= upper, P symmetric positive definite.
///
/// Primal active-set method started from clip(start). Exact up to the linear
/// solves, so it is the reference for small dense problems.
BoxQpResult solve_box_qp(const Matrix& P, const Vector& q, const Vector& lower, const Vector& upper,
                         const Vector& start);

struct SmoothObjective {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

struct BoxSolveResult {
  Vector x;
  double residual = 0.0;  ///< ||x - clip(x - grad)||
  int iterations = 0;
  bool converged = false;
};

/// Projected Newton with box-QP subproblems and Armijo backtracking. Infinite
/// bounds are allowed.
BoxSolveResult minimize_box_newton(const SmoothObjective& obj, const Vector& lower, const Vector& upper,
                                   const Vector& start, double tol = 1e-12, int max_iter = 200);

/// Projected gradient with Armijo backtracking; only needs value and gradient.
BoxSolveResult minimize_box_gradient(const SmoothObjective& obj, const Vector& lower, const Vector& upper,
                                     const Vector& start, double tol = 1e-8, int max_iter = 100000);

}  // namespace soco
