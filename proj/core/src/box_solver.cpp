#include "soco_rcl/box_solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>

namespace soco {

namespace {

Vector clip(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

double projected_residual(const Vector& x, const Vector& g, const Vector& lo, const Vector& hi) {
  return (x - clip(x - g, lo, hi)).norm();
}

}  // namespace

BoxQpResult solve_box_qp(const Matrix& P, const Vector& q, const Vector& lower, const Vector& upper,
                         const Vector& start) {
  const Eigen::Index n = q.size();
  if (P.rows() != n || P.cols() != n || lower.size() != n || upper.size() != n || start.size() != n) {
    throw DimensionError("box QP: inconsistent sizes", static_cast<int>(n));
  }
  BoxQpResult r;
  r.x = clip(start, lower, upper);
  r.bound.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (lower[i] == upper[i]) r.bound[i] = -1;
  }

  const int cap = 100 + 20 * static_cast<int>(n);
  for (r.iterations = 0; r.iterations < cap; ++r.iterations) {
    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r.bound[i] == 0) free.push_back(i);
    }
    Vector target = r.x;
    if (!free.empty()) {
      const auto nf = static_cast<Eigen::Index>(free.size());
      Matrix pff(nf, nf);
      Vector rhs(nf);
      for (Eigen::Index a = 0; a < nf; ++a) {
        rhs[a] = -q[free[a]];
        for (Eigen::Index j = 0; j < n; ++j) {
          if (r.bound[j] != 0) rhs[a] -= P(free[a], j) * r.x[j];
        }
        for (Eigen::Index b = 0; b < nf; ++b) pff(a, b) = P(free[a], free[b]);
      }
      Eigen::LDLT<Matrix> ldlt(pff);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NumericalError("box QP: reduced Hessian is not positive definite", 0.0);
      }
      const Vector z = ldlt.solve(rhs);
      for (Eigen::Index a = 0; a < nf; ++a) target[free[a]] = z[a];
    }

    const Vector d = target - r.x;
    double step = 1.0;
    Eigen::Index blocking = -1;
    int side = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r.bound[i] != 0) continue;
      if (d[i] < 0.0 && r.x[i] + d[i] < lower[i]) {
        const double s = (lower[i] - r.x[i]) / d[i];
        if (s < step) step = s, blocking = i, side = -1;
      } else if (d[i] > 0.0 && r.x[i] + d[i] > upper[i]) {
        const double s = (upper[i] - r.x[i]) / d[i];
        if (s < step) step = s, blocking = i, side = 1;
      }
    }
    if (blocking >= 0) {
      r.x += std::max(step, 0.0) * d;
      r.x[blocking] = side < 0 ? lower[blocking] : upper[blocking];
      r.bound[blocking] = side;
      r.x = clip(r.x, lower, upper);
      continue;
    }
    r.x = target;

    const Vector g = P * r.x + q;
    Eigen::Index release = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r.bound[i] == 0 || lower[i] == upper[i]) continue;
      const double wrong = r.bound[i] < 0 ? -g[i] : g[i];
      if (wrong > worst) worst = wrong, release = i;
    }
    const double scale = 1e-13 * (1.0 + g.cwiseAbs().maxCoeff());
    if (release < 0 || worst <= scale) return r;
    r.bound[release] = 0;
  }
  throw NumericalError("box QP: active-set iteration cap reached",
                       projected_residual(r.x, P * r.x + q, lower, upper));
}

BoxSolveResult minimize_box_newton(const SmoothObjective& obj, const Vector& lower, const Vector& upper,
                                   const Vector& start, double tol, int max_iter) {
  BoxSolveResult r;
  r.x = clip(start, lower, upper);
  double fx = obj.value(r.x);
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    const Vector g = obj.gradient(r.x);
    r.residual = projected_residual(r.x, g, lower, upper);
    if (r.residual <= tol) {
      r.converged = true;
      return r;
    }
    const Matrix h = obj.hessian(r.x);
    const BoxQpResult sub = solve_box_qp(h, g, lower - r.x, upper - r.x, Vector::Zero(r.x.size()));
    const Vector d = sub.x;
    const double slope = g.dot(d);
    if (!(slope < 0.0)) {
      r.converged = r.residual <= 1e3 * tol;
      return r;
    }
    double t = 1.0;
    Vector next = r.x + d;
    double fn = obj.value(next);
    while (fn > fx + 1e-4 * t * slope && t > 1e-20) {
      t *= 0.5;
      next = clip(r.x + t * d, lower, upper);
      fn = obj.value(next);
    }
    if (next == r.x) {
      r.converged = r.residual <= 1e3 * tol;
      return r;
    }
    r.x = next;
    fx = fn;
  }
  r.residual = projected_residual(r.x, obj.gradient(r.x), lower, upper);
  r.converged = r.residual <= tol;
  return r;
}

BoxSolveResult minimize_box_gradient(const SmoothObjective& obj, const Vector& lower, const Vector& upper,
                                     const Vector& start, double tol, int max_iter) {
  BoxSolveResult r;
  r.x = clip(start, lower, upper);
  double fx = obj.value(r.x);
  double step = 1.0;
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    const Vector g = obj.gradient(r.x);
    r.residual = projected_residual(r.x, g, lower, upper);
    if (r.residual <= tol) {
      r.converged = true;
      return r;
    }
    step = std::min(step * 2.0, 1e6);
    while (true) {
      const Vector next = clip(r.x - step * g, lower, upper);
      const double fn = obj.value(next);
      if (fn <= fx + 1e-4 * g.dot(next - r.x) || step < 1e-18) {
        r.x = next;
        fx = fn;
        break;
      }
      step *= 0.5;
    }
  }
  r.residual = projected_residual(r.x, obj.gradient(r.x), lower, upper);
  r.converged = r.residual <= tol;
  return r;
}

}  // namespace soco
