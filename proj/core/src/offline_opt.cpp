#include "soco_rcl/box_solver.hpp"
#include "soco_rcl/experts.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace soco::experts {

namespace {

// Dense active-set refinement is exact; past this size fall back to projected gradient.
constexpr Eigen::Index kDenseBoxLimit = 600;

struct NormalEquations {
  Eigen::SparseMatrix<double> hessian;
  Vector rhs;
  double constant = 0.0;
};

// Objective 1/2 z'Hz - rhs'z + constant over the stacked actions z = (x_1..x_T).
NormalEquations banded_system(const ProblemInstance& inst, const QuadraticTracking& f,
                              const std::vector<Matrix>& blocks) {
  const int T = inst.horizon();
  const int n = inst.dim();
  const int p = static_cast<int>(blocks.size());
  const Matrix hq = 2.0 * f.scale() * f.weight();
  std::vector<Eigen::Triplet<double>> trip;
  Vector rhs = Vector::Zero(static_cast<Eigen::Index>(T) * n);
  double constant = 0.0;

  auto add_block = [&](int r, int c, const Matrix& m) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (m(i, j) != 0.0) trip.emplace_back(r * n + i, c * n + j, m(i, j));
      }
    }
  };

  for (int t = 1; t <= T; ++t) {
    const Context& y = inst.context(t);
    add_block(t - 1, t - 1, hq);
    rhs.segment((t - 1) * n, n) += hq * y;
    constant += f.scale() * y.dot(f.weight() * y);

    // Residual r_t = sum_{k=0..p} C_k x_{t-k} with C_0 = I, C_i = -A_i; initial
    // actions move to the constant part c_t.
    std::vector<std::pair<int, Matrix>> terms{{t, Matrix::Identity(n, n)}};
    Vector c = Vector::Zero(n);
    for (int i = 1; i <= p; ++i) {
      if (t - i >= 1) {
        terms.emplace_back(t - i, -blocks[i - 1]);
      } else {
        c += blocks[i - 1] * inst.initial_actions[static_cast<std::size_t>(t - i + p - 1)];
      }
    }
    for (const auto& [s, cs] : terms) {
      for (const auto& [r, cr] : terms) add_block(s - 1, r - 1, cs.transpose() * cr);
      rhs.segment((s - 1) * n, n) += cs.transpose() * c;
    }
    constant += 0.5 * c.squaredNorm();
  }
  NormalEquations eq;
  eq.hessian.resize(static_cast<Eigen::Index>(T) * n, static_cast<Eigen::Index>(T) * n);
  eq.hessian.setFromTriplets(trip.begin(), trip.end());
  eq.rhs = std::move(rhs);
  eq.constant = constant;
  return eq;
}

std::vector<ActionVector> unstack(const Vector& z, int T, int n) {
  std::vector<ActionVector> out;
  for (int t = 0; t < T; ++t) out.emplace_back(z.segment(static_cast<Eigen::Index>(t) * n, n));
  return out;
}

Vector stack(const std::vector<ActionVector>& xs) {
  const auto n = xs.front().size();
  Vector z(static_cast<Eigen::Index>(xs.size()) * n);
  for (std::size_t t = 0; t < xs.size(); ++t) z.segment(static_cast<Eigen::Index>(t) * n, n) = xs[t];
  return z;
}

Vector tile(const Vector& v, int T) {
  Vector z(v.size() * T);
  for (int t = 0; t < T; ++t) z.segment(static_cast<Eigen::Index>(t) * v.size(), v.size()) = v;
  return z;
}

Trajectory projected_gradient_opt(const ProblemInstance& inst, const CostModel& model, const Vector& start) {
  const int T = inst.horizon();
  const int n = inst.dim();
  SmoothObjective obj;
  obj.value = [&](const Vector& z) { return eval_cost(inst, model, unstack(z, T, n)).total; };
  obj.gradient = [&](const Vector& z) { return stack(cost_gradient(inst, model, unstack(z, T, n))); };
  // Central differences of the analytic gradient, eigenvalues floored so the
  // Newton subproblem stays convex.
  obj.hessian = [&](const Vector& z) {
    const Eigen::Index m = z.size();
    Matrix h(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double e = 1e-6 * std::max(1.0, std::abs(z[i]));
      Vector zp = z, zm = z;
      zp[i] += e;
      zm[i] -= e;
      h.col(i) = (obj.gradient(zp) - obj.gradient(zm)) / (2.0 * e);
    }
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const double floor = 1e-8 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    return Matrix(es.eigenvectors() * es.eigenvalues().cwiseMax(floor).asDiagonal() * es.eigenvectors().transpose());
  };
  const Vector lo = tile(inst.space.lower, T);
  const Vector hi = tile(inst.space.upper, T);
  BoxSolveResult r;
  r.x = start;
  if (start.size() <= kDenseBoxLimit) r = minimize_box_newton(obj, lo, hi, start, 1e-10, 200);
  if (!r.converged) r = minimize_box_gradient(obj, lo, hi, r.x, 1e-8, 100000);
  if (!r.converged) throw NumericalError("offline optimum: projected gradient hit the iteration cap", r.residual);
  return eval_cost(inst, model, unstack(r.x, T, n));
}

}  // namespace

Trajectory solve_opt(const ProblemInstance& instance, const CostModel& model) {
  instance.validate();
  if (model.memory() != instance.memory()) {
    throw DimensionError("cost model memory differs from number of initial actions", model.memory());
  }
  const int T = instance.horizon();
  const int n = instance.dim();
  const auto* quad = dynamic_cast<const QuadraticTracking*>(model.hitting.get());
  const auto blocks = model.switching->linear_blocks();
  if (quad == nullptr || !blocks) {
    std::vector<ActionVector> warm(static_cast<std::size_t>(T), instance.space.clip(instance.initial_actions.back()));
    return projected_gradient_opt(instance, model, stack(warm));
  }

  const NormalEquations eq = banded_system(instance, *quad, *blocks);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(eq.hessian);
  if (ldlt.info() != Eigen::Success) throw NumericalError("offline optimum: banded factorization failed", 0.0);
  Vector z = ldlt.solve(eq.rhs);
  const Vector lo = tile(instance.space.lower, T);
  const Vector hi = tile(instance.space.upper, T);
  const bool inside = (z.array() >= lo.array()).all() && (z.array() <= hi.array()).all();
  if (!inside) {
    if (z.size() > kDenseBoxLimit) return projected_gradient_opt(instance, model, z.cwiseMax(lo).cwiseMin(hi));
    const Matrix dense(eq.hessian);
    z = solve_box_qp(dense, -eq.rhs, lo, hi, z).x;
  }
  return eval_cost(instance, model, unstack(z, T, n));
}

}  // namespace soco::experts
