#include "soco_rcl/box_solver.hpp"
#include "soco_rcl/rcl.hpp"

#include <cmath>

namespace soco::rcl {

namespace {

constexpr int kMaxBisections = 200;
constexpr double kMuCap = 1152921504606846976.0;  // 2^60

}  // namespace

Vector inner_solution(const StepConstraint& c, const ActionSpace& space, const Vector& advice, double mu) {
  const auto* quad = dynamic_cast<const QuadraticTracking*>(c.hitting.get());
  if (!c.self_revealed || quad != nullptr) {
    // Quadratic in x: P x = rhs with P = I + mu * hessian.
    Vector rhs = advice + mu * c.delta + 2.0 * mu * c.quad_coef * c.expert_action;
    const double diag = 1.0 + mu * (1.0 + 2.0 * c.quad_coef);
    if (!c.self_revealed) return space.clip(rhs / diag);
    const Matrix hq = 2.0 * quad->scale() * quad->weight();
    rhs += mu * (hq * c.context);
    if (quad->weight().isDiagonal()) {
      return space.clip((rhs.array() / (diag + mu * hq.diagonal().array())).matrix());
    }
    Matrix p = mu * hq;
    p.diagonal().array() += diag;
    return solve_box_qp(p, -rhs, space.lower, space.upper, advice).x;
  }
  SmoothObjective obj{
      [&](const Vector& x) { return 0.5 * (x - advice).squaredNorm() + mu * c.value(x); },
      [&](const Vector& x) { return Vector((x - advice) + mu * c.gradient(x)); },
      [&](const Vector& x) {
        Matrix h = mu * c.hessian(x);
        h.diagonal().array() += 1.0;
        return h;
      }};
  const auto r = minimize_box_newton(obj, space.lower, space.upper, advice, 1e-13);
  if (!r.converged) throw NumericalError("projection inner problem did not converge", r.residual);
  return r.x;
}

StepDecision project(const ActionVector& advice, const StepConstraint& constraint, const ActionSpace& space) {
  StepDecision d;
  d.expert_slack = constraint.slack(constraint.expert_action);
  const double s0 = constraint.slack(advice);
  if (s0 >= 0.0) {
    d.action = advice;
    d.slack = s0;
    return d;
  }
  if (d.expert_slack < -constraint.floor()) {
    throw NumericalError("expert action violates the robustness constraint at step " + std::to_string(constraint.t),
                         d.expert_slack);
  }

  double lo = 0.0;
  double hi = 1.0;
  Vector x_hi = inner_solution(constraint, space, advice, hi);
  double s_hi = constraint.slack(x_hi);
  while (s_hi < 0.0 && hi < kMuCap) {
    lo = hi;
    hi *= 2.0;
    x_hi = inner_solution(constraint, space, advice, hi);
    s_hi = constraint.slack(x_hi);
  }
  if (s_hi < 0.0) {
    // Only reachable when the expert point sits inside the drift floor.
    d.action = constraint.expert_action;
    d.projected = true;
    d.slack = d.expert_slack;
    d.dual_mu = hi;
    d.displacement = (d.action - advice).norm();
    return d;
  }
  for (int i = 0; i < kMaxBisections && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    Vector x_mid = inner_solution(constraint, space, advice, mid);
    const double s_mid = constraint.slack(x_mid);
    if (s_mid >= 0.0) {
      hi = mid;
      x_hi = std::move(x_mid);
      s_hi = s_mid;
    } else {
      lo = mid;
    }
  }
  d.action = std::move(x_hi);
  d.projected = true;
  d.slack = s_hi;
  d.dual_mu = hi;
  d.displacement = (d.action - advice).norm();
  return d;
}

}  // namespace soco::rcl
