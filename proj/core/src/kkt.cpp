#include "soco_rcl/kkt.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace soco::ml {

KktBlocks kkt_blocks(const rcl::StepConstraint& constraint, const Vector& x, double mu, const ActionSpace* space) {
  const auto n = x.size();
  KktBlocks b;
  b.mu = mu;
  b.delta11 = mu * constraint.hessian(x);
  b.delta11.diagonal().array() += 1.0;
  b.delta12 = constraint.gradient(x);
  b.delta21 = mu * b.delta12.transpose();
  b.delta22 = constraint.value(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool pinned = space != nullptr && mu > 0.0 && (x[i] == space->lower[i] || x[i] == space->upper[i]);
    if (!pinned) b.free.push_back(static_cast<int>(i));
  }
  b.schur = b.delta22;
  if (!b.free.empty()) {
    const auto nf = static_cast<Eigen::Index>(b.free.size());
    Matrix d11(nf, nf);
    Vector d12(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      d12[a] = b.delta12[b.free[a]];
      for (Eigen::Index c = 0; c < nf; ++c) d11(a, c) = b.delta11(b.free[a], b.free[c]);
    }
    b.schur -= mu * d12.dot(d11.ldlt().solve(d12));
  }
  return b;
}

ImplicitGrads implicit_grads(const KktBlocks& b) {
  const auto n = b.delta12.size();
  ImplicitGrads g{Matrix::Zero(n, n), Vector::Zero(n)};
  if (b.mu == 0.0) {
    g.d_x_d_advice.setIdentity();
    return g;
  }
  const auto nf = static_cast<Eigen::Index>(b.free.size());
  if (nf == 0) return g;
  Matrix d11(nf, nf);
  Vector d12(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    d12[a] = b.delta12[b.free[a]];
    for (Eigen::Index c = 0; c < nf; ++c) d11(a, c) = b.delta11(b.free[a], b.free[c]);
  }
  Eigen::LLT<Matrix> llt(d11);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("KKT block delta11 is not positive definite", d11.diagonal().minCoeff());
  }
  const Matrix inv = llt.solve(Matrix::Identity(nf, nf));
  const Vector v = inv * d12;
  const double sc_inv = std::abs(b.schur) < 1e-12 ? 0.0 : 1.0 / b.schur;
  const Matrix a = inv + (b.mu * sc_inv) * v * v.transpose();
  const Vector c = (b.mu * sc_inv) * v;
  for (Eigen::Index r = 0; r < nf; ++r) {
    g.d_x_d_prevcost[b.free[r]] = c[r];
    for (Eigen::Index s = 0; s < nf; ++s) g.d_x_d_advice(b.free[r], b.free[s]) = a(r, s);
  }
  return g;
}

HistorySensitivity history_sensitivity(const ProblemInstance& instance, const CostModel& model,
                                       const DelaySchedule& schedule, const rcl::RclConfig& config,
                                       const std::vector<ActionVector>& expert_actions,
                                       std::span<const ActionVector> own_actions, int t) {
  if (static_cast<int>(own_actions.size()) < t) throw DimensionError("history_sensitivity needs x_1..x_t", t);
  const int p = model.memory();
  const double beta = model.beta_h();
  const double c = 0.5 * (1.0 + 1.0 / config.lambda0) * model.alpha();
  const auto& lips = model.switching->lipschitz();

  ActionHistory own(instance.initial_actions);
  for (int s = 1; s <= t; ++s) own.push(own_actions[static_cast<std::size_t>(s - 1)]);
  const auto reveal = schedule.reveal_times();

  HistorySensitivity out;
  out.grad_g.assign(static_cast<std::size_t>(std::max(t - 1, 0)), Vector::Zero(instance.dim()));
  for (int tau = 1; tau < t; ++tau) {
    Vector& g = out.grad_g[tau - 1];
    const ActionVector& x = own.at(tau);
    const ActionVector& xp = expert_actions[static_cast<std::size_t>(tau - 1)];
    const int when = reveal[static_cast<std::size_t>(tau - 1)];
    if (when != 0 && when <= t) {
      g += model.hitting->gradient(x, instance.context(tau));
    } else {
      g += beta * (1.0 + 1.0 / config.lambda0) * (x - xp);
    }
    const int j = t - tau;
    if (j <= p - 1) {
      double tail = 0.0;
      for (int m = j + 1; m <= p; ++m) tail += lips[m - 1];
      g += 2.0 * c * tail * (x - xp);
    }
  }
  // Switching terms d_s for s = 1..t touch x_s and x_{s-i}.
  for (int s = 1; s <= t; ++s) {
    const auto window = own.window(s);
    const Vector r = own.at(s) - model.switching->apply(window);
    if (s < t) out.grad_g[s - 1] += r;
    for (int i = 1; i <= p && s - i >= 1; ++i) {
      out.grad_g[s - i - 1] -= model.switching->jacobian(window, i).transpose() * r;
    }
  }
  const auto window = own.window(t);
  for (int i = 1; i <= p; ++i) {
    out.delta_jacobian.push_back(t - i >= 1 ? model.switching->jacobian(window, i) : Matrix());
  }
  return out;
}

}  // namespace soco::ml
