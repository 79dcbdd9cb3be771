#include "soco_rcl/rcl.hpp"

#include <cmath>
#include <numeric>

namespace soco::rcl {

RclConfig RclConfig::with_lambda(double lambda) { return {lambda, std::sqrt(1.0 + lambda) - 1.0}; }

void RclConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
  if (!(lambda0 > 0.0) || !(lambda0 < lambda)) throw ConfigError("lambda0 must lie in (0, lambda)");
}

double reservation_H(const Vector& x, const Vector& x_pi, double beta_h, double lambda0) {
  return 0.5 * beta_h * (1.0 + 1.0 / lambda0) * (x - x_pi).squaredNorm();
}

double reservation_G(std::span<const Vector> x_window, std::span<const Vector> x_pi_window,
                     const std::vector<double>& lipschitz, double lambda0) {
  const int p = static_cast<int>(lipschitz.size());
  if (static_cast<int>(x_window.size()) != p + 1 || x_pi_window.size() != x_window.size()) {
    throw DimensionError("reservation_G windows must hold p + 1 actions", static_cast<int>(x_window.size()));
  }
  const double alpha = 1.0 + std::accumulate(lipschitz.begin(), lipschitz.end(), 0.0);
  // e(i) = ||x_{t-i} - x_pi_{t-i}||^2; the newest entry is last.
  auto e = [&](int i) { return (x_window[p - i] - x_pi_window[p - i]).squaredNorm(); };
  double sum = 0.0;
  for (int k = 1; k <= p; ++k) {
    sum += lipschitz[k - 1] * e(0);
    for (int i = 1; i <= p - k; ++i) sum += lipschitz[k + i - 1] * e(i);
  }
  return 0.5 * (1.0 + 1.0 / lambda0) * alpha * sum;
}

double k_constant(double lambda, double lambda0, double beta_h, double alpha) {
  return 2.0 * (lambda - lambda0) / ((beta_h + alpha * alpha) * (1.0 + 1.0 / lambda0));
}

ActionVector sufficient_projection(const ActionVector& advice, const ActionVector& x_pi, double expert_cost, double k) {
  const double dist = (advice - x_pi).norm();
  if (dist == 0.0) return advice;
  const double theta = std::max(0.0, 1.0 - std::sqrt(std::max(0.0, k * expert_cost)) / dist);
  if (theta == 0.0) return advice;
  return theta * x_pi + (1.0 - theta) * advice;
}

double corollary1_lambda(double diameter, double alpha, double beta_h, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("corollary1_lambda needs epsilon > 0");
  const double a = diameter * diameter * (alpha * alpha + beta_h) / (2.0 * epsilon);
  return a + std::sqrt(4.0 * a);
}

double StepConstraint::value(const Vector& x) const {
  double v = constant + 0.5 * (x - delta).squaredNorm() + quad_coef * (x - expert_action).squaredNorm();
  if (self_revealed) v += hitting->value(x, context);
  return v;
}

Vector StepConstraint::gradient(const Vector& x) const {
  Vector g = (x - delta) + 2.0 * quad_coef * (x - expert_action);
  if (self_revealed) g += hitting->gradient(x, context);
  return g;
}

Matrix StepConstraint::hessian(const Vector& x) const {
  Matrix h = self_revealed ? hitting->hessian(x, context) : Matrix::Zero(x.size(), x.size());
  h.diagonal().array() += 1.0 + 2.0 * quad_coef;
  return h;
}

double StepConstraint::floor() const { return 1e-9 * (1.0 + std::abs(rhs)); }

StepConstraint build_step_constraint(const ProblemInstance& instance, const CostModel& model,
                                     const DelaySchedule& schedule, const RclConfig& config,
                                     const std::vector<ActionVector>& expert_actions,
                                     std::span<const ActionVector> own_prefix, int t) {
  if (static_cast<int>(own_prefix.size()) < t - 1) throw DimensionError("own history shorter than t - 1", t);
  const int p = model.memory();
  const double beta = model.beta_h();
  const double alpha = model.alpha();
  const double c = 0.5 * (1.0 + 1.0 / config.lambda0) * alpha;
  const auto& lips = model.switching->lipschitz();

  ActionHistory own(instance.initial_actions);
  ActionHistory exp(instance.initial_actions);
  for (int s = 1; s < t; ++s) own.push(own_prefix[static_cast<std::size_t>(s - 1)]);
  for (int s = 1; s <= t; ++s) exp.push(expert_actions[static_cast<std::size_t>(s - 1)]);

  const RevealedSets sets = revealed_sets(schedule, t);
  double lhs = 0.0;
  double rhs = 0.0;
  bool self = false;
  for (int tau : sets.revealed) {
    rhs += model.hitting->value(exp.at(tau), instance.context(tau));
    if (tau == t) {
      self = true;
    } else {
      lhs += model.hitting->value(own.at(tau), instance.context(tau));
    }
  }
  for (int tau : sets.unrevealed) {
    if (tau < t) lhs += reservation_H(own.at(tau), exp.at(tau), beta, config.lambda0);
  }
  for (int s = 1; s <= t; ++s) {
    rhs += model.switching_cost(exp.at(s), exp.window(s));
    if (s < t) lhs += model.switching_cost(own.at(s), own.window(s));
  }
  for (int j = 1; j <= p - 1 && t - j >= 1; ++j) {
    double tail = 0.0;
    for (int m = j + 1; m <= p; ++m) tail += lips[m - 1];
    lhs += c * tail * (own.at(t - j) - exp.at(t - j)).squaredNorm();
  }
  rhs *= 1.0 + config.lambda;

  StepConstraint sc;
  sc.t = t;
  sc.self_revealed = self;
  sc.delta = model.switching->apply(own.window(t));
  sc.expert_action = exp.at(t);
  if (self) sc.context = instance.context(t);
  sc.hitting = model.hitting;
  sc.quad_coef = c * (alpha - 1.0) + (self ? 0.0 : 0.5 * beta * (1.0 + 1.0 / config.lambda0));
  sc.constant = lhs - rhs;
  sc.rhs = rhs;
  return sc;
}

}  // namespace soco::rcl
