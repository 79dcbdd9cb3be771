#include "soco_rcl/rcl.hpp"

namespace soco::rcl {

RobustLedger::RobustLedger(const ProblemInstance& instance, const CostModel& model, const RclConfig& config,
                           const std::vector<ActionVector>& expert_actions)
    : instance_(instance),
      model_(model),
      config_(config),
      expert_(expert_actions),
      own_(instance.initial_actions),
      exp_(instance.initial_actions),
      known_(static_cast<std::size_t>(instance.horizon() + 1), 0),
      pending_h_(static_cast<std::size_t>(instance.horizon() + 1), 0.0) {
  config_.validate();
  if (static_cast<int>(expert_actions.size()) != instance.horizon()) {
    throw DimensionError("expert trace length differs from horizon", static_cast<int>(expert_actions.size()));
  }
}

double RobustLedger::lhs_reservation_H() const {
  double sum = 0.0;
  for (int tau = 1; tau <= own_.steps(); ++tau) {
    if (!known_[static_cast<std::size_t>(tau)]) sum += pending_h_[static_cast<std::size_t>(tau)];
  }
  return sum;
}

StepConstraint RobustLedger::begin_step(int t, const std::vector<int>& revealed_now) {
  if (open_ != 0 || t != own_.steps() + 1) throw DimensionError("ledger steps must be opened in order", t);
  const double beta = model_.beta_h();
  const double alpha = model_.alpha();
  const double c = 0.5 * (1.0 + 1.0 / config_.lambda0) * alpha;
  const auto& lips = model_.switching->lipschitz();
  const int p = model_.memory();

  exp_.push(expert_[static_cast<std::size_t>(t - 1)]);
  exp_sw_ += model_.switching_cost(exp_.at(t), exp_.window(t));
  open_self_ = false;
  for (int tau : revealed_now) {
    if (tau < 1 || tau > t || known_[static_cast<std::size_t>(tau)]) {
      throw DimensionError("ledger received an invalid reveal index", tau);
    }
    known_[static_cast<std::size_t>(tau)] = 1;
    exp_hit_ += model_.hitting->value(exp_.at(tau), instance_.context(tau));
    if (tau == t) {
      open_self_ = true;
    } else {
      own_hit_ += model_.hitting->value(own_.at(tau), instance_.context(tau));
    }
  }

  double g_hist = 0.0;
  for (int j = 1; j <= p - 1 && t - j >= 1; ++j) {
    double tail = 0.0;
    for (int m = j + 1; m <= p; ++m) tail += lips[m - 1];
    g_hist += c * tail * (own_.at(t - j) - exp_.at(t - j)).squaredNorm();
  }
  const double rhs = (1.0 + config_.lambda) * (exp_hit_ + exp_sw_);

  StepConstraint sc;
  sc.t = t;
  sc.self_revealed = open_self_;
  sc.delta = model_.switching->apply(own_.window(t));
  sc.expert_action = exp_.at(t);
  if (open_self_) sc.context = instance_.context(t);
  sc.hitting = model_.hitting;
  sc.quad_coef = c * (alpha - 1.0) + (open_self_ ? 0.0 : 0.5 * beta * (1.0 + 1.0 / config_.lambda0));
  sc.constant = own_hit_ + own_sw_ + lhs_reservation_H() + g_hist - rhs;
  sc.rhs = rhs;
  open_ = t;
  return sc;
}

void RobustLedger::commit(const ActionVector& x) {
  if (open_ == 0) throw DimensionError("ledger commit without an open step", own_.steps() + 1);
  const int t = open_;
  own_sw_ += model_.switching_cost(x, own_.window(t));
  if (open_self_) {
    own_hit_ += model_.hitting->value(x, instance_.context(t));
  } else {
    pending_h_[static_cast<std::size_t>(t)] = reservation_H(x, exp_.at(t), model_.beta_h(), config_.lambda0);
  }
  own_.push(x);
  open_ = 0;
}

}  // namespace soco::rcl
