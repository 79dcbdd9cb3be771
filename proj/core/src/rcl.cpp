#include "soco_rcl/io.hpp"
#include "soco_rcl/rcl.hpp"

#include <cmath>
#include <fstream>

namespace soco::rcl {

void UniformRandomAdvisor::reset(const EpisodeInfo& info) {
  rng_.seed(seed_);
  space_ = info.space;
}

ActionVector UniformRandomAdvisor::advise(int, const std::vector<std::pair<int, Context>>&) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ActionVector x(space_.dim());
  for (int i = 0; i < space_.dim(); ++i) x[i] = space_.lower[i] + unit(rng_) * (space_.upper[i] - space_.lower[i]);
  return x;
}

RclResult run_rcl(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                  const RclConfig& config, const experts::ExpertTrace& expert, Advisor& advisor) {
  instance.validate();
  config.validate();
  if (auto v = validate_delay(schedule, instance.horizon())) {
    throw ConfigError("invalid delay schedule at t=" + std::to_string(v->t) + ": " + v->reason);
  }
  const int T = instance.horizon();
  RobustLedger ledger(instance, model, config, expert.actions);
  advisor.reset(EpisodeInfo{T, instance.initial_actions, instance.space});

  RclResult out;
  std::vector<ActionVector> actions;
  for (int t = 1; t <= T; ++t) {
    const auto& now = schedule.revealed_at(t);
    std::vector<std::pair<int, Context>> reveals;
    for (int tau : now) reveals.emplace_back(tau, instance.context(tau));
    ActionVector advice = advisor.advise(t, reveals);
    if (advice.size() != instance.dim() || !advice.allFinite()) {
      throw DimensionError("advisor returned a malformed action", t);
    }
    advice = instance.space.clip(advice);
    const StepConstraint sc = ledger.begin_step(t, now);
    StepDecision d = project(advice, sc, instance.space);
    ledger.commit(d.action);
    actions.push_back(d.action);
    out.advice.push_back(std::move(advice));
    out.decisions.push_back(std::move(d));
  }
  out.trajectory = eval_cost(instance, model, actions);
  return out;
}

RclResult run_rcl(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                  const RclConfig& config, experts::ExpertKind expert, const experts::RobdParams& params,
                  Advisor& advisor) {
  const auto trace = experts::run_expert(expert, instance, model, schedule, params);
  return run_rcl(instance, model, schedule, config, trace, advisor);
}

Theorem1Bound theorem1_bound(const ProblemInstance& instance, const CostModel& model, const RclConfig& config,
                             const experts::ExpertTrace& expert, const std::vector<ActionVector>& advice) {
  const double expert_cost = eval_cost(instance, model, expert.actions).total;
  const double advice_cost = eval_cost(instance, model, advice).total;
  const double c = model.beta_h() + model.alpha() * model.alpha();
  const double k = k_constant(config.lambda, config.lambda0, model.beta_h(), model.alpha());
  Theorem1Bound b;
  for (std::size_t t = 0; t < advice.size(); ++t) {
    b.delta_lambda += std::max(0.0, (advice[t] - expert.actions[t]).squaredNorm() - k * expert.revealed_cost[t]);
  }
  b.bound_expert = (1.0 + config.lambda) * expert_cost;
  const double root = std::sqrt(advice_cost) + std::sqrt(0.5 * c * b.delta_lambda);
  b.bound_ml = root * root;
  return b;
}

void write_decision_log(const std::filesystem::path& path, const std::vector<StepDecision>& decisions) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "t,projected,slack,dual_mu,displacement\n";
  for (std::size_t t = 0; t < decisions.size(); ++t) {
    const auto& d = decisions[t];
    out << t + 1 << "," << (d.projected ? 1 : 0) << "," << format_double(d.slack) << ","
        << format_double(d.dual_mu) << "," << format_double(d.displacement) << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace soco::rcl
