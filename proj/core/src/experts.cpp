#include "soco_rcl/experts.hpp"

#include "soco_rcl/box_solver.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numeric>

namespace soco::experts {

double ExpertTrace::total() const { return std::accumulate(revealed_cost.begin(), revealed_cost.end(), 0.0); }

RobdParams RobdParams::tuned(const CostModel& model) {
  const double l = model.alpha() - 1.0;
  return {2.0 / (1.0 + std::sqrt(1.0 + 4.0 * l * l / model.hitting->alpha_h())), 0.0};
}

void RobdParams::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !std::isfinite(lambda1) || !std::isfinite(lambda2)) {
    throw ConfigError("ROBD weights must be finite and nonnegative");
  }
}

ExpertKind parse_expert(const std::string& name) {
  if (name == "hitmin") return ExpertKind::hitmin;
  if (name == "robd") return ExpertKind::robd;
  if (name == "irobd") return ExpertKind::irobd;
  throw ConfigError("unknown expert '" + name + "' (expected hitmin, robd or irobd)");
}

std::string to_string(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::hitmin: return "hitmin";
    case ExpertKind::robd: return "robd";
    case ExpertKind::irobd: return "irobd";
  }
  return "unknown";
}

ExpertKind default_expert(const DelaySchedule& schedule) {
  return schedule.max_delay == 0 ? ExpertKind::robd : ExpertKind::irobd;
}

std::vector<double> revealed_costs(const ProblemInstance& instance, const CostModel& model,
                                   const DelaySchedule& schedule, const std::vector<ActionVector>& actions) {
  const Trajectory traj = eval_cost(instance, model, actions);
  std::vector<double> out(actions.size(), 0.0);
  for (int t = 1; t <= instance.horizon(); ++t) {
    double c = traj.per_step_switching[t - 1];
    for (int tau : schedule.revealed_at(t)) c += traj.per_step_hitting[tau - 1];
    out[t - 1] = c;
  }
  return out;
}

namespace {

Vector unconstrained_minimizer(const HittingCost& f, const Context& y, const Vector& start) {
  if (auto v = f.minimizer(y)) return *v;
  const Vector inf = Vector::Constant(start.size(), std::numeric_limits<double>::infinity());
  SmoothObjective obj{[&](const Vector& x) { return f.value(x, y); },
                      [&](const Vector& x) { return f.gradient(x, y); },
                      [&](const Vector& x) { return f.hessian(x, y); }};
  auto r = minimize_box_newton(obj, -inf, inf, start, 1e-10);
  if (!r.converged) throw NumericalError("hitting-cost minimizer did not converge", r.residual);
  return r.x;
}

ActionVector box_minimizer(const HittingCost& f, const ActionSpace& space, const Context& y, const Vector& start) {
  if (const auto* q = dynamic_cast<const QuadraticTracking*>(&f)) {
    const Matrix& w = q->weight();
    if (w.isDiagonal()) return space.clip(y);
    const Matrix p = 2.0 * q->scale() * w;
    return solve_box_qp(p, -(p * y), space.lower, space.upper, start).x;
  }
  SmoothObjective obj{[&](const Vector& x) { return f.value(x, y); },
                      [&](const Vector& x) { return f.gradient(x, y); },
                      [&](const Vector& x) { return f.hessian(x, y); }};
  auto r = minimize_box_newton(obj, space.lower, space.upper, start, 1e-10);
  if (!r.converged) throw NumericalError("hitting-cost minimizer did not converge", r.residual);
  return r.x;
}

int latest_revealed(const std::vector<char>& known, int t) {
  for (int tau = t; tau >= 1; --tau) {
    if (known[static_cast<std::size_t>(tau)]) return tau;
  }
  return 0;
}

}  // namespace

ActionVector robd_step(const CostModel& model, const ActionSpace& space, std::span<const Vector> window,
                       const Context& y, const RobdParams& params) {
  const Vector delta = model.switching->apply(window);
  const HittingCost& f = *model.hitting;
  const double l1 = params.lambda1;
  const double l2 = params.lambda2;
  const Vector v = unconstrained_minimizer(f, y, delta);
  if (const auto* q = dynamic_cast<const QuadraticTracking*>(&f)) {
    const Matrix p = 2.0 * q->scale() * q->weight();
    Matrix lhs = p;
    lhs.diagonal().array() += l1 + l2;
    const Vector rhs = p * y + l1 * delta + l2 * v;
    return space.clip(lhs.ldlt().solve(rhs));
  }
  const Vector inf = Vector::Constant(delta.size(), std::numeric_limits<double>::infinity());
  SmoothObjective obj{
      [&](const Vector& x) { return f.value(x, y) + 0.5 * l1 * (x - delta).squaredNorm() + 0.5 * l2 * (x - v).squaredNorm(); },
      [&](const Vector& x) { return Vector(f.gradient(x, y) + l1 * (x - delta) + l2 * (x - v)); },
      [&](const Vector& x) {
        Matrix h = f.hessian(x, y);
        h.diagonal().array() += l1 + l2;
        return h;
      }};
  auto r = minimize_box_newton(obj, -inf, inf, v, 1e-9);
  if (!r.converged) throw NumericalError("ROBD step did not reach stationarity", r.residual);
  return space.clip(r.x);
}

ExpertTrace run_hitmin(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule) {
  instance.validate();
  const int T = instance.horizon();
  std::vector<char> known(static_cast<std::size_t>(T + 1), 0);
  ActionHistory history(instance.initial_actions);
  ExpertTrace trace;
  for (int t = 1; t <= T; ++t) {
    for (int tau : schedule.revealed_at(t)) known[static_cast<std::size_t>(tau)] = 1;
    const ActionVector& prev = history.at(t - 1);
    const int src = latest_revealed(known, t);
    ActionVector x = src == 0 ? prev : box_minimizer(*model.hitting, instance.space, instance.context(src), prev);
    history.push(x);
    trace.actions.push_back(std::move(x));
  }
  trace.revealed_cost = revealed_costs(instance, model, schedule, trace.actions);
  return trace;
}

ExpertTrace run_robd(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                     const RobdParams& params, const std::vector<Context>* substitutes) {
  instance.validate();
  params.validate();
  if (schedule.max_delay > 0 && substitutes == nullptr) {
    throw ConfigError("ROBD needs the current context; supply substitute contexts when q > 0");
  }
  if (substitutes != nullptr && static_cast<int>(substitutes->size()) != instance.horizon()) {
    throw DimensionError("substitute contexts differ in length from horizon", static_cast<int>(substitutes->size()));
  }
  ActionHistory history(instance.initial_actions);
  ExpertTrace trace;
  for (int t = 1; t <= instance.horizon(); ++t) {
    const Context& y = substitutes != nullptr ? (*substitutes)[t - 1] : instance.context(t);
    ActionVector x = robd_step(model, instance.space, history.window(t), y, params);
    history.push(x);
    trace.actions.push_back(std::move(x));
  }
  trace.revealed_cost = revealed_costs(instance, model, schedule, trace.actions);
  return trace;
}

ExpertTrace run_irobd(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                      const RobdParams& params, const std::optional<Context>& initial_estimate) {
  instance.validate();
  params.validate();
  const int T = instance.horizon();
  std::vector<char> known(static_cast<std::size_t>(T + 1), 0);
  ActionHistory history(instance.initial_actions);
  ExpertTrace trace;
  for (int t = 1; t <= T; ++t) {
    for (int tau : schedule.revealed_at(t)) known[static_cast<std::size_t>(tau)] = 1;
    const int src = latest_revealed(known, t);
    ActionVector x;
    if (src > 0) {
      x = robd_step(model, instance.space, history.window(t), instance.context(src), params);
    } else if (initial_estimate) {
      x = robd_step(model, instance.space, history.window(t), *initial_estimate, params);
    } else {
      x = history.at(t - 1);
    }
    history.push(x);
    trace.actions.push_back(std::move(x));
  }
  trace.revealed_cost = revealed_costs(instance, model, schedule, trace.actions);
  return trace;
}

ExpertTrace run_expert(ExpertKind kind, const ProblemInstance& instance, const CostModel& model,
                       const DelaySchedule& schedule, const RobdParams& params) {
  switch (kind) {
    case ExpertKind::hitmin: return run_hitmin(instance, model, schedule);
    case ExpertKind::robd: return run_robd(instance, model, schedule, params);
    case ExpertKind::irobd: return run_irobd(instance, model, schedule, params);
  }
  throw ConfigError("unknown expert kind");
}

}  // namespace soco::experts
