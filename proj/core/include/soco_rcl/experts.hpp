#pragma once

#include "soco_rcl/cost_model.hpp"
#include "soco_rcl/delay.hpp"

#include <optional>
#include <string>
#include <vector>

namespace soco::experts {

/// Expert actions plus the cost each step makes newly visible:
/// cost_t = sum_{tau in D_t} f(x_tau, y_tau) + d(x_t, window).
struct ExpertTrace {
  std::vector<ActionVector> actions;
  std::vector<double> revealed_cost;

  double total() const;
};

/// Weights of the regularized step
///   x_t = argmin f(x, y_t) + lambda1 d(x, window) + (lambda2 / 2) ||x - v_t||^2.
struct RobdParams {
  double lambda1 = 1.0;
  double lambda2 = 0.0;

  /// lambda1 = 2 / (1 + sqrt(1 + 4 (sum L)^2 / alpha_h)), lambda2 = 0.
  static RobdParams tuned(const CostModel& model);
  void validate() const;
};

enum class ExpertKind { hitmin, robd, irobd };

ExpertKind parse_expert(const std::string& name);
std::string to_string(ExpertKind kind);
/// ROBD without delay, iROBD otherwise.
ExpertKind default_expert(const DelaySchedule& schedule);

std::vector<double> revealed_costs(const ProblemInstance& instance, const CostModel& model,
                                   const DelaySchedule& schedule, const std::vector<ActionVector>& actions);

/// One regularized step from `window` against context `y`, clipped to the box.
ActionVector robd_step(const CostModel& model, const ActionSpace& space, std::span<const Vector> window,
                       const Context& y, const RobdParams& params);

/// Greedy hitting-cost minimizer over the box using the most recent revealed
/// context; holds the previous action while nothing is revealed.
ExpertTrace run_hitmin(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule);

/// Requires q = 0 unless `substitutes` supplies a stand-in context per step.
ExpertTrace run_robd(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                     const RobdParams& params, const std::vector<Context>* substitutes = nullptr);

/// ROBD against a zero-order-hold context estimate: y_t when known, else the
/// latest revealed context, else `initial_estimate`, else hold x_{t-1}.
ExpertTrace run_irobd(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                      const RobdParams& params, const std::optional<Context>& initial_estimate = std::nullopt);

ExpertTrace run_expert(ExpertKind kind, const ProblemInstance& instance, const CostModel& model,
                       const DelaySchedule& schedule, const RobdParams& params);

/// Clairvoyant offline optimum over the box.
///
/// Quadratic tracking with linear memory is solved from the banded normal
/// equations (active-set refinement when the box binds); anything else uses
/// projected Newton on a finite-difference Hessian, then projected gradient,
/// to stationarity 1e-8.
Trajectory solve_opt(const ProblemInstance& instance, const CostModel& model);

}  // namespace soco::experts
