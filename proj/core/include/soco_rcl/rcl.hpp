#pragma once

#include "soco_rcl/cost_model.hpp"
#include "soco_rcl/delay.hpp"
#include "soco_rcl/experts.hpp"

#include <filesystem>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace soco::rcl {

/// Robustness budget lambda and its split lambda0 in (0, lambda).
struct RclConfig {
  double lambda = 1.0;
  double lambda0 = 0.41421356237309503;

  /// lambda0 = sqrt(1 + lambda) - 1.
  static RclConfig with_lambda(double lambda);
  void validate() const;
};

/// (beta_h / 2)(1 + 1/lambda0) ||x - x_pi||^2.
double reservation_H(const Vector& x, const Vector& x_pi, double beta_h, double lambda0);

/// Future-switching reservation over windows x_{t-p..t} (oldest first, p + 1 entries).
double reservation_G(std::span<const Vector> x_window, std::span<const Vector> x_pi_window,
                     const std::vector<double>& lipschitz, double lambda0);

/// K = 2(lambda - lambda0) / ((beta_h + alpha^2)(1 + 1/lambda0)).
double k_constant(double lambda, double lambda0, double beta_h, double alpha);

/// theta x_pi + (1 - theta) advice with theta = [1 - sqrt(K cost_pi) / ||advice - x_pi||]^+.
ActionVector sufficient_projection(const ActionVector& advice, const ActionVector& x_pi, double expert_cost, double k);

/// Smallest lambda for which advice within `diameter` of the expert is never projected
/// when every expert step costs at least epsilon.
double corollary1_lambda(double diameter, double alpha, double beta_h, double epsilon);

/// The robustness constraint at step t as a function of the candidate x_t.
///
/// g(x) = constant + 1/2 ||x - delta||^2 + [self_revealed] f(x, y_t) + quad_coef ||x - x_pi||^2,
/// where the last term collects the candidate's own G reservation and, when
/// y_t is still hidden, its H reservation. Feasible iff g(x) <= 0.
struct StepConstraint {
  int t = 0;
  bool self_revealed = false;
  Vector delta;
  Vector expert_action;
  Context context;
  std::shared_ptr<const HittingCost> hitting;
  double quad_coef = 0.0;
  double constant = 0.0;
  double rhs = 0.0;

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  Matrix hessian(const Vector& x) const;
  double slack(const Vector& x) const { return -value(x); }
  /// Feasibility tolerance 1e-9 (1 + |RHS|).
  double floor() const;
};

/// Constraint at step t rebuilt from the full histories (pure; used for
/// differentiation and as the reference for the ledger).
StepConstraint build_step_constraint(const ProblemInstance& instance, const CostModel& model,
                                     const DelaySchedule& schedule, const RclConfig& config,
                                     const std::vector<ActionVector>& expert_actions,
                                     std::span<const ActionVector> own_prefix, int t);

/// Running sums of both sides of the constraint for one episode.
class RobustLedger {
 public:
  RobustLedger(const ProblemInstance& instance, const CostModel& model, const RclConfig& config,
               const std::vector<ActionVector>& expert_actions);

  /// Applies D_t and returns the constraint for the next action.
  StepConstraint begin_step(int t, const std::vector<int>& revealed_now);
  /// Records the chosen action for the step opened by begin_step.
  void commit(const ActionVector& x);

  int steps() const { return own_.steps(); }
  double lhs_revealed_hitting() const { return own_hit_; }
  double lhs_switching() const { return own_sw_; }
  double lhs_reservation_H() const;
  double rhs_revealed_hitting() const { return exp_hit_; }
  double rhs_switching() const { return exp_sw_; }

 private:
  const ProblemInstance& instance_;
  const CostModel& model_;
  RclConfig config_;
  const std::vector<ActionVector>& expert_;
  ActionHistory own_;
  ActionHistory exp_;
  std::vector<char> known_;
  std::vector<double> pending_h_;
  double own_hit_ = 0.0;
  double own_sw_ = 0.0;
  double exp_hit_ = 0.0;
  double exp_sw_ = 0.0;
  int open_ = 0;
  bool open_self_ = false;
};

struct StepDecision {
  ActionVector action;
  bool projected = false;
  double slack = 0.0;
  double dual_mu = 0.0;
  double expert_slack = 0.0;
  double displacement = 0.0;  ///< ||action - advice||
};

/// argmin over the box of 1/2 ||x - advice||^2 + mu g(x).
Vector inner_solution(const StepConstraint& c, const ActionSpace& space, const Vector& advice, double mu);

/// Euclidean projection of `advice` onto {g <= 0} intersected with the box,
/// by bisection on the multiplier.
StepDecision project(const ActionVector& advice, const StepConstraint& constraint, const ActionSpace& space);

/// What an advisor may see at the start of an episode: no contexts.
struct EpisodeInfo {
  int horizon = 0;
  std::vector<ActionVector> initial_actions;
  ActionSpace space;
};

/// Per-step advice source; receives only contexts revealed at each step.
class Advisor {
 public:
  virtual ~Advisor() = default;
  virtual void reset(const EpisodeInfo& info) = 0;
  virtual ActionVector advise(int t, const std::vector<std::pair<int, Context>>& newly_revealed) = 0;
};

/// Replays a precomputed advice sequence (e.g. OPT actions as an oracle).
class FixedAdvisor final : public Advisor {
 public:
  explicit FixedAdvisor(std::vector<ActionVector> actions) : actions_(std::move(actions)) {}
  void reset(const EpisodeInfo&) override {}
  ActionVector advise(int t, const std::vector<std::pair<int, Context>>&) override { return actions_.at(t - 1); }

 private:
  std::vector<ActionVector> actions_;
};

/// Uniform samples from the box.
class UniformRandomAdvisor final : public Advisor {
 public:
  explicit UniformRandomAdvisor(std::uint64_t seed) : seed_(seed) {}
  void reset(const EpisodeInfo& info) override;
  ActionVector advise(int t, const std::vector<std::pair<int, Context>>& newly_revealed) override;

 private:
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  ActionSpace space_;
};

struct RclResult {
  Trajectory trajectory;
  std::vector<StepDecision> decisions;
  std::vector<ActionVector> advice;
};

RclResult run_rcl(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                  const RclConfig& config, const experts::ExpertTrace& expert, Advisor& advisor);

RclResult run_rcl(const ProblemInstance& instance, const CostModel& model, const DelaySchedule& schedule,
                  const RclConfig& config, experts::ExpertKind expert, const experts::RobdParams& params,
                  Advisor& advisor);

struct Theorem1Bound {
  double bound_expert = 0.0;
  double bound_ml = 0.0;
  double delta_lambda = 0.0;
};

Theorem1Bound theorem1_bound(const ProblemInstance& instance, const CostModel& model, const RclConfig& config,
                             const experts::ExpertTrace& expert, const std::vector<ActionVector>& advice);

/// Decision log: t, projected, slack, dual_mu, displacement.
void write_decision_log(const std::filesystem::path& path, const std::vector<StepDecision>& decisions);

}  // namespace soco::rcl
