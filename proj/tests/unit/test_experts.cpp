#include "oracles.hpp"

#include "soco_rcl/bench.hpp"
#include "soco_rcl/experts.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace soco;
using namespace soco::experts;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

ProblemInstance scalar_instance(std::vector<double> ys, double x0, double lo = -10, double hi = 10) {
  ProblemInstance inst;
  for (double y : ys) inst.contexts.push_back(v1(y));
  inst.initial_actions = {v1(x0)};
  inst.space = ActionSpace::box(1, lo, hi);
  return inst;
}

CostModel squared_identity(double scale = 1.0) {
  return {QuadraticTracking::isotropic(1, scale), std::make_shared<const IdentityMemory>(1)};
}

double projected_residual(const ProblemInstance& inst, const CostModel& model, const std::vector<ActionVector>& xs) {
  const auto g = cost_gradient(inst, model, xs);
  double r = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    r += (xs[t] - inst.space.clip(xs[t] - g[t])).squaredNorm();
  }
  return std::sqrt(r);
}

}  // namespace

TEST(HitMin, TracksRevealedContextInsideBox) {
  const auto inst = scalar_instance({0.3, -0.2, 0.7}, 0);
  const auto tr = run_hitmin(inst, squared_identity(), DelaySchedule::no_delay(3));
  for (int t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(tr.actions[static_cast<std::size_t>(t)][0], inst.contexts[static_cast<std::size_t>(t)][0]);
}

TEST(HitMin, ClipsToBox) {
  const auto tr = run_hitmin(scalar_instance({5}, 0, 0, 1), squared_identity(), DelaySchedule::no_delay(1));
  EXPECT_EQ(tr.actions[0][0], 1.0);
}

TEST(HitMin, HoldsWhileNothingIsRevealed) {
  const int T = 4;
  const auto inst = scalar_instance({0.5, 0.6, 0.7, 0.8}, 0.25);
  const auto tr = run_hitmin(inst, squared_identity(), DelaySchedule::identical(T, T));
  for (int t = 0; t < T - 1; ++t) EXPECT_EQ(tr.actions[static_cast<std::size_t>(t)][0], 0.25);
}

TEST(Robd, ScalarStepMinimizesRegularizedObjective) {
  // argmin (x - 1)^2 + 1/2 x^2 with the 1/2-scaled switching cost.
  const auto tr = run_robd(scalar_instance({1}, 0), squared_identity(), DelaySchedule::no_delay(1), RobdParams{1.0, 0.0});
  EXPECT_NEAR(tr.actions[0][0], 2.0 / 3.0, 1e-12);
}

TEST(Robd, ZeroWeightsReduceToHitMin) {
  const auto inst = scalar_instance({0.4, 3.0, -0.1}, 0, -1, 1);
  const auto a = run_robd(inst, squared_identity(), DelaySchedule::no_delay(3), RobdParams{0.0, 0.0});
  const auto b = run_hitmin(inst, squared_identity(), DelaySchedule::no_delay(3));
  for (int t = 0; t < 3; ++t) EXPECT_NEAR(a.actions[static_cast<std::size_t>(t)][0], b.actions[static_cast<std::size_t>(t)][0], 1e-12);
}

TEST(Robd, LargeSwitchingWeightFollowsMemory) {
  ProblemInstance inst = scalar_instance({0.9, -0.4}, 0.5);
  CostModel model{QuadraticTracking::isotropic(1, 1.0), LinearMemory::single(Matrix::Constant(1, 1, 0.8))};
  const auto tr = run_robd(inst, model, DelaySchedule::no_delay(2), RobdParams{1e6, 0.0});
  EXPECT_NEAR(tr.actions[0][0], 0.4, 1e-3);
  EXPECT_NEAR(tr.actions[1][0], 0.8 * tr.actions[0][0], 1e-3);
}

TEST(Robd, RequiresSubstitutesUnderDelay) {
  const auto inst = scalar_instance({0.1, 0.2, 0.3}, 0);
  EXPECT_THROW(run_robd(inst, squared_identity(), DelaySchedule::identical(3, 1), RobdParams{}), ConfigError);
  std::vector<Context> subs{v1(0.1), v1(0.2), v1(0.3)};
  EXPECT_NO_THROW(run_robd(inst, squared_identity(), DelaySchedule::identical(3, 1), RobdParams{}, &subs));
}

TEST(Robd, TunedWeightFormula) {
  CostModel model{QuadraticTracking::isotropic(1, 2.0), LinearMemory::single(Matrix::Constant(1, 1, 3.0))};
  const auto p = RobdParams::tuned(model);
  EXPECT_NEAR(p.lambda1, 2.0 / (1.0 + std::sqrt(1.0 + 4.0 * 9.0 / 4.0)), 1e-15);
  EXPECT_EQ(p.lambda2, 0.0);
  EXPECT_THROW((RobdParams{-1.0, 0.0}).validate(), ConfigError);
}

TEST(Irobd, NoDelayMatchesRobdExactly) {
  const auto cases = bench::gen_stress_suite(3, 12, 10);
  for (const auto& sc : cases) {
    const auto params = RobdParams::tuned(sc.model);
    const auto sched = DelaySchedule::no_delay(sc.instance.horizon());
    const auto a = run_irobd(sc.instance, sc.model, sched, params);
    const auto b = run_robd(sc.instance, sc.model, sched, params);
    ASSERT_EQ(a.actions.size(), b.actions.size());
    for (std::size_t t = 0; t < a.actions.size(); ++t) EXPECT_EQ(a.actions[t], b.actions[t]);
  }
}

TEST(Irobd, ConstantContextsFollowRobdStepsAfterFirstReveal) {
  const double c = 0.6;
  const auto inst = scalar_instance(std::vector<double>(6, c), -0.3, -1, 1);
  const auto model = squared_identity();
  const RobdParams params{0.7, 0.0};
  const auto tr = run_irobd(inst, model, DelaySchedule::identical(6, 1), params);
  ActionHistory own(inst.initial_actions);
  own.push(tr.actions[0]);
  for (int t = 2; t <= 6; ++t) {
    const auto x = robd_step(model, inst.space, own.window(t), v1(c), params);
    EXPECT_NEAR(tr.actions[static_cast<std::size_t>(t - 1)][0], x[0], 1e-15) << "t=" << t;
    own.push(tr.actions[static_cast<std::size_t>(t - 1)]);
  }
}

TEST(Irobd, FullDelayUsesInitialEstimate) {
  // Nothing is revealed at t = 1, so x_1 = argmin (x - e)^2 + 1/2 (x - x0)^2 = (2e + x0) / 3.
  const double e = 0.9, x0 = 0.3;
  const auto inst = scalar_instance({0.1, 0.2}, x0, -1, 1);
  const auto tr = run_irobd(inst, squared_identity(), DelaySchedule::identical(2, 2), RobdParams{1.0, 0.0}, v1(e));
  EXPECT_NEAR(tr.actions[0][0], (2 * e + x0) / 3, 1e-12);
  const auto again = run_irobd(inst, squared_identity(), DelaySchedule::identical(2, 2), RobdParams{1.0, 0.0}, v1(e));
  EXPECT_EQ(tr.actions, again.actions);
  const auto hold = run_irobd(inst, squared_identity(), DelaySchedule::identical(2, 2), RobdParams{1.0, 0.0});
  EXPECT_EQ(hold.actions[0][0], x0);
}

TEST(Experts, CausalUnderDelay) {
  auto cases = bench::gen_stress_suite(21, 18, 12);
  for (auto& sc : cases) {
    const auto params = RobdParams::tuned(sc.model);
    for (auto kind : {ExpertKind::hitmin, ExpertKind::irobd}) {
      const auto base = run_expert(kind, sc.instance, sc.model, sc.schedule, params);
      const int k = 6;
      // Perturb every context not yet revealed by step k.
      const auto times = sc.schedule.reveal_times();
      auto changed = sc.instance;
      for (int tau = 1; tau <= changed.horizon(); ++tau) {
        if (times[static_cast<std::size_t>(tau - 1)] > k) changed.contexts[static_cast<std::size_t>(tau - 1)].array() += 0.37;
      }
      const auto moved = run_expert(kind, changed, sc.model, sc.schedule, params);
      for (int t = 0; t < k; ++t) EXPECT_EQ(base.actions[static_cast<std::size_t>(t)], moved.actions[static_cast<std::size_t>(t)]);
    }
  }
}

TEST(Experts, RevealedCostsSumToTotal) {
  for (const auto& sc : bench::gen_stress_suite(8, 18, 10)) {
    const auto tr = run_expert(default_expert(sc.schedule), sc.instance, sc.model, sc.schedule, RobdParams::tuned(sc.model));
    const double total = eval_cost(sc.instance, sc.model, tr.actions).total;
    EXPECT_NEAR(tr.total(), total, 1e-10 * (1 + total));
    for (double c : tr.revealed_cost) EXPECT_GE(c, 0.0);
  }
}

TEST(Experts, ParseNames) {
  EXPECT_EQ(parse_expert("robd"), ExpertKind::robd);
  EXPECT_EQ(to_string(ExpertKind::irobd), "irobd");
  EXPECT_THROW(parse_expert("greedy"), ConfigError);
  EXPECT_EQ(default_expert(DelaySchedule::no_delay(3)), ExpertKind::robd);
  EXPECT_EQ(default_expert(DelaySchedule::identical(3, 1)), ExpertKind::irobd);
}

TEST(SolveOpt, ScalarBatteryStep) {
  const double b = 10;
  const auto inst = scalar_instance({11}, 0, -100, 100);
  const auto tr = solve_opt(inst, squared_identity(1.0 / (2 * b)));
  EXPECT_NEAR(tr.actions[0][0], 1.0, 1e-10);
}

TEST(SolveOpt, StationaryTarget) {
  const auto inst = scalar_instance({0.4, 0.4, 0.4, 0.4}, 0.4, 0, 1);
  const auto tr = solve_opt(inst, squared_identity());
  for (const auto& x : tr.actions) EXPECT_NEAR(x[0], 0.4, 1e-12);
  EXPECT_NEAR(tr.total, 0.0, 1e-20);
}

TEST(SolveOpt, MatchesGridOnTwoStepInstances) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto inst = scalar_instance({u(rng), u(rng)}, u(rng), -1, 1);
    CostModel model{QuadraticTracking::isotropic(1, 0.2 + std::abs(u(rng))), LinearMemory::single(Matrix::Constant(1, 1, u(rng)))};
    const double grid = oracle::grid_opt_t2(inst, model, 1e-3);
    const double opt = solve_opt(inst, model).total;
    EXPECT_LE(opt, grid + 1e-12);
    EXPECT_NEAR(opt, grid, 1e-4);
  }
}

TEST(SolveOpt, StationaryOnBandedAndGenericPaths) {
  for (const auto& sc : bench::gen_stress_suite(5, 36, 24)) {
    const auto tr = solve_opt(sc.instance, sc.model);
    const double tol = sc.model.switching->kind() == "drone" ? 1e-6 : 1e-7;
    EXPECT_LT(projected_residual(sc.instance, sc.model, tr.actions), tol) << sc.model.switching->kind();
  }
}

TEST(SolveOpt, DominatesExperts) {
  for (const auto& sc : bench::gen_stress_suite(13, 36, 24)) {
    const double opt = solve_opt(sc.instance, sc.model).total;
    const auto params = RobdParams::tuned(sc.model);
    for (auto kind : {ExpertKind::hitmin, ExpertKind::irobd}) {
      const auto tr = run_expert(kind, sc.instance, sc.model, sc.schedule, params);
      EXPECT_LE(opt, eval_cost(sc.instance, sc.model, tr.actions).total * (1 + 1e-12) + 1e-12);
    }
  }
}
