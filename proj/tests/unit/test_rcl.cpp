#include "oracles.hpp"

#include "soco_rcl/bench.hpp"
#include "soco_rcl/experts.hpp"
#include "soco_rcl/rcl.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace soco;
using namespace soco::rcl;

namespace {

Vector v1(double a) { return Vector::Constant(1, a); }

std::vector<Vector> random_window(std::mt19937_64& rng, int len, int n) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Vector> w;
  for (int i = 0; i < len; ++i) {
    Vector x(n);
    for (int j = 0; j < n; ++j) x[j] = u(rng);
    w.push_back(x);
  }
  return w;
}

}  // namespace

TEST(Reservation, HExamples) {
  EXPECT_EQ(reservation_H(v1(0.3), v1(0.3), 2.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(reservation_H(v1(2), v1(0), 2.0, 1.0), 8.0);
  EXPECT_NEAR(reservation_H(v1(1), v1(0), 1.0, std::sqrt(2.0) - 1.0), 0.5 * (2.0 + std::sqrt(2.0)), 1e-14);
}

TEST(Reservation, GExamples) {
  std::vector<Vector> x{v1(0.0), v1(1.0)}, xp{v1(0.0), v1(0.0)};
  EXPECT_EQ(reservation_G(x, x, {1.0}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(reservation_G(x, xp, {1.0}, 1.0), 2.0);
  // With L2 = 0 only the newest distance survives; alpha stays 1 + L1.
  std::vector<Vector> x3{v1(0.7), v1(0.0), v1(1.0)}, xp3{v1(-0.2), v1(0.0), v1(0.0)};
  EXPECT_DOUBLE_EQ(reservation_G(x3, xp3, {1.0, 0.0}, 1.0), 2.0);
  EXPECT_THROW(reservation_G(x, xp, {1.0, 0.5}, 1.0), DimensionError);
}

TEST(Reservation, GMatchesDirectSum) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 2);
  for (int p = 1; p <= 3; ++p) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> L;
      for (int i = 0; i < p; ++i) L.push_back(u(rng));
      const auto x = random_window(rng, p + 1, 2);
      const auto xp = random_window(rng, p + 1, 2);
      const double l0 = 0.1 + u(rng);
      const double want = oracle::g_direct(x, xp, L, l0);
      EXPECT_NEAR(reservation_G(x, xp, L, l0), want, 1e-12 * (1 + want));
    }
  }
}

TEST(Reservation, GTelescopes) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 2);
  for (int p = 1; p <= 3; ++p) {
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> L;
      double alpha = 1.0;
      for (int i = 0; i < p; ++i) {
        L.push_back(u(rng));
        alpha += L.back();
      }
      const double l0 = 0.05 + u(rng);
      // x_{t-p-1}..x_{t-1} and the expert counterparts.
      const auto x = random_window(rng, p + 1, 3);
      const auto xp = random_window(rng, p + 1, 3);
      const double before = reservation_G(x, xp, L, l0);
      std::vector<Vector> xa(x.begin() + 1, x.end()), xpa(xp.begin() + 1, xp.end());
      const Vector candidate = random_window(rng, 1, 3).front();
      xa.push_back(candidate);
      xpa.push_back(candidate);
      const double after = reservation_G(xa, xpa, L, l0);
      double rhs = 0.0;
      for (int i = 1; i <= p; ++i) rhs += L[static_cast<std::size_t>(i - 1)] * (x[static_cast<std::size_t>(p + 1 - i)] - xp[static_cast<std::size_t>(p + 1 - i)]).squaredNorm();
      rhs *= alpha * (1 + 1 / l0) / 2;
      EXPECT_NEAR(before - after, rhs, 1e-10 * (1 + std::abs(rhs)));
    }
  }
}

TEST(Reservation, KConstant) {
  const double l0 = std::sqrt(2.0) - 1.0;
  EXPECT_NEAR(k_constant(1.0, l0, 1.0, 1.0), l0 * l0, 1e-14);
  EXPECT_EQ(k_constant(0.7, 0.7, 1.0, 1.0), 0.0);
}

TEST(Reservation, SufficientProjection) {
  EXPECT_EQ(sufficient_projection(v1(0.5), v1(0.0), 1.0, 1.0), v1(0.5));
  EXPECT_NEAR(sufficient_projection(v1(2.0), v1(0.0), 1.0, 1.0)[0], 1.0, 1e-15);
  EXPECT_EQ(sufficient_projection(v1(2.0), v1(0.3), 0.0, 1.0), v1(0.3));
}

TEST(Reservation, LambdaForTargetRatio) {
  // |X|^2 (alpha^2 + beta) = 2 with epsilon = 1.
  EXPECT_NEAR(corollary1_lambda(1.0, 1.0, 1.0, 1.0), 3.0, 1e-14);
  EXPECT_LT(corollary1_lambda(1.0, 1.0, 1.0, 1e9), 1e-3);
  const double ratio = corollary1_lambda(1.0, 2.0, 1.0, 1e-6) / corollary1_lambda(1.0, 2.0, 1.0, 2e-6);
  EXPECT_NEAR(ratio, 2.0, 1e-2);
  EXPECT_THROW(corollary1_lambda(1.0, 1.0, 1.0, 0.0), ConfigError);
}

TEST(RclConfig, OptimalSplitAndValidation) {
  const auto c = RclConfig::with_lambda(3.0);
  EXPECT_DOUBLE_EQ(c.lambda0, 1.0);
  EXPECT_THROW((RclConfig{1.0, 1.0}).validate(), ConfigError);
  EXPECT_THROW((RclConfig{-1.0, 0.5}).validate(), ConfigError);
}

TEST(Constraint, ScalarHandExpansion) {
  // p = 1, q = 0, f = (x - y)^2, T = 1, delta = x0, L1 = 1, lambda = 1.
  ProblemInstance inst;
  inst.contexts = {v1(0.8)};
  inst.initial_actions = {v1(0.1)};
  inst.space = ActionSpace::box(1, -2, 2);
  CostModel model{QuadraticTracking::isotropic(1, 1.0), std::make_shared<const IdentityMemory>(1)};
  const auto cfg = RclConfig::with_lambda(1.0);
  const std::vector<ActionVector> expert{v1(0.5)};
  const auto c = build_step_constraint(inst, model, DelaySchedule::no_delay(1), cfg, expert, {}, 1);
  for (double x : {-1.0, 0.0, 0.3, 0.5, 1.7}) {
    const double own = (x - 0.8) * (x - 0.8) + 0.5 * (x - 0.1) * (x - 0.1) +
                       (1 + 1 / cfg.lambda0) * 2.0 / 2.0 * 1.0 * (x - 0.5) * (x - 0.5);
    const double ref = 2.0 * ((0.5 - 0.8) * (0.5 - 0.8) + 0.5 * 0.4 * 0.4);
    EXPECT_NEAR(c.value(v1(x)), own - ref, 1e-12);
  }
  EXPECT_GE(c.slack(expert[0]), 0.0);
}

TEST(Constraint, MatchesOracleOnStressSuite) {
  std::mt19937_64 rng(31);
  for (const auto& sc : bench::gen_stress_suite(41, 36, 8)) {
    const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule,
                                            experts::RobdParams::tuned(sc.model));
    const auto cfg = RclConfig::with_lambda(0.6);
    std::vector<ActionVector> own;
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 1; t <= sc.instance.horizon(); ++t) {
      Vector x = sc.instance.space.lower + (sc.instance.space.upper - sc.instance.space.lower).cwiseProduct(
                                               Vector::NullaryExpr(sc.instance.dim(), [&] { return u(rng); }));
      const auto c = build_step_constraint(sc.instance, sc.model, sc.schedule, cfg, expert.actions, own, t);
      own.push_back(x);
      const auto sides = oracle::constraint_sides(sc.instance, sc.model, sc.schedule, cfg, expert.actions, own, t);
      EXPECT_NEAR(c.value(x), -sides.slack(), 1e-9 * (1 + std::abs(sides.rhs)));
    }
  }
}

TEST(Ledger, IncrementalMatchesRebuild) {
  std::mt19937_64 rng(77);
  for (const auto& sc : bench::gen_stress_suite(42, 36, 10)) {
    const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule,
                                            experts::RobdParams::tuned(sc.model));
    const auto cfg = RclConfig::with_lambda(1.0);
    RobustLedger ledger(sc.instance, sc.model, cfg, expert.actions);
    std::vector<ActionVector> own;
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 1; t <= sc.instance.horizon(); ++t) {
      const auto live = ledger.begin_step(t, sc.schedule.revealed_at(t));
      const auto ref = build_step_constraint(sc.instance, sc.model, sc.schedule, cfg, expert.actions, own, t);
      Vector x = sc.instance.space.lower + (sc.instance.space.upper - sc.instance.space.lower).cwiseProduct(
                                               Vector::NullaryExpr(sc.instance.dim(), [&] { return u(rng); }));
      EXPECT_NEAR(live.value(x), ref.value(x), 1e-9 * (1 + std::abs(ref.rhs)));
      EXPECT_EQ(live.self_revealed, ref.self_revealed);
      ledger.commit(x);
      own.push_back(x);
    }
    EXPECT_EQ(ledger.steps(), sc.instance.horizon());
  }
}

TEST(Projection, FeasibleAdviceIsVerbatim) {
  ProblemInstance inst;
  inst.contexts = {v1(0.8)};
  inst.initial_actions = {v1(0.1)};
  inst.space = ActionSpace::box(1, -2, 2);
  CostModel model{QuadraticTracking::isotropic(1, 1.0), std::make_shared<const IdentityMemory>(1)};
  const std::vector<ActionVector> expert{v1(0.5)};
  const auto c = build_step_constraint(inst, model, DelaySchedule::no_delay(1), RclConfig::with_lambda(1.0), expert, {}, 1);
  const auto d = project(v1(0.55), c, inst.space);
  EXPECT_FALSE(d.projected);
  EXPECT_EQ(d.action, v1(0.55));
  const auto e = project(expert[0], c, inst.space);
  EXPECT_EQ(e.action, expert[0]);
  EXPECT_EQ(e.dual_mu, 0.0);
}

TEST(Projection, InfeasibleAdviceLandsOnBoundary) {
  ProblemInstance inst;
  inst.contexts = {v1(0.8)};
  inst.initial_actions = {v1(0.1)};
  inst.space = ActionSpace::box(1, -2, 2);
  CostModel model{QuadraticTracking::isotropic(1, 1.0), std::make_shared<const IdentityMemory>(1)};
  const std::vector<ActionVector> expert{v1(0.5)};
  const auto c = build_step_constraint(inst, model, DelaySchedule::no_delay(1), RclConfig::with_lambda(0.1), expert, {}, 1);
  const auto d = project(v1(-1.5), c, inst.space);
  EXPECT_TRUE(d.projected);
  EXPECT_GT(d.dual_mu, 0.0);
  EXPECT_NEAR(c.value(d.action), 0.0, 1e-8);
  EXPECT_NEAR(d.displacement, std::abs(d.action[0] + 1.5), 1e-15);
  // The projection is the closest feasible point: scan the segment.
  for (double x = -1.5; x <= 0.5; x += 1e-4) {
    if (c.value(v1(x)) <= 0.0) {
      EXPECT_LE(d.displacement, std::abs(x + 1.5) + 1e-6);
      break;
    }
  }
}

TEST(RunRcl, ExpertAdviceReproducesExpert) {
  for (const auto& sc : bench::gen_stress_suite(9, 18, 12)) {
    const auto params = experts::RobdParams::tuned(sc.model);
    const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule, params);
    FixedAdvisor adv(expert.actions);
    const auto r = run_rcl(sc.instance, sc.model, sc.schedule, RclConfig::with_lambda(0.5), expert, adv);
    for (std::size_t t = 0; t < expert.actions.size(); ++t) EXPECT_EQ(r.trajectory.actions[t], expert.actions[t]);
  }
}

TEST(RunRcl, RobustAgainstRandomAdvice) {
  for (const auto& sc : bench::gen_stress_suite(10, 36, 24)) {
    const auto params = experts::RobdParams::tuned(sc.model);
    const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule, params);
    const double ce = eval_cost(sc.instance, sc.model, expert.actions).total;
    for (double lambda : {0.1, 1.0}) {
      UniformRandomAdvisor adv(5);
      const auto r = run_rcl(sc.instance, sc.model, sc.schedule, RclConfig::with_lambda(lambda), expert, adv);
      EXPECT_LE(r.trajectory.total, (1 + lambda) * ce * (1 + 1e-6));
      for (const auto& x : r.trajectory.actions) EXPECT_TRUE(sc.instance.space.contains(x, 1e-12));
    }
  }
}

TEST(RunRcl, HugeLambdaFollowsAdvice) {
  for (const auto& sc : bench::gen_stress_suite(12, 18, 12)) {
    // Under delay the expert can have zero revealed cost early on, which leaves no budget at any lambda.
    if (sc.schedule.max_delay > 0) continue;
    const auto params = experts::RobdParams::tuned(sc.model);
    const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule, params);
    UniformRandomAdvisor adv(3);
    const auto r = run_rcl(sc.instance, sc.model, sc.schedule, RclConfig::with_lambda(1e9), expert, adv);
    for (std::size_t t = 0; t < r.advice.size(); ++t) EXPECT_FALSE(r.decisions[t].projected);
  }
}

TEST(GapBound, DeltaMatchesIndependentLoop) {
  std::mt19937_64 rng(19);
  for (const auto& sc : bench::gen_stress_suite(14, 18, 12)) {
    const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule,
                                            experts::RobdParams::tuned(sc.model));
    UniformRandomAdvisor adv(rng());
    const auto cfg = RclConfig::with_lambda(0.8);
    const auto r = run_rcl(sc.instance, sc.model, sc.schedule, cfg, expert, adv);
    const auto b = theorem1_bound(sc.instance, sc.model, cfg, expert, r.advice);
    const double want = oracle::delta_lambda_loop(r.advice, expert.actions, expert.revealed_cost, cfg.lambda,
                                                  sc.model.beta_h(), sc.model.alpha());
    EXPECT_NEAR(b.delta_lambda, want, 1e-12 * (1 + want));
    EXPECT_LE(r.trajectory.total, std::min(b.bound_expert, b.bound_ml) + 1e-6);
  }
}

TEST(GapBound, ExpertAdviceHasNoGap) {
  const auto sc = bench::gen_stress_suite(15, 1, 6).front();
  const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule,
                                          experts::RobdParams::tuned(sc.model));
  const auto b = theorem1_bound(sc.instance, sc.model, RclConfig::with_lambda(1.0), expert, expert.actions);
  EXPECT_EQ(b.delta_lambda, 0.0);
  EXPECT_NEAR(b.bound_ml, eval_cost(sc.instance, sc.model, expert.actions).total, 1e-12);
}

TEST(DecisionLog, WritesOneRowPerStep) {
  const auto path = std::filesystem::temp_directory_path() / "soco_rcl_decisions.csv";
  std::vector<StepDecision> ds(3);
  ds[1].projected = true;
  ds[1].dual_mu = 0.5;
  write_decision_log(path, ds);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,projected,slack,dual_mu,displacement");
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "2,1,0,0.5,0");
  std::filesystem::remove(path);
}
