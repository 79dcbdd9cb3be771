#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Each one works from the plain definitions, without the library's
// decompositions.

#include "soco_rcl/cost_model.hpp"
#include "soco_rcl/delay.hpp"
#include "soco_rcl/rcl.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

namespace oracle {

using soco::ActionVector;
using soco::Vector;

/// Direct per-step cost sum with a hand-rolled history buffer.
inline double total_cost(const soco::ProblemInstance& inst, const soco::CostModel& model,
                         const std::vector<ActionVector>& xs) {
  std::vector<Vector> hist(inst.initial_actions.begin(), inst.initial_actions.end());
  const std::size_t p = inst.initial_actions.size();
  double total = 0.0;
  for (std::size_t t = 0; t < xs.size(); ++t) {
    std::vector<Vector> window(hist.end() - static_cast<std::ptrdiff_t>(p), hist.end());
    const Vector d = xs[t] - model.switching->apply(window);
    total += model.hitting->value(xs[t], inst.contexts[t]) + 0.5 * d.squaredNorm();
    hist.push_back(xs[t]);
  }
  return total;
}

/// Minimum over a square grid of step `h` for a T = 2 scalar instance.
inline double grid_opt_t2(const soco::ProblemInstance& inst, const soco::CostModel& model, double h) {
  const double lo = inst.space.lower[0];
  const double hi = inst.space.upper[0];
  const int steps = static_cast<int>(std::floor((hi - lo) / h + 1e-9));
  double best = std::numeric_limits<double>::infinity();
  std::vector<ActionVector> xs(2, Vector(1));
  for (int i = 0; i <= steps; ++i) {
    xs[0][0] = lo + i * h;
    for (int j = 0; j <= steps; ++j) {
      xs[1][0] = lo + j * h;
      best = std::min(best, total_cost(inst, model, xs));
    }
  }
  return best;
}

struct BruteSets {
  std::set<int> revealed;
  std::set<int> unrevealed;
};

/// A_t and B_t from set unions over D_1..D_t.
inline BruteSets brute_revealed(const soco::DelaySchedule& s, int t) {
  BruteSets out;
  for (int k = 1; k <= t; ++k) {
    for (int tau : s.reveal_sets[static_cast<std::size_t>(k - 1)]) out.revealed.insert(tau);
  }
  for (int tau = 1; tau <= t; ++tau) {
    if (!out.revealed.count(tau)) out.unrevealed.insert(tau);
  }
  return out;
}

/// G written term by term from its definition; windows oldest first, p + 1 entries.
inline double g_direct(const std::vector<Vector>& x, const std::vector<Vector>& xp, const std::vector<double>& L,
                       double lambda0) {
  const std::size_t p = L.size();
  double alpha = 1.0;
  for (double l : L) alpha += l;
  auto e2 = [&](std::size_t back) { return (x[p - back] - xp[p - back]).squaredNorm(); };
  double sum = 0.0;
  for (std::size_t k = 1; k <= p; ++k) {
    sum += L[k - 1] * e2(0);
    for (std::size_t i = 1; i <= p - k; ++i) sum += L[k + i - 1] * e2(i);
  }
  return (1.0 + 1.0 / lambda0) * alpha / 2.0 * sum;
}

/// Both sides of the robustness constraint at step t with x_t = own.back().
struct ConstraintSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return rhs - lhs; }
};

inline ConstraintSides constraint_sides(const soco::ProblemInstance& inst, const soco::CostModel& model,
                                        const soco::DelaySchedule& sched, const soco::rcl::RclConfig& cfg,
                                        const std::vector<ActionVector>& expert, const std::vector<ActionVector>& own,
                                        int t) {
  const std::size_t p = inst.initial_actions.size();
  auto hist = [&](const std::vector<ActionVector>& xs, int s) -> Vector {
    return s >= 1 ? xs[static_cast<std::size_t>(s - 1)] : inst.initial_actions[static_cast<std::size_t>(s + static_cast<int>(p) - 1)];
  };
  auto window = [&](const std::vector<ActionVector>& xs, int s) {
    std::vector<Vector> w;
    for (int k = s - static_cast<int>(p); k <= s - 1; ++k) w.push_back(hist(xs, k));
    return w;
  };
  auto d = [&](const std::vector<ActionVector>& xs, int s) {
    return 0.5 * (hist(xs, s) - model.switching->apply(window(xs, s))).squaredNorm();
  };
  const BruteSets sets = brute_revealed(sched, t);
  const double beta = model.hitting->beta_h();
  ConstraintSides out;
  double rhs = 0.0;
  for (int tau : sets.revealed) {
    out.lhs += model.hitting->value(hist(own, tau), inst.context(tau));
    rhs += model.hitting->value(hist(expert, tau), inst.context(tau));
  }
  for (int tau = 1; tau <= t; ++tau) {
    out.lhs += d(own, tau);
    rhs += d(expert, tau);
  }
  for (int tau : sets.unrevealed) {
    out.lhs += beta / 2.0 * (1.0 + 1.0 / cfg.lambda0) * (hist(own, tau) - hist(expert, tau)).squaredNorm();
  }
  std::vector<Vector> xw, pw;
  for (int k = t - static_cast<int>(p); k <= t; ++k) {
    xw.push_back(hist(own, k));
    pw.push_back(hist(expert, k));
  }
  out.lhs += g_direct(xw, pw, model.switching->lipschitz(), cfg.lambda0);
  out.rhs = (1.0 + cfg.lambda) * rhs;
  return out;
}

/// Per-step loop for the advice gap term of the bound.
inline double delta_lambda_loop(const std::vector<ActionVector>& advice, const std::vector<ActionVector>& expert,
                                const std::vector<double>& expert_step_cost, double lambda, double beta_h,
                                double alpha) {
  const double r = std::sqrt(1.0 + lambda) - 1.0;
  const double k = 2.0 * r * r / (beta_h + alpha * alpha);
  double sum = 0.0;
  for (std::size_t t = 0; t < advice.size(); ++t) {
    sum += std::max(0.0, (advice[t] - expert[t]).squaredNorm() - k * expert_step_cost[t]);
  }
  return sum;
}

/// Central differences of a vector-valued map, one column per input coordinate.
inline soco::Matrix fd_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double h) {
  const Vector f0 = f(x);
  soco::Matrix J(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    J.col(i) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
