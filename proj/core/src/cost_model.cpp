#include "soco_rcl/cost_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace soco {

HittingCost::HittingCost(double alpha_h, double beta_h) : alpha_h_(alpha_h), beta_h_(beta_h) {
  if (!(alpha_h > 0.0) || !(beta_h >= alpha_h) || !std::isfinite(beta_h)) {
    throw ConfigError("hitting cost requires 0 < alpha_h <= beta_h < inf");
  }
}

namespace {

std::pair<double, double> extreme_eigenvalues(const Matrix& q) {
  if (q.rows() != q.cols() || q.rows() == 0) {
    throw DimensionError("hitting weight must be a non-empty square matrix", static_cast<int>(q.rows()));
  }
  if (!q.isApprox(q.transpose(), 1e-12)) throw ConfigError("hitting weight must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(q, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

double checked_scale(double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("hitting scale must be positive");
  return scale;
}

}  // namespace

QuadraticTracking::QuadraticTracking(double scale, Matrix weight)
    : HittingCost(2.0 * checked_scale(scale) * extreme_eigenvalues(weight).first,
                  2.0 * scale * extreme_eigenvalues(weight).second),
      scale_(scale),
      weight_(std::move(weight)) {}

std::shared_ptr<const QuadraticTracking> QuadraticTracking::isotropic(int dim, double scale) {
  return std::make_shared<const QuadraticTracking>(scale, Matrix::Identity(dim, dim));
}

double QuadraticTracking::value(const Vector& x, const Context& y) const {
  const Vector r = x - y;
  return scale_ * r.dot(weight_ * r);
}

Vector QuadraticTracking::gradient(const Vector& x, const Context& y) const {
  return 2.0 * scale_ * (weight_ * (x - y));
}

Matrix QuadraticTracking::hessian(const Vector&, const Context&) const { return 2.0 * scale_ * weight_; }

EvaluatorHittingCost::EvaluatorHittingCost(ValueFn value, GradientFn gradient, HessianFn hessian,
                                           double alpha_h, double beta_h)
    : HittingCost(alpha_h, beta_h),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_(std::move(hessian)) {
  if (!value_ || !gradient_ || !hessian_) throw ConfigError("evaluator hitting cost needs all callbacks");
}

MemoryMap::MemoryMap(int dim, std::vector<double> lipschitz) : dim_(dim), lipschitz_(std::move(lipschitz)) {
  if (dim_ <= 0) throw DimensionError("memory map dimension must be positive", dim_);
  if (lipschitz_.empty()) throw ConfigError("memory length p must be at least 1");
  for (double l : lipschitz_) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("Lipschitz constants must be finite and >= 0");
  }
}

double MemoryMap::alpha() const {
  return 1.0 + std::accumulate(lipschitz_.begin(), lipschitz_.end(), 0.0);
}

namespace {

void check_window(std::span<const Vector> window, int p, int n) {
  if (static_cast<int>(window.size()) != p) {
    throw DimensionError("memory window has wrong length", static_cast<int>(window.size()));
  }
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (window[i].size() != n) throw DimensionError("memory window entry has wrong dimension", static_cast<int>(i));
  }
}

void check_lag(int lag, int p) {
  if (lag < 1 || lag > p) throw DimensionError("memory lag out of range", lag);
}

}  // namespace

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

IdentityMemory::IdentityMemory(int dim) : MemoryMap(dim, {1.0}) {}

Vector IdentityMemory::apply(std::span<const Vector> window) const {
  check_window(window, 1, dim());
  return window.back();
}

Matrix IdentityMemory::jacobian(std::span<const Vector>, int lag) const {
  check_lag(lag, 1);
  return Matrix::Identity(dim(), dim());
}

std::optional<std::vector<Matrix>> IdentityMemory::linear_blocks() const {
  return std::vector<Matrix>{Matrix::Identity(dim(), dim())};
}

namespace {

std::vector<double> block_norms(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) throw ConfigError("linear memory needs at least one block");
  std::vector<double> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Matrix& a = blocks[i];
    if (a.rows() != a.cols() || a.rows() != blocks.front().rows() || a.rows() == 0) {
      throw DimensionError("linear memory blocks must be square and equal-sized", static_cast<int>(i));
    }
    out.push_back(spectral_norm(a));
  }
  return out;
}

}  // namespace

LinearMemory::LinearMemory(std::vector<Matrix> blocks)
    : MemoryMap(blocks.empty() ? 1 : static_cast<int>(blocks.front().rows()), block_norms(blocks)),
      blocks_(std::move(blocks)) {}

std::shared_ptr<const LinearMemory> LinearMemory::single(Matrix a) {
  return std::make_shared<const LinearMemory>(std::vector<Matrix>{std::move(a)});
}

Vector LinearMemory::apply(std::span<const Vector> window) const {
  const int p = memory();
  check_window(window, p, dim());
  Vector out = Vector::Zero(dim());
  for (int i = 1; i <= p; ++i) out.noalias() += blocks_[i - 1] * window[p - i];
  return out;
}

Matrix LinearMemory::jacobian(std::span<const Vector>, int lag) const {
  check_lag(lag, memory());
  return blocks_[lag - 1];
}

DroneMemory::DroneMemory(int dim, double c1, double c2, double radius)
    : MemoryMap(dim, {std::max(1.0, std::abs(1.0 - 2.0 * c2 * radius))}), c1_(c1), c2_(c2), radius_(radius) {
  if (!(c2 >= 0.0) || !(radius > 0.0)) throw ConfigError("drone memory needs c2 >= 0 and radius > 0");
}

Vector DroneMemory::apply(std::span<const Vector> window) const {
  check_window(window, 1, dim());
  const Vector& x = window.back();
  return (x.array() - c1_ - c2_ * x.array().abs() * x.array()).matrix();
}

Matrix DroneMemory::jacobian(std::span<const Vector> window, int lag) const {
  check_lag(lag, 1);
  check_window(window, 1, dim());
  const Vector& x = window.back();
  return (1.0 - 2.0 * c2_ * x.array().abs()).matrix().asDiagonal();
}

double CostModel::switching_cost(const Vector& x, std::span<const Vector> window) const {
  return 0.5 * (x - switching->apply(window)).squaredNorm();
}

void ProblemInstance::validate() const {
  space.validate();
  const int n = dim();
  if (contexts.empty()) throw DimensionError("instance horizon must be positive", 0);
  if (initial_actions.empty()) throw DimensionError("instance needs at least one initial action", 0);
  const auto m = contexts.front().size();
  for (std::size_t t = 0; t < contexts.size(); ++t) {
    if (contexts[t].size() != m || !contexts[t].allFinite()) {
      throw DimensionError("context has inconsistent dimension or non-finite entry", static_cast<int>(t + 1));
    }
  }
  for (std::size_t i = 0; i < initial_actions.size(); ++i) {
    if (initial_actions[i].size() != n || !initial_actions[i].allFinite()) {
      throw DimensionError("initial action has wrong dimension or non-finite entry",
                           static_cast<int>(i) - memory() + 1);
    }
  }
}

ActionHistory::ActionHistory(const std::vector<ActionVector>& initial_actions)
    : memory_(static_cast<int>(initial_actions.size())), slots_(initial_actions) {}

std::span<const ActionVector> ActionHistory::window(int t) const {
  if (t < 1 || t > steps() + 1) throw DimensionError("history window requested out of range", t);
  return std::span<const ActionVector>(slots_).subspan(static_cast<std::size_t>(t - 1), memory_);
}

namespace {

void check_actions(const ProblemInstance& instance, const CostModel& model,
                   const std::vector<ActionVector>& actions) {
  if (static_cast<int>(actions.size()) != instance.horizon()) {
    throw DimensionError("action sequence length differs from horizon", static_cast<int>(actions.size()));
  }
  if (model.memory() != instance.memory()) {
    throw DimensionError("cost model memory differs from number of initial actions", model.memory());
  }
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (actions[t].size() != instance.dim()) {
      throw DimensionError("action has wrong dimension", static_cast<int>(t + 1));
    }
  }
}

}  // namespace

Trajectory eval_cost(const ProblemInstance& instance, const CostModel& model,
                     const std::vector<ActionVector>& actions) {
  check_actions(instance, model, actions);
  Trajectory out;
  out.actions = actions;
  ActionHistory history(instance.initial_actions);
  for (int t = 1; t <= instance.horizon(); ++t) {
    const ActionVector& x = actions[t - 1];
    const double hit = model.hitting->value(x, instance.context(t));
    const double sw = model.switching_cost(x, history.window(t));
    out.per_step_hitting.push_back(hit);
    out.per_step_switching.push_back(sw);
    history.push(x);
  }
  out.total = std::accumulate(out.per_step_hitting.begin(), out.per_step_hitting.end(), 0.0) +
              std::accumulate(out.per_step_switching.begin(), out.per_step_switching.end(), 0.0);
  return out;
}

std::vector<Vector> cost_gradient(const ProblemInstance& instance, const CostModel& model,
                                  const std::vector<ActionVector>& actions) {
  check_actions(instance, model, actions);
  const int T = instance.horizon();
  const int p = model.memory();
  std::vector<Vector> grad(static_cast<std::size_t>(T), Vector::Zero(instance.dim()));
  ActionHistory history(instance.initial_actions);
  for (const auto& x : actions) history.push(x);
  for (int t = 1; t <= T; ++t) {
    const auto window = history.window(t);
    const Vector r = actions[t - 1] - model.switching->apply(window);
    grad[t - 1] += model.hitting->gradient(actions[t - 1], instance.context(t)) + r;
    for (int i = 1; i <= p && t - i >= 1; ++i) {
      grad[t - i - 1] -= model.switching->jacobian(window, i).transpose() * r;
    }
  }
  return grad;
}

double spot_check_constants(const HittingCost& cost, const ActionSpace& space,
                            const std::vector<Context>& contexts, unsigned seed, int probes) {
  if (contexts.empty()) return 0.0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, contexts.size() - 1);
  const int n = space.dim();
  auto sample = [&] {
    Vector x(n);
    for (int i = 0; i < n; ++i) x[i] = space.lower[i] + unit(rng) * (space.upper[i] - space.lower[i]);
    return x;
  };
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < probes; ++k) {
    const Context& y = contexts[pick(rng)];
    const Vector a = sample();
    const Vector b = sample();
    const Vector v = b - a;
    worst = std::max(worst, -cost.value(a, y));
    const double vv = v.squaredNorm();
    if (vv < 1e-12) continue;
    const double secant = (cost.gradient(b, y) - cost.gradient(a, y)).dot(v) / vv;
    const double tol = 1e-9 * (1.0 + cost.beta_h());
    worst = std::max({worst, cost.alpha_h() - secant - tol, secant - cost.beta_h() - tol});
  }
  return worst;
}

}  // namespace soco
