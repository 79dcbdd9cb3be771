#pragma once

#include "soco_rcl/types.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace soco {

/// Convex hitting cost f(x, y) >= 0, alpha_h-strongly convex and beta_h-smooth in x.
///
/// The constants are trusted inputs; `spot_check_constants` probes them with
/// secant slopes but nothing here proves them.
class HittingCost {
 public:
  virtual ~HittingCost() = default;

  virtual double value(const Vector& x, const Context& y) const = 0;
  virtual Vector gradient(const Vector& x, const Context& y) const = 0;
  virtual Matrix hessian(const Vector& x, const Context& y) const = 0;

  /// Unconstrained argmin over x, when known in closed form.
  virtual std::optional<Vector> minimizer(const Context& y) const { (void)y; return std::nullopt; }
  /// True when the hessian does not depend on x or y.
  virtual bool is_quadratic() const { return false; }
  /// Serializable description; empty for user evaluators.
  virtual std::string kind() const { return "evaluator"; }

  double alpha_h() const { return alpha_h_; }
  double beta_h() const { return beta_h_; }

 protected:
  HittingCost(double alpha_h, double beta_h);

 private:
  double alpha_h_;
  double beta_h_;
};

/// f(x, y) = scale * (x - y)^T Q (x - y). With Q = I and scale = 1/(2b) this is
/// the battery tracking term.
class QuadraticTracking final : public HittingCost {
 public:
  QuadraticTracking(double scale, Matrix weight);
  static std::shared_ptr<const QuadraticTracking> isotropic(int dim, double scale);

  double value(const Vector& x, const Context& y) const override;
  Vector gradient(const Vector& x, const Context& y) const override;
  Matrix hessian(const Vector& x, const Context& y) const override;
  std::optional<Vector> minimizer(const Context& y) const override { return y; }
  bool is_quadratic() const override { return true; }
  std::string kind() const override { return "quadratic"; }

  double scale() const { return scale_; }
  const Matrix& weight() const { return weight_; }

 private:
  double scale_;
  Matrix weight_;
};

/// Hitting cost supplied as callbacks.
class EvaluatorHittingCost final : public HittingCost {
 public:
  using ValueFn = std::function<double(const Vector&, const Context&)>;
  using GradientFn = std::function<Vector(const Vector&, const Context&)>;
  using HessianFn = std::function<Matrix(const Vector&, const Context&)>;

  EvaluatorHittingCost(ValueFn value, GradientFn gradient, HessianFn hessian, double alpha_h,
                       double beta_h);

  double value(const Vector& x, const Context& y) const override { return value_(x, y); }
  Vector gradient(const Vector& x, const Context& y) const override { return gradient_(x, y); }
  Matrix hessian(const Vector& x, const Context& y) const override { return hessian_(x, y); }

 private:
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
};

/// The memory map delta(x_{t-p}, ..., x_{t-1}) inside d = 1/2 ||x_t - delta||^2.
///
/// Windows are passed oldest first, so `window[p - i]` is x_{t-i}.
class MemoryMap {
 public:
  virtual ~MemoryMap() = default;

  int memory() const { return static_cast<int>(lipschitz_.size()); }
  int dim() const { return dim_; }
  /// L_1..L_p where L_i bounds the sensitivity to x_{t-i}.
  const std::vector<double>& lipschitz() const { return lipschitz_; }
  /// 1 + sum_i L_i.
  double alpha() const;

  virtual Vector apply(std::span<const Vector> window) const = 0;
  /// d delta / d x_{t-lag}, lag in 1..p.
  virtual Matrix jacobian(std::span<const Vector> window, int lag) const = 0;
  /// A_1..A_p when delta = sum_i A_i x_{t-i}.
  virtual std::optional<std::vector<Matrix>> linear_blocks() const { return std::nullopt; }
  virtual std::string kind() const = 0;

 protected:
  MemoryMap(int dim, std::vector<double> lipschitz);

 private:
  int dim_;
  std::vector<double> lipschitz_;
};

/// delta = x_{t-1}.
class IdentityMemory final : public MemoryMap {
 public:
  explicit IdentityMemory(int dim);
  Vector apply(std::span<const Vector> window) const override;
  Matrix jacobian(std::span<const Vector> window, int lag) const override;
  std::optional<std::vector<Matrix>> linear_blocks() const override;
  std::string kind() const override { return "identity"; }
};

/// delta = sum_i A_i x_{t-i}; L_i is the spectral norm of A_i.
class LinearMemory final : public MemoryMap {
 public:
  explicit LinearMemory(std::vector<Matrix> blocks);
  static std::shared_ptr<const LinearMemory> single(Matrix a);

  Vector apply(std::span<const Vector> window) const override;
  Matrix jacobian(std::span<const Vector> window, int lag) const override;
  std::optional<std::vector<Matrix>> linear_blocks() const override { return blocks_; }
  std::string kind() const override { return "linear"; }
  const std::vector<Matrix>& blocks() const { return blocks_; }

 private:
  std::vector<Matrix> blocks_;
};

/// Drone velocity memory, elementwise delta(x) = x - c1 - c2 |x| x. The
/// Lipschitz constant holds for |x_i| <= radius.
class DroneMemory final : public MemoryMap {
 public:
  DroneMemory(int dim, double c1, double c2, double radius);
  Vector apply(std::span<const Vector> window) const override;
  Matrix jacobian(std::span<const Vector> window, int lag) const override;
  std::string kind() const override { return "drone"; }
  double c1() const { return c1_; }
  double c2() const { return c2_; }
  double radius() const { return radius_; }

 private:
  double c1_;
  double c2_;
  double radius_;
};

double spectral_norm(const Matrix& a);

/// Hitting cost plus switching memory.
struct CostModel {
  std::shared_ptr<const HittingCost> hitting;
  std::shared_ptr<const MemoryMap> switching;

  int memory() const { return switching->memory(); }
  double alpha() const { return switching->alpha(); }
  double beta_h() const { return hitting->beta_h(); }
  double switching_cost(const Vector& x, std::span<const Vector> window) const;
};

/// One episode: contexts y_1..y_T, initial actions x_{-p+1}..x_0 (oldest first)
/// and the feasible box.
struct ProblemInstance {
  std::vector<Context> contexts;
  std::vector<ActionVector> initial_actions;
  ActionSpace space;

  int horizon() const { return static_cast<int>(contexts.size()); }
  int dim() const { return space.dim(); }
  int memory() const { return static_cast<int>(initial_actions.size()); }
  int context_dim() const { return contexts.empty() ? 0 : static_cast<int>(contexts.front().size()); }
  const Context& context(int t) const { return contexts.at(static_cast<std::size_t>(t - 1)); }
  /// Throws DimensionError naming the first inconsistent entry.
  void validate() const;
};

/// Initial actions followed by x_1, x_2, ...; step s maps to slot s + p - 1.
class ActionHistory {
 public:
  explicit ActionHistory(const std::vector<ActionVector>& initial_actions);

  void push(ActionVector x) { slots_.push_back(std::move(x)); }
  /// x_s for s in -p+1..steps().
  const ActionVector& at(int s) const { return slots_.at(static_cast<std::size_t>(s + memory_ - 1)); }
  /// x_{t-p}..x_{t-1}, oldest first.
  std::span<const ActionVector> window(int t) const;
  int steps() const { return static_cast<int>(slots_.size()) - memory_; }
  int memory() const { return memory_; }

 private:
  int memory_;
  std::vector<ActionVector> slots_;
};

/// Realized costs of an action sequence.
struct Trajectory {
  std::vector<ActionVector> actions;
  std::vector<double> per_step_hitting;
  std::vector<double> per_step_switching;
  double total = 0.0;
};

/// Per-step hitting and switching costs of `actions` on `instance`.
Trajectory eval_cost(const ProblemInstance& instance, const CostModel& model,
                     const std::vector<ActionVector>& actions);

/// Gradient of the total cost with respect to every x_t, t = 1..T.
std::vector<Vector> cost_gradient(const ProblemInstance& instance, const CostModel& model,
                                  const std::vector<ActionVector>& actions);

/// Randomized secant probe of alpha_h <= f'' <= beta_h along random segments in
/// `space`; returns the worst violation found (<= 0 means consistent).
double spot_check_constants(const HittingCost& cost, const ActionSpace& space,
                            const std::vector<Context>& contexts, unsigned seed, int probes = 64);

}  // namespace soco
