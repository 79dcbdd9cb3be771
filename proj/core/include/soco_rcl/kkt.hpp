#pragma once

#include "soco_rcl/rcl.hpp"

#include <vector>

namespace soco::ml {

/// Blocks of the differentiated KKT system of the projection at (x, mu).
struct KktBlocks {
  Matrix delta11;               ///< I + mu * hess g
  Vector delta12;               ///< grad g
  Eigen::RowVectorXd delta21;   ///< mu * grad g^T
  double delta22 = 0.0;         ///< g(x)
  double schur = 0.0;           ///< delta22 - delta21 delta11^{-1} delta12, on the free coordinates
  double mu = 0.0;
  std::vector<int> free;        ///< coordinates not pinned by the box
};

/// When `space` is given, coordinates sitting exactly on a bound are treated as
/// pinned and excluded from the Schur complement.
KktBlocks kkt_blocks(const rcl::StepConstraint& constraint, const Vector& x, double mu,
                     const ActionSpace* space = nullptr);

struct ImplicitGrads {
  Matrix d_x_d_advice;    ///< n x n; zero rows/columns on pinned coordinates
  Vector d_x_d_prevcost;  ///< sensitivity to the history constant of g
};

/// Implicit derivatives of the projection. |Sc| < 1e-12 is treated as a zero
/// inverse (subgradient convention); mu = 0 gives the identity.
ImplicitGrads implicit_grads(const KktBlocks& blocks);

/// Partial derivatives of g_t with respect to the committed actions x_1..x_{t-1},
/// evaluated at the candidate x_t = own[t - 1].
struct HistorySensitivity {
  std::vector<Vector> grad_g;       ///< d g / d x_tau, tau = 1..t-1
  std::vector<Matrix> delta_jacobian;  ///< d delta / d x_{t-i}, i = 1..p (empty matrix when t - i < 1)
};

HistorySensitivity history_sensitivity(const ProblemInstance& instance, const CostModel& model,
                                       const DelaySchedule& schedule, const rcl::RclConfig& config,
                                       const std::vector<ActionVector>& expert_actions,
                                       std::span<const ActionVector> own, int t);

}  // namespace soco::ml
