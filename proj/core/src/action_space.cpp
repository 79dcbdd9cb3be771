#include "soco_rcl/types.hpp"

#include <cmath>

namespace soco {

ActionSpace ActionSpace::box(int dim, double lo, double hi) {
  ActionSpace s{Vector::Constant(dim, lo), Vector::Constant(dim, hi)};
  s.validate();
  return s;
}

double ActionSpace::diameter() const { return (upper - lower).norm(); }

Vector ActionSpace::clip(const Vector& x) const {
  if (x.size() != lower.size()) {
    throw DimensionError("clip: action dimension " + std::to_string(x.size()) +
                             " does not match action space",
                         static_cast<int>(lower.size()));
  }
  return x.cwiseMax(lower).cwiseMin(upper);
}

bool ActionSpace::contains(const Vector& x, double tol) const {
  if (x.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
  }
  return true;
}

void ActionSpace::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DimensionError("action space bounds must be non-empty and of equal length",
                         static_cast<int>(upper.size()));
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i])) {
      throw ConfigError("action space requires finite lower <= upper in coordinate " +
                        std::to_string(i));
    }
  }
}

}  // namespace soco
