#include "soco_rcl/metrics.hpp"

#include "soco_rcl/types.hpp"

#include <algorithm>
#include <cmath>

namespace soco {

Metrics metrics(const std::vector<double>& costs_alg, const std::vector<double>& costs_opt) {
  if (costs_alg.size() != costs_opt.size()) {
    throw DimensionError("metrics: cost vectors differ in length", static_cast<int>(costs_alg.size()));
  }
  if (costs_alg.empty()) throw DimensionError("metrics: no instances", 0);
  Metrics m{0.0, -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < costs_opt.size(); ++i) {
    if (!(costs_opt[i] > 0.0)) {
      throw DegenerateInstanceError("reference cost is not positive", static_cast<int>(i));
    }
    const double r = costs_alg[i] / costs_opt[i];
    m.avg += r;
    m.cr = std::max(m.cr, r);
  }
  m.avg /= static_cast<double>(costs_opt.size());
  return m;
}

}  // namespace soco
