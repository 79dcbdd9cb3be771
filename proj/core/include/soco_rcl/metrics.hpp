#pragma once

#include <vector>

namespace soco {

/// OPT-normalized average cost and empirical competitive ratio.
struct Metrics {
  double avg = 0.0;
  double cr = 0.0;
};

/// AVG = mean(alg_i / opt_i), CR = max(alg_i / opt_i). Throws
/// DegenerateInstanceError when some opt_i <= 0.
Metrics metrics(const std::vector<double>& costs_alg, const std::vector<double>& costs_opt);

}  // namespace soco
