#include "soco_rcl/delay.hpp"

#include "soco_rcl/types.hpp"

#include <algorithm>
#include <random>

namespace soco {

DelaySchedule DelaySchedule::no_delay(int horizon) { return identical(horizon, 0); }

DelaySchedule DelaySchedule::identical(int horizon, int q) {
  if (horizon < 1 || q < 0) throw ConfigError("delay schedule needs horizon >= 1 and q >= 0");
  DelaySchedule s{q, std::vector<std::vector<int>>(static_cast<std::size_t>(horizon))};
  for (int tau = 1; tau <= horizon; ++tau) {
    s.reveal_sets[static_cast<std::size_t>(std::min(tau + q, horizon) - 1)].push_back(tau);
  }
  return s;
}

DelaySchedule DelaySchedule::random(int horizon, int q, std::uint64_t seed) {
  if (horizon < 1 || q < 0) throw ConfigError("delay schedule needs horizon >= 1 and q >= 0");
  std::mt19937_64 rng(seed);
  DelaySchedule s{q, std::vector<std::vector<int>>(static_cast<std::size_t>(horizon))};
  for (int tau = 1; tau <= horizon; ++tau) {
    std::uniform_int_distribution<int> when(tau, std::min(tau + q, horizon));
    s.reveal_sets[static_cast<std::size_t>(when(rng) - 1)].push_back(tau);
  }
  return s;
}

std::vector<int> DelaySchedule::reveal_times() const {
  std::vector<int> out(reveal_sets.size(), 0);
  for (std::size_t t = 0; t < reveal_sets.size(); ++t) {
    for (int tau : reveal_sets[t]) {
      if (tau >= 1 && tau <= horizon()) out[static_cast<std::size_t>(tau - 1)] = static_cast<int>(t + 1);
    }
  }
  return out;
}

std::optional<DelayViolation> validate_delay(const DelaySchedule& schedule, int horizon) {
  if (schedule.horizon() != horizon) {
    return DelayViolation{schedule.horizon(), 0, "schedule length differs from horizon"};
  }
  const int q = schedule.max_delay;
  std::vector<char> seen(static_cast<std::size_t>(horizon + 1), 0);
  for (int t = 1; t <= horizon; ++t) {
    for (int tau : schedule.revealed_at(t)) {
      if (tau < std::max(1, t - q) || tau > t) {
        return DelayViolation{t, tau, "index outside [t - q, t]"};
      }
      if (seen[static_cast<std::size_t>(tau)]) return DelayViolation{t, tau, "index revealed twice"};
      seen[static_cast<std::size_t>(tau)] = 1;
    }
    for (int tau = 1; tau <= t - q; ++tau) {
      if (!seen[static_cast<std::size_t>(tau)]) {
        return DelayViolation{t, tau, "index older than t - q not yet revealed"};
      }
    }
  }
  for (int tau = 1; tau <= horizon; ++tau) {
    if (!seen[static_cast<std::size_t>(tau)]) return DelayViolation{horizon, tau, "index never revealed"};
  }
  return std::nullopt;
}

RevealedSets revealed_sets(const DelaySchedule& schedule, int t) {
  if (t < 1 || t > schedule.horizon()) throw DimensionError("revealed_sets step out of range", t);
  std::vector<char> known(static_cast<std::size_t>(t + 1), 0);
  for (int s = 1; s <= t; ++s) {
    for (int tau : schedule.revealed_at(s)) {
      if (tau >= 1 && tau <= t) known[static_cast<std::size_t>(tau)] = 1;
    }
  }
  RevealedSets out;
  for (int tau = 1; tau <= t; ++tau) (known[static_cast<std::size_t>(tau)] ? out.revealed : out.unrevealed).push_back(tau);
  return out;
}

}  // namespace soco
