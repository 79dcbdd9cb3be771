#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace soco {

/// Per-step sets D_t of context indices that become known at step t.
///
/// `reveal_sets[t - 1]` holds D_t, sorted ascending. Indices are 1-based steps.
struct DelaySchedule {
  int max_delay = 0;
  std::vector<std::vector<int>> reveal_sets;

  /// D_t = {t}.
  static DelaySchedule no_delay(int horizon);
  /// Every context arrives exactly q steps late; whatever is outstanding at T
  /// is revealed at T.
  static DelaySchedule identical(int horizon, int q);
  /// Each context arrives at a uniform step in [tau, min(tau + q, T)].
  static DelaySchedule random(int horizon, int q, std::uint64_t seed);

  int horizon() const { return static_cast<int>(reveal_sets.size()); }
  const std::vector<int>& revealed_at(int t) const { return reveal_sets.at(static_cast<std::size_t>(t - 1)); }
  /// Step at which each context tau = 1..T is revealed (index tau - 1); 0 if never.
  std::vector<int> reveal_times() const;
};

struct DelayViolation {
  int t = 0;
  int tau = 0;
  std::string reason;
};

/// First violated invariant, scanning t = 1..T, or nullopt when the schedule is valid.
std::optional<DelayViolation> validate_delay(const DelaySchedule& schedule, int horizon);

struct RevealedSets {
  std::vector<int> revealed;    ///< A_t, ascending
  std::vector<int> unrevealed;  ///< B_t, ascending
};

RevealedSets revealed_sets(const DelaySchedule& schedule, int t);

}  // namespace soco
