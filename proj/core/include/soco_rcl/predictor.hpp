#pragma once

#include "soco_rcl/cost_model.hpp"
#include "soco_rcl/delay.hpp"
#include "soco_rcl/rcl.hpp"
#include "soco_rcl/tape.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace soco::ml {

/// Layout of the recurrent advice model.
///
/// Input at step t: the p previous advice actions (newest first), then for
/// each lag j = 0..q a presence bit and y_{t-j} when it is revealed at t
/// (zeros otherwise).
struct PredictorShape {
  int n = 1;       ///< action dimension
  int m = 1;       ///< context dimension
  int p = 1;       ///< memory length
  int q = 0;       ///< maximum delay
  int hidden = 8;  ///< units per recurrent layer

  int input_dim() const { return p * n + (q + 1) * (m + 1); }
  bool operator==(const PredictorShape&) const = default;
};

/// Two stacked tanh recurrent layers, a linear read-out and a linear skip path
/// from the input, clipped to the action box.
class Predictor {
 public:
  /// Parameter order: W1x, W1h, b1, W2x, W2h, b2, Wo, bo, Ws.
  static constexpr int kNumTensors = 9;

  Predictor(PredictorShape shape, std::uint64_t seed);
  static Predictor zeros(PredictorShape shape);

  const PredictorShape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Matrix>& params() const { return params_; }
  std::vector<Matrix>& params() { return params_; }
  static const char* param_name(int k);

  Eigen::Index num_params() const;
  Vector flat() const;
  void set_flat(const Vector& w);

  /// Causal rollout of the advice x~_1..x~_T.
  std::vector<ActionVector> forward(const ProblemInstance& instance, const DelaySchedule& schedule) const;

  struct Recorded {
    std::vector<GradientTape::Node> params;
    std::vector<GradientTape::Node> advice;
  };
  /// Same rollout recorded on `tape` with the parameters as variables.
  Recorded record(GradientTape& tape, const ProblemInstance& instance, const DelaySchedule& schedule) const;

  /// JSON header line followed by little-endian float64 tensors in parameter order.
  void save(const std::filesystem::path& path, const std::string& mode) const;
  static Predictor load(const std::filesystem::path& path);

 private:
  friend class PredictorAdvisor;
  explicit Predictor(PredictorShape shape);

  struct State {
    Matrix h1;
    Matrix h2;
    std::vector<ActionVector> last;  ///< previous advice, oldest first
  };
  State initial_state(const std::vector<ActionVector>& initial_actions) const;
  Matrix encode(const State& s, int t, const std::vector<std::pair<int, Context>>& revealed) const;
  ActionVector step(State& s, const Matrix& input, const ActionSpace& space) const;

  PredictorShape shape_;
  std::uint64_t seed_ = 0;
  std::vector<Matrix> params_;
};

/// Feeds a predictor step by step inside run_rcl.
class PredictorAdvisor final : public rcl::Advisor {
 public:
  explicit PredictorAdvisor(const Predictor& predictor) : predictor_(predictor) {}
  void reset(const rcl::EpisodeInfo& info) override;
  ActionVector advise(int t, const std::vector<std::pair<int, Context>>& newly_revealed) override;

 private:
  const Predictor& predictor_;
  Predictor::State state_;
  ActionSpace space_;
};

}  // namespace soco::ml
