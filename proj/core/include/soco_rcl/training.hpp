#pragma once

#include "soco_rcl/experts.hpp"
#include "soco_rcl/predictor.hpp"
#include "soco_rcl/rcl.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace soco::ml {

enum class LossMode { oblivious, aware };

LossMode parse_mode(const std::string& name);
std::string to_string(LossMode mode);

/// One training episode with its expert trace precomputed.
struct Episode {
  ProblemInstance instance;
  DelaySchedule schedule;
  experts::ExpertTrace expert;
};

struct TrainingSet {
  CostModel model;
  std::vector<Episode> episodes;

  static TrainingSet build(const CostModel& model, const std::vector<ProblemInstance>& instances,
                           const std::vector<DelaySchedule>& schedules, experts::ExpertKind expert,
                           const experts::RobdParams& params);
};

struct LossAndGrad {
  double loss = 0.0;
  Vector grad;  ///< flattened in Predictor parameter order
};

/// cost(x~_{1:T}) of the raw advice.
LossAndGrad episode_loss_oblivious(const Predictor& predictor, const Episode& episode, const CostModel& model);

/// cost(x_{1:T}) after robustification. Projection steps are rebuilt from the
/// full history each step and differentiated through the KKT system.
LossAndGrad episode_loss_aware(const Predictor& predictor, const Episode& episode, const CostModel& model,
                               const rcl::RclConfig& config);

/// Value-only variants (no tape); the aware one runs the ledger-based driver.
double loss_oblivious(const Predictor& predictor, const TrainingSet& data);
double loss_aware(const Predictor& predictor, const TrainingSet& data, const rcl::RclConfig& config);

/// Batch mean of episode losses and gradients, reduced in episode order.
LossAndGrad batch_loss(const Predictor& predictor, const TrainingSet& data, const std::vector<std::size_t>& batch,
                       LossMode mode, const rcl::RclConfig& config, int jobs = 1);

struct TrainHyper {
  int epochs = 140;
  int batch = 50;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string optimizer = "sgd";  ///< sgd | adam
  double clip_norm = 10.0;
  int jobs = 1;
};

struct TrainResult {
  Predictor predictor;
  std::vector<double> loss_curve;  ///< per-epoch mean episode loss before each update
};

/// Mini-batch training; throws NumericalError when the loss exceeds 1e12 or
/// stops being finite.
TrainResult train(const Predictor& init, const TrainingSet& data, LossMode mode, const TrainHyper& hyper,
                  const rcl::RclConfig& config = rcl::RclConfig::with_lambda(1.0));

}  // namespace soco::ml
