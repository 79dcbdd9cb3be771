#include "soco_rcl/kkt.hpp"
#include "soco_rcl/training.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <thread>

namespace soco::ml {

LossMode parse_mode(const std::string& name) {
  if (name == "oblivious") return LossMode::oblivious;
  if (name == "aware") return LossMode::aware;
  throw ConfigError("unknown training mode '" + name + "' (expected oblivious or aware)");
}

std::string to_string(LossMode mode) { return mode == LossMode::aware ? "aware" : "oblivious"; }

TrainingSet TrainingSet::build(const CostModel& model, const std::vector<ProblemInstance>& instances,
                               const std::vector<DelaySchedule>& schedules, experts::ExpertKind expert,
                               const experts::RobdParams& params) {
  if (instances.size() != schedules.size()) {
    throw DimensionError("instances and schedules differ in count", static_cast<int>(schedules.size()));
  }
  TrainingSet set{model, {}};
  for (std::size_t i = 0; i < instances.size(); ++i) {
    set.episodes.push_back({instances[i], schedules[i],
                            experts::run_expert(expert, instances[i], model, schedules[i], params)});
  }
  return set;
}

namespace {

using Node = GradientTape::Node;

Vector gather_grad(const GradientTape& tape, const Predictor::Recorded& rec, Eigen::Index size) {
  Vector g(size);
  Eigen::Index o = 0;
  for (Node n : rec.params) {
    const Matrix& m = tape.grad(n);
    g.segment(o, m.size()) = m.reshaped();
    o += m.size();
  }
  return g;
}

Node cost_node(GradientTape& tape, const std::vector<Node>& xs, const ProblemInstance& inst, const CostModel& model) {
  auto unpack = [](const GradientTape::Inputs& in) {
    std::vector<ActionVector> a;
    for (const Matrix* m : in) a.emplace_back(m->col(0));
    return a;
  };
  return tape.custom(
      xs, [&inst, &model, unpack](const GradientTape::Inputs& in) {
        return Matrix::Constant(1, 1, eval_cost(inst, model, unpack(in)).total);
      },
      [&inst, &model, unpack](const GradientTape::Inputs& in, const Matrix&, const Matrix& go,
                              std::vector<Matrix>& gi) {
        const auto g = cost_gradient(inst, model, unpack(in));
        for (std::size_t k = 0; k < gi.size(); ++k) gi[k].col(0) += go(0, 0) * g[k];
      },
      "cost");
}

struct ProjectionState {
  rcl::StepConstraint constraint;
  Vector action;
  double mu = 0.0;
  bool projected = false;
};

}  // namespace

LossAndGrad episode_loss_oblivious(const Predictor& predictor, const Episode& ep, const CostModel& model) {
  GradientTape tape;
  const auto rec = predictor.record(tape, ep.instance, ep.schedule);
  const Node loss = cost_node(tape, rec.advice, ep.instance, model);
  tape.backward(loss);
  return {tape.value(loss)(0, 0), gather_grad(tape, rec, predictor.num_params())};
}

LossAndGrad episode_loss_aware(const Predictor& predictor, const Episode& ep, const CostModel& model,
                               const rcl::RclConfig& config) {
  config.validate();
  const ProblemInstance& inst = ep.instance;
  const DelaySchedule& sched = ep.schedule;
  const std::vector<ActionVector>& expert = ep.expert.actions;
  const int p = model.memory();

  GradientTape tape;
  const auto rec = predictor.record(tape, inst, sched);
  std::vector<Node> xs;
  for (int t = 1; t <= inst.horizon(); ++t) {
    std::vector<Node> inputs{rec.advice[static_cast<std::size_t>(t - 1)]};
    inputs.insert(inputs.end(), xs.begin(), xs.end());
    auto st = std::make_shared<ProjectionState>();

    auto forward = [&inst, &model, &sched, &expert, config, t, st](const GradientTape::Inputs& in) {
      std::vector<ActionVector> prefix;
      for (std::size_t k = 1; k < in.size(); ++k) prefix.emplace_back(in[k]->col(0));
      st->constraint = rcl::build_step_constraint(inst, model, sched, config, expert, prefix, t);
      const rcl::StepDecision d = rcl::project(in[0]->col(0), st->constraint, inst.space);
      st->action = d.action;
      st->projected = d.projected;
      st->mu = d.projected ? d.dual_mu : 0.0;
      return Matrix(d.action);
    };

    auto backward = [&inst, &model, &sched, &expert, config, t, p, st](
                        const GradientTape::Inputs& in, const Matrix&, const Matrix& go, std::vector<Matrix>& gi) {
      const Vector abar = go.col(0);
      if (!st->projected) {
        gi[0].col(0) += abar;
        return;
      }
      const KktBlocks blocks = kkt_blocks(st->constraint, st->action, st->mu, &inst.space);
      const ImplicitGrads ig = implicit_grads(blocks);
      const Vector at_abar = ig.d_x_d_advice.transpose() * abar;
      gi[0].col(0) += at_abar;

      std::vector<ActionVector> own;
      for (std::size_t k = 1; k < in.size(); ++k) own.emplace_back(in[k]->col(0));
      own.push_back(st->action);
      const HistorySensitivity hs = history_sensitivity(inst, model, sched, config, expert, own, t);
      const double through_constant = ig.d_x_d_prevcost.dot(abar);
      for (int tau = 1; tau < t; ++tau) gi[static_cast<std::size_t>(tau)].col(0) += through_constant * hs.grad_g[tau - 1];
      const Vector w = st->mu * at_abar;
      for (int i = 1; i <= p && t - i >= 1; ++i) {
        gi[static_cast<std::size_t>(t - i)].col(0) += hs.delta_jacobian[static_cast<std::size_t>(i - 1)].transpose() * w;
      }
    };
    xs.push_back(tape.custom(std::move(inputs), forward, backward, "project"));
  }
  const Node loss = cost_node(tape, xs, inst, model);
  tape.backward(loss);
  return {tape.value(loss)(0, 0), gather_grad(tape, rec, predictor.num_params())};
}

double loss_oblivious(const Predictor& predictor, const TrainingSet& data) {
  if (data.episodes.empty()) throw ConfigError("loss over an empty dataset");
  double sum = 0.0;
  for (const auto& ep : data.episodes) {
    sum += eval_cost(ep.instance, data.model, predictor.forward(ep.instance, ep.schedule)).total;
  }
  return sum / static_cast<double>(data.episodes.size());
}

double loss_aware(const Predictor& predictor, const TrainingSet& data, const rcl::RclConfig& config) {
  if (data.episodes.empty()) throw ConfigError("loss over an empty dataset");
  double sum = 0.0;
  for (const auto& ep : data.episodes) {
    PredictorAdvisor adv(predictor);
    sum += rcl::run_rcl(ep.instance, data.model, ep.schedule, config, ep.expert, adv).trajectory.total;
  }
  return sum / static_cast<double>(data.episodes.size());
}

namespace {

std::vector<LossAndGrad> per_episode(const Predictor& predictor, const TrainingSet& data,
                                     const std::vector<std::size_t>& batch, LossMode mode,
                                     const rcl::RclConfig& config, int jobs) {
  std::vector<LossAndGrad> out(batch.size());
  auto work = [&](std::size_t k) {
    const Episode& ep = data.episodes.at(batch[k]);
    out[k] = mode == LossMode::aware ? episode_loss_aware(predictor, ep, data.model, config)
                                     : episode_loss_oblivious(predictor, ep, data.model);
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), batch.size());
  if (workers <= 1) {
    for (std::size_t k = 0; k < batch.size(); ++k) work(k);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k = w; k < batch.size(); k += workers) work(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

LossAndGrad batch_loss(const Predictor& predictor, const TrainingSet& data, const std::vector<std::size_t>& batch,
                       LossMode mode, const rcl::RclConfig& config, int jobs) {
  if (batch.empty()) throw ConfigError("empty batch");
  const auto parts = per_episode(predictor, data, batch, mode, config, jobs);
  LossAndGrad total{0.0, Vector::Zero(predictor.num_params())};
  for (const auto& part : parts) {
    total.loss += part.loss;
    total.grad += part.grad;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  total.loss *= inv;
  total.grad *= inv;
  return total;
}

TrainResult train(const Predictor& init, const TrainingSet& data, LossMode mode, const TrainHyper& hyper,
                  const rcl::RclConfig& config) {
  if (data.episodes.empty()) throw ConfigError("training set is empty");
  if (hyper.epochs < 0 || hyper.batch < 1) throw ConfigError("epochs must be >= 0 and batch >= 1");
  if (!(hyper.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  const bool adam = hyper.optimizer == "adam";
  if (!adam && hyper.optimizer != "sgd") throw ConfigError("unknown optimizer '" + hyper.optimizer + "' (expected sgd or adam)");
  if (mode == LossMode::aware) config.validate();

  TrainResult res{init, {}};
  Vector w = init.flat();
  Vector m1 = Vector::Zero(w.size());
  Vector m2 = Vector::Zero(w.size());
  long step = 0;
  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(data.episodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> sample_loss(data.episodes.size(), 0.0);

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch));
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                           order.begin() + static_cast<std::ptrdiff_t>(stop));
      res.predictor.set_flat(w);
      const auto parts = per_episode(res.predictor, data, batch, mode, config, hyper.jobs);
      Vector g = Vector::Zero(w.size());
      double batch_sum = 0.0;
      for (std::size_t k = 0; k < parts.size(); ++k) {
        sample_loss[batch[k]] = parts[k].loss;
        batch_sum += parts[k].loss;
        g += parts[k].grad;
      }
      g /= static_cast<double>(parts.size());
      const double batch_mean = batch_sum / static_cast<double>(parts.size());
      if (!std::isfinite(batch_mean) || batch_mean > 1e12 || !g.allFinite()) {
        throw NumericalError("training diverged in epoch " + std::to_string(epoch), batch_mean);
      }
      const double norm = g.norm();
      if (norm > hyper.clip_norm) g *= hyper.clip_norm / norm;
      if (adam) {
        ++step;
        m1 = 0.9 * m1 + 0.1 * g;
        m2 = 0.999 * m2 + 0.001 * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(0.9, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(0.999, static_cast<double>(step));
        w -= hyper.lr * ((m1 / c1).array() / ((m2 / c2).array().sqrt() + 1e-8)).matrix();
      } else {
        w -= hyper.lr * g;
      }
    }
    res.loss_curve.push_back(std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0) /
                             static_cast<double>(sample_loss.size()));
  }
  res.predictor.set_flat(w);
  return res;
}

}  // namespace soco::ml
