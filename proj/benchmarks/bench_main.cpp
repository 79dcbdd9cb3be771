#include "soco_rcl/bench.hpp"
#include "soco_rcl/experts.hpp"
#include "soco_rcl/rcl.hpp"
#include "soco_rcl/training.hpp"

#include <benchmark/benchmark.h>

using namespace soco;

namespace {

const bench::StressCase& stress_case(int n) {
  static const auto cases = bench::gen_stress_suite(99, 3, 24);
  return cases.at(static_cast<std::size_t>(n == 1 ? 0 : n == 2 ? 1 : 2));
}

}  // namespace

static void BM_Project(benchmark::State& state) {
  const auto& sc = stress_case(static_cast<int>(state.range(0)));
  const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule,
                                          experts::RobdParams::tuned(sc.model));
  const auto cfg = rcl::RclConfig::with_lambda(0.3);
  const int t = 12;
  const std::vector<ActionVector> own(expert.actions.begin(), expert.actions.begin() + (t - 1));
  const auto c = rcl::build_step_constraint(sc.instance, sc.model, sc.schedule, cfg, expert.actions, own, t);
  const Vector advice = sc.instance.space.lower;
  for (auto _ : state) benchmark::DoNotOptimize(rcl::project(advice, c, sc.instance.space));
}
BENCHMARK(BM_Project)->Arg(1)->Arg(2)->Arg(4);

static void BM_RunRcl(benchmark::State& state) {
  const auto& sc = stress_case(static_cast<int>(state.range(0)));
  const auto expert = experts::run_expert(experts::default_expert(sc.schedule), sc.instance, sc.model, sc.schedule,
                                          experts::RobdParams::tuned(sc.model));
  for (auto _ : state) {
    rcl::UniformRandomAdvisor adv(1);
    benchmark::DoNotOptimize(rcl::run_rcl(sc.instance, sc.model, sc.schedule, rcl::RclConfig::with_lambda(0.5), expert, adv));
  }
}
BENCHMARK(BM_RunRcl)->Arg(1)->Arg(2)->Arg(4);

static void BM_SolveOptBanded(benchmark::State& state) {
  const auto windows = bench::gen_synthetic(1, bench::Family::sinusoid, 1, static_cast<int>(state.range(0)), 2);
  const auto ds = bench::build_ev_dataset(windows, bench::EvConfig::identity(2));
  for (auto _ : state) benchmark::DoNotOptimize(experts::solve_opt(ds.instances[0], ds.model));
}
BENCHMARK(BM_SolveOptBanded)->Arg(24)->Arg(96)->Arg(384);

static void BM_SolveOptDrone(benchmark::State& state) {
  auto sc = bench::gen_stress_suite(7, 37, 24).back();  // variant 2, p = 1: drone memory
  for (auto _ : state) benchmark::DoNotOptimize(experts::solve_opt(sc.instance, sc.model));
}
BENCHMARK(BM_SolveOptDrone);

static void BM_TrainStep(benchmark::State& state) {
  const bool aware = state.range(0) == 1;
  const auto windows = bench::gen_synthetic(2, bench::Family::random_walk, 50, 24, 1);
  const auto ds = bench::build_ev_dataset(windows, bench::EvConfig::identity(1));
  const std::vector<DelaySchedule> scheds(ds.instances.size(), DelaySchedule::no_delay(24));
  const auto data = ml::TrainingSet::build(ds.model, ds.instances, scheds, experts::ExpertKind::robd,
                                           experts::RobdParams::tuned(ds.model));
  const ml::Predictor pred({1, 1, 1, 0, 8}, 3);
  std::vector<std::size_t> batch(data.episodes.size());
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i] = i;
  const auto mode = aware ? ml::LossMode::aware : ml::LossMode::oblivious;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ml::batch_loss(pred, data, batch, mode, rcl::RclConfig::with_lambda(1.0)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
