#pragma once

#include "soco_rcl/cost_model.hpp"
#include "soco_rcl/delay.hpp"
#include "soco_rcl/experts.hpp"
#include "soco_rcl/predictor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace soco::bench {

/// Battery model x_{t+1} = A x_t + B u_t - w_t tracked around x_bar.
struct EvConfig {
  Matrix A;
  Matrix B;
  double b = 10.0;
  Vector x_bar;
  Vector x1;
  Vector a0;                           ///< initial action a_0
  std::optional<ActionSpace> space;    ///< default: coordinatewise hull of contexts and a_0

  static EvConfig identity(int n);
  int dim() const { return static_cast<int>(A.rows()); }
  void validate() const;
};

struct EvProblem {
  ProblemInstance instance;
  CostModel model;
};

/// y_t = x_bar - A^t x1 + sum_i A^{t-i} w_i with hitting (1/(2b))||a - y||^2 and
/// delta(a) = A a, so the SOCO cost is half the battery objective.
EvProblem reduce_ev(const std::vector<Vector>& demands, const EvConfig& cfg);

/// sum_t (1/b)||a_t - y_t||^2 + ||a_t - A a_{t-1}||^2.
double battery_objective(const EvProblem& problem, const EvConfig& cfg, const std::vector<ActionVector>& actions);

/// A demand window: the first value seeds the initial action, the rest are w_1..w_T.
struct DemandWindow {
  Vector initial;
  std::vector<Vector> demands;
};

/// Sliding windows over an hourly CSV (header row; one numeric column per
/// battery group; a leading t/time/hour/timestamp column is skipped).
std::vector<DemandWindow> ingest_demand_csv(const std::filesystem::path& path, int window = 25, int stride = 1);

enum class Family { random_walk, sinusoid, adversarial_spike };
Family parse_family(const std::string& name);
std::string to_string(Family family);

/// Deterministic demand windows with values in [lo, hi].
std::vector<DemandWindow> gen_synthetic(std::uint64_t seed, Family family, int count, int horizon, int n,
                                        double lo = 0.0, double hi = 1.0);

struct EvDataset {
  std::vector<ProblemInstance> instances;
  CostModel model;
  double scale = 1.0;  ///< divisor applied to contexts and initial actions
};

/// Reduces every window and rescales jointly so contexts and initial actions
/// lie in [0, 1]; the action box becomes [0, 1]^n.
EvDataset build_ev_dataset(const std::vector<DemandWindow>& windows, const EvConfig& cfg);

struct Contaminated {
  std::vector<ProblemInstance> instances;
  std::vector<std::size_t> modified;  ///< ascending
};

/// Adds N(0, sigma) noise to the contexts of floor(p_c * count) randomly chosen
/// instances and clips them to [0, 1].
Contaminated contaminate(const std::vector<ProblemInstance>& instances, double p_c, double sigma, std::uint64_t seed);

/// Contiguous thirds (train, valid, test).
template <class T>
std::vector<std::vector<T>> split_thirds(const std::vector<T>& items) {
  const std::size_t a = items.size() / 3;
  const std::size_t b = 2 * items.size() / 3;
  return {std::vector<T>(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(a)),
          std::vector<T>(items.begin() + static_cast<std::ptrdiff_t>(a), items.begin() + static_cast<std::ptrdiff_t>(b)),
          std::vector<T>(items.begin() + static_cast<std::ptrdiff_t>(b), items.end())};
}

/// Randomized instance with its own model and delay, for property sweeps.
struct StressCase {
  ProblemInstance instance;
  DelaySchedule schedule;
  CostModel model;
};

/// Cycles n in {1, 2, 4}, p in {1, 2}, q in {0, 1, 3}; memory maps rotate over
/// identity, linear, drone (p = 1) and two-step linear (p = 2).
std::vector<StressCase> gen_stress_suite(std::uint64_t seed, int count, int horizon = 24);

/// Context predictions y_t (1 + u), u ~ U[-err, err], for ROBD under delay.
std::vector<Context> noisy_predictions(const ProblemInstance& instance, double err, std::uint64_t seed);

struct SuiteConfig {
  std::vector<std::string> algorithms{"opt", "expert", "rcl"};
  std::vector<double> lambdas{1.0};
  std::optional<double> lambda0;
  std::optional<experts::ExpertKind> expert;  ///< default: ROBD without delay, iROBD otherwise
  std::optional<experts::RobdParams> robd;    ///< default: RobdParams::tuned
  double prediction_error = 0.15;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// Names accepted in SuiteConfig::algorithms.
const std::vector<std::string>& algorithm_names();

struct CellReport {
  std::string algorithm;
  double lambda = 0.0;  ///< 0 for algorithms without a lambda
  double avg = 0.0;
  double cr = 0.0;
  double frac_projected = 0.0;
  std::vector<double> ratios;  ///< cost / OPT per input instance; NaN when skipped or failed
  std::vector<double> costs;
  std::size_t failures = 0;
};

struct BenchReport {
  std::vector<CellReport> cells;
  std::vector<double> opt_costs;
  std::vector<double> expert_costs;
  std::vector<double> ml_costs;  ///< empty without a predictor
  std::vector<std::size_t> skipped;    ///< instances with OPT cost <= 1e-12
  std::vector<std::string> failures;   ///< numerical failures, one line each

  const CellReport& cell(const std::string& algorithm, double lambda = 0.0) const;
};

BenchReport run_suite(const std::vector<ProblemInstance>& instances, const std::vector<DelaySchedule>& schedules,
                      const CostModel& model, const SuiteConfig& config, const ml::Predictor* predictor = nullptr);

/// algorithm,lambda,AVG,CR,frac_projected
void write_report_csv(const std::filesystem::path& path, const BenchReport& report);
void write_report_json(const std::filesystem::path& path, const BenchReport& report);
/// One file per cell: bin_left,count over OPT-normalized ratios.
void write_histogram_csv(const std::filesystem::path& path, const CellReport& cell, double bin_width = 0.05);
/// instance,ratio_vs_expert,ratio_vs_ml for one RCL cell.
void write_pairs_csv(const std::filesystem::path& path, const BenchReport& report, const CellReport& rcl_cell);

}  // namespace soco::bench
