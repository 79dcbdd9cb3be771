#include "soco_rcl/bench.hpp"
#include "soco_rcl/io.hpp"
#include "soco_rcl/rcl.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace soco::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// OPT costs at round-off level carry no ratio information.
constexpr double kDegenerateOpt = 1e-12;

bool uses_lambda(const std::string& alg) { return alg == "rcl"; }

struct CellSpec {
  std::string algorithm;
  double lambda = 0.0;
};

struct InstanceOutcome {
  double opt = kNaN;
  double expert = kNaN;
  double ml = kNaN;
  bool skipped = false;
  std::vector<double> costs;
  std::vector<double> projected;  ///< projected step counts
  std::vector<std::string> failures;
};

InstanceOutcome evaluate(std::size_t index, const ProblemInstance& inst, const DelaySchedule& sched,
                         const CostModel& model, const SuiteConfig& cfg, const std::vector<CellSpec>& cells,
                         const ml::Predictor* predictor) {
  InstanceOutcome out;
  out.costs.assign(cells.size(), kNaN);
  out.projected.assign(cells.size(), 0.0);
  auto fail = [&](const std::string& what, const std::exception& e) {
    out.failures.push_back("instance " + std::to_string(index) + " " + what + ": " + e.what());
  };

  try {
    out.opt = experts::solve_opt(inst, model).total;
  } catch (const NumericalError& e) {
    fail("opt", e);
    out.skipped = true;
    return out;
  }
  if (!(out.opt > kDegenerateOpt)) {
    out.skipped = true;
    return out;
  }

  const experts::RobdParams params = cfg.robd ? *cfg.robd : experts::RobdParams::tuned(model);
  const experts::ExpertKind kind = cfg.expert ? *cfg.expert : experts::default_expert(sched);
  std::optional<experts::ExpertTrace> expert;
  try {
    expert = experts::run_expert(kind, inst, model, sched, params);
    out.expert = expert->total();
  } catch (const NumericalError& e) {
    fail("expert", e);
  }
  std::vector<ActionVector> advice;
  if (predictor != nullptr) {
    advice = predictor->forward(inst, sched);
    out.ml = eval_cost(inst, model, advice).total;
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    const std::string& alg = cells[c].algorithm;
    try {
      if (alg == "opt") {
        out.costs[c] = out.opt;
      } else if (alg == "expert") {
        out.costs[c] = out.expert;
      } else if (alg == "hitmin") {
        out.costs[c] = experts::run_hitmin(inst, model, sched).total();
      } else if (alg == "robd") {
        if (sched.max_delay > 0) {
          const auto subs = noisy_predictions(inst, cfg.prediction_error, cfg.seed + index);
          out.costs[c] = experts::run_robd(inst, model, sched, params, &subs).total();
        } else {
          out.costs[c] = experts::run_robd(inst, model, sched, params).total();
        }
      } else if (alg == "irobd") {
        out.costs[c] = experts::run_irobd(inst, model, sched, params).total();
      } else if (alg == "ml") {
        out.costs[c] = out.ml;
      } else if (alg == "rcl") {
        if (!expert) continue;
        rcl::RclConfig rc = rcl::RclConfig::with_lambda(cells[c].lambda);
        if (cfg.lambda0) rc.lambda0 = *cfg.lambda0;
        rcl::FixedAdvisor adv(advice);
        const rcl::RclResult r = rcl::run_rcl(inst, model, sched, rc, *expert, adv);
        out.costs[c] = r.trajectory.total;
        out.projected[c] = static_cast<double>(
            std::count_if(r.decisions.begin(), r.decisions.end(), [](const auto& d) { return d.projected; }));
      }
    } catch (const NumericalError& e) {
      std::ostringstream what;
      what << alg;
      if (uses_lambda(alg)) what << " lambda " << format_double(cells[c].lambda);
      fail(what.str(), e);
    }
  }
  return out;
}

}  // namespace

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names{"opt", "expert", "hitmin", "robd", "irobd", "ml", "rcl"};
  return names;
}

const CellReport& BenchReport::cell(const std::string& algorithm, double lambda) const {
  const std::string a = lower(algorithm);
  for (const auto& c : cells) {
    if (c.algorithm == a && (!uses_lambda(a) || c.lambda == lambda)) return c;
  }
  throw ConfigError("report has no cell for " + algorithm);
}

BenchReport run_suite(const std::vector<ProblemInstance>& instances, const std::vector<DelaySchedule>& schedules,
                      const CostModel& model, const SuiteConfig& config, const ml::Predictor* predictor) {
  if (instances.size() != schedules.size()) {
    throw DimensionError("instances and schedules differ in count", static_cast<int>(schedules.size()));
  }
  std::vector<CellSpec> cells;
  for (const auto& raw : config.algorithms) {
    const std::string alg = lower(raw);
    const auto& names = algorithm_names();
    if (std::find(names.begin(), names.end(), alg) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw ConfigError("unknown algorithm '" + raw + "' (valid: " + list + ")");
    }
    if ((alg == "ml" || alg == "rcl") && predictor == nullptr) {
      throw ConfigError("algorithm '" + alg + "' needs a predictor checkpoint");
    }
    if (uses_lambda(alg)) {
      if (config.lambdas.empty()) throw ConfigError("rcl needs at least one lambda");
      for (double l : config.lambdas) {
        if (!(l > 0.0)) throw ConfigError("lambda values must be > 0");
        if (config.lambda0 && !(*config.lambda0 > 0.0 && *config.lambda0 < l)) {
          throw ConfigError("lambda0 must lie in (0, lambda)");
        }
        cells.push_back({alg, l});
      }
    } else {
      cells.push_back({alg, 0.0});
    }
  }
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (auto v = validate_delay(schedules[i], instances[i].horizon())) {
      throw ConfigError("instance " + std::to_string(i) + ": invalid delay schedule (" + v->reason + ")");
    }
  }

  const std::size_t count = instances.size();
  std::vector<InstanceOutcome> outcomes(count);
  auto work = [&](std::size_t i) {
    outcomes[i] = evaluate(i, instances[i], schedules[i], model, config, cells, predictor);
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(config.jobs, 1)), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BenchReport report;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& o = outcomes[i];
    report.opt_costs.push_back(o.opt);
    report.expert_costs.push_back(o.expert);
    if (predictor != nullptr) report.ml_costs.push_back(o.ml);
    if (o.skipped) report.skipped.push_back(i);
    report.failures.insert(report.failures.end(), o.failures.begin(), o.failures.end());
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellReport cell;
    cell.algorithm = cells[c].algorithm;
    cell.lambda = cells[c].lambda;
    double sum = 0.0;
    double worst = kNaN;
    double projected = 0.0;
    double steps = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < count; ++i) {
      const auto& o = outcomes[i];
      const double cost = o.skipped ? kNaN : o.costs[c];
      const double ratio = cost / o.opt;
      cell.costs.push_back(cost);
      cell.ratios.push_back(o.skipped ? kNaN : ratio);
      if (o.skipped) continue;
      if (!std::isfinite(ratio)) {
        ++cell.failures;
        continue;
      }
      sum += ratio;
      worst = used == 0 ? ratio : std::max(worst, ratio);
      ++used;
      projected += o.projected[c];
      steps += instances[i].horizon();
    }
    cell.avg = used > 0 ? sum / static_cast<double>(used) : kNaN;
    cell.cr = worst;
    cell.frac_projected = steps > 0.0 ? projected / steps : 0.0;
    report.cells.push_back(std::move(cell));
  }
  return report;
}

void write_report_csv(const std::filesystem::path& path, const BenchReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "algorithm,lambda,AVG,CR,frac_projected\n";
  for (const auto& c : report.cells) {
    out << c.algorithm << ',' << format_double(c.lambda) << ',' << format_double(c.avg) << ',' << format_double(c.cr)
        << ',' << format_double(c.frac_projected) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_report_json(const std::filesystem::path& path, const BenchReport& report) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  auto nums = [&](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
  };
  json doc;
  doc["cells"] = json::array();
  for (const auto& c : report.cells) {
    doc["cells"].push_back({{"algorithm", c.algorithm},
                            {"lambda", c.lambda},
                            {"AVG", num(c.avg)},
                            {"CR", num(c.cr)},
                            {"frac_projected", c.frac_projected},
                            {"failures", c.failures},
                            {"ratios", nums(c.ratios)}});
  }
  doc["opt_costs"] = nums(report.opt_costs);
  doc["expert_costs"] = nums(report.expert_costs);
  if (!report.ml_costs.empty()) doc["ml_costs"] = nums(report.ml_costs);
  doc["skipped"] = report.skipped;
  doc["failures"] = report.failures;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_histogram_csv(const std::filesystem::path& path, const CellReport& cell, double bin_width) {
  if (!(bin_width > 0.0)) throw ConfigError("histogram bin width must be > 0");
  std::vector<double> r;
  for (double x : cell.ratios) {
    if (std::isfinite(x)) r.push_back(x);
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "bin_left,count\n";
  if (!r.empty()) {
    const auto [mn, mx] = std::minmax_element(r.begin(), r.end());
    const long first = static_cast<long>(std::floor(*mn / bin_width));
    const long last = static_cast<long>(std::floor(*mx / bin_width));
    std::vector<long> counts(static_cast<std::size_t>(last - first + 1), 0);
    for (double x : r) {
      const long b = std::clamp(static_cast<long>(std::floor(x / bin_width)), first, last);
      ++counts[static_cast<std::size_t>(b - first)];
    }
    for (long b = first; b <= last; ++b) {
      out << format_double(static_cast<double>(b) * bin_width) << ',' << counts[static_cast<std::size_t>(b - first)]
          << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_pairs_csv(const std::filesystem::path& path, const BenchReport& report, const CellReport& rcl_cell) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "instance,ratio_vs_expert,ratio_vs_ml\n";
  for (std::size_t i = 0; i < rcl_cell.costs.size(); ++i) {
    const double cost = rcl_cell.costs[i];
    if (!std::isfinite(cost)) continue;
    const double e = i < report.expert_costs.size() ? report.expert_costs[i] : kNaN;
    const double m = i < report.ml_costs.size() ? report.ml_costs[i] : kNaN;
    out << i << ',' << format_double(cost / e) << ',' << format_double(cost / m) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace soco::bench
