#include "soco_rcl_cli/cli.hpp"

#include "soco_rcl/bench.hpp"
#include "soco_rcl/io.hpp"
#include "soco_rcl/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace soco::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  try {
    json cfg = json::parse(in);
    if (!cfg.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
}

/// Top-level keys overlaid with the subcommand's own section.
json section(const json& cfg, const std::string& name) {
  json out = json::object();
  for (const auto& [k, v] : cfg.items()) {
    if (!v.is_object()) out[k] = v;
  }
  if (cfg.contains(name) && cfg[name].is_object()) {
    for (const auto& [k, v] : cfg[name].items()) out[k] = v;
  }
  return out;
}

/// Fills `dst` from the config when the flag was not given.
template <class T>
void merge(T& dst, const CLI::Option* flag, const json& sec, const char* key) {
  if (flag->count() > 0 || !sec.contains(key)) return;
  try {
    dst = sec.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::uint64_t env_seed() {
  const char* s = std::getenv("SOCO_RCL_SEED");
  if (s == nullptr || *s == '\0') return 0;
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string("SOCO_RCL_SEED is not an unsigned integer: ") + s);
  }
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  int jobs = 1;
  CLI::Option* seed_flag = nullptr;
  CLI::Option* jobs_flag = nullptr;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON config file; flags override its values");
    seed_flag = app->add_option("--seed", seed, "global seed (fallback: SOCO_RCL_SEED)");
    jobs_flag = app->add_option("--jobs", jobs, "worker threads; 1 is reproducible")->check(CLI::PositiveNumber);
  }

  json resolve(const std::string& name) {
    const json sec = section(load_config(config), name);
    if (seed_flag->count() == 0) seed = sec.contains("seed") ? sec["seed"].get<std::uint64_t>() : env_seed();
    merge(jobs, jobs_flag, sec, "jobs");
    if (jobs < 1) throw ConfigError("jobs must be >= 1");
    return sec;
  }
};

struct Dataset {
  std::vector<ProblemInstance> instances;
  std::vector<DelaySchedule> schedules;
  CostModel model;
};

Dataset load_dataset(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--data is required");
  if (!fs::is_directory(dir)) throw IoError("data directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no instance files in " + dir);
  Dataset ds;
  for (std::size_t i = 0; i < files.size(); ++i) {
    InstanceBundle b = read_instance(files[i]);
    if (i == 0) ds.model = b.model.build(b.instance.dim());
    if (b.instance.memory() != ds.model.memory() || (i > 0 && b.instance.dim() != ds.instances.front().dim())) {
      throw ConfigError(files[i].string() + ": dimension or memory differs from the first instance");
    }
    ds.instances.push_back(std::move(b.instance));
    ds.schedules.push_back(std::move(b.schedule));
  }
  return ds;
}

experts::ExpertKind dataset_expert(const Dataset& ds, const std::string& name) {
  if (!name.empty() && name != "auto") return experts::parse_expert(name);
  for (const auto& s : ds.schedules) {
    if (s.max_delay > 0) return experts::ExpertKind::irobd;
  }
  return experts::ExpertKind::robd;
}

std::string lambda_tag(double l) {
  std::string s = format_double(l);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  Common common;
  std::string family = "random-walk";
  int count = 10;
  int horizon = 24;
  int dim = 1;
  std::string ev;
  int window = 25;
  int stride = 1;
  double b = 10.0;
  int q = 0;
  std::string delay = "identical";
  std::string out = "instances";
  std::vector<CLI::Option*> flags;
};

int cmd_gen(GenArgs& a, std::ostream& out) {
  const json sec = a.common.resolve("gen");
  merge(a.family, a.flags[0], sec, "family");
  merge(a.count, a.flags[1], sec, "count");
  merge(a.horizon, a.flags[2], sec, "horizon");
  merge(a.dim, a.flags[3], sec, "dim");
  merge(a.ev, a.flags[4], sec, "ev");
  merge(a.window, a.flags[5], sec, "window");
  merge(a.stride, a.flags[6], sec, "stride");
  merge(a.b, a.flags[7], sec, "b");
  merge(a.q, a.flags[8], sec, "q");
  merge(a.delay, a.flags[9], sec, "delay");
  merge(a.out, a.flags[10], sec, "out");
  if (a.q < 0) throw ConfigError("q must be >= 0");
  if (a.delay != "identical" && a.delay != "random") throw ConfigError("delay must be identical or random");

  std::vector<bench::DemandWindow> windows;
  int dim = a.dim;
  if (!a.ev.empty()) {
    if (!fs::exists(a.ev)) throw IoError("demand file not found: " + a.ev);
    windows = bench::ingest_demand_csv(a.ev, a.window, a.stride);
    if (!windows.empty()) dim = static_cast<int>(windows.front().initial.size());
  } else {
    windows = bench::gen_synthetic(a.common.seed, bench::parse_family(a.family), a.count, a.horizon, a.dim);
  }
  bench::EvConfig cfg = bench::EvConfig::identity(dim);
  cfg.b = a.b;
  const bench::EvDataset ds = bench::build_ev_dataset(windows, cfg);
  const CostModelSpec spec = CostModelSpec::from_model(ds.model);

  fs::create_directories(a.out);
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const int T = ds.instances[i].horizon();
    InstanceBundle bundle{ds.instances[i], DelaySchedule::no_delay(T), spec};
    if (a.q > 0) {
      bundle.schedule = a.delay == "random" ? DelaySchedule::random(T, a.q, a.common.seed + i)
                                            : DelaySchedule::identical(T, a.q);
    }
    std::ostringstream name;
    name << "instance_" << std::setw(5) << std::setfill('0') << i << ".csv";
    write_instance(fs::path(a.out) / name.str(), bundle);
  }
  out << "wrote " << ds.instances.size() << " instances to " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  std::string data;
  std::string mode = "oblivious";
  double lambda = 0.0;
  double lambda0 = 0.0;
  int epochs = 140;
  int batch = 50;
  double lr = 1e-3;
  std::string optimizer = "sgd";
  double clip = 10.0;
  int hidden = 8;
  std::string expert = "auto";
  std::string init;
  std::string out = "predictor.bin";
  std::string loss_csv;
  std::vector<CLI::Option*> flags;
};

int cmd_train(TrainArgs& a, std::ostream& out) {
  const json sec = a.common.resolve("train");
  merge(a.data, a.flags[0], sec, "data");
  merge(a.mode, a.flags[1], sec, "mode");
  merge(a.lambda, a.flags[2], sec, "lambda");
  merge(a.lambda0, a.flags[3], sec, "lambda0");
  merge(a.epochs, a.flags[4], sec, "epochs");
  merge(a.batch, a.flags[5], sec, "batch");
  merge(a.lr, a.flags[6], sec, "lr");
  merge(a.optimizer, a.flags[7], sec, "optimizer");
  merge(a.clip, a.flags[8], sec, "clip");
  merge(a.hidden, a.flags[9], sec, "hidden");
  merge(a.expert, a.flags[10], sec, "expert");
  merge(a.init, a.flags[11], sec, "init");
  merge(a.out, a.flags[12], sec, "out");
  merge(a.loss_csv, a.flags[13], sec, "loss_csv");

  const ml::LossMode mode = ml::parse_mode(a.mode);
  const bool have_lambda = a.flags[2]->count() > 0 || sec.contains("lambda");
  if (mode == ml::LossMode::aware && !have_lambda) throw ConfigError("--mode aware requires --lambda");
  rcl::RclConfig rc = rcl::RclConfig::with_lambda(have_lambda ? a.lambda : 1.0);
  if (a.flags[3]->count() > 0 || sec.contains("lambda0")) rc.lambda0 = a.lambda0;
  if (mode == ml::LossMode::aware) rc.validate();

  const Dataset ds = load_dataset(a.data);
  int q = 0;
  for (const auto& s : ds.schedules) q = std::max(q, s.max_delay);
  const ml::PredictorShape shape{ds.instances.front().dim(), ds.instances.front().context_dim(), ds.model.memory(), q,
                                 a.hidden};
  ml::Predictor init = a.init.empty() ? ml::Predictor(shape, a.common.seed) : ml::Predictor::load(a.init);
  if (init.shape().n != shape.n || init.shape().m != shape.m || init.shape().p != shape.p || init.shape().q < q) {
    throw ConfigError("initial checkpoint shape does not match the data");
  }
  const auto kind = dataset_expert(ds, a.expert);
  const auto set = ml::TrainingSet::build(ds.model, ds.instances, ds.schedules, kind,
                                          experts::RobdParams::tuned(ds.model));
  ml::TrainHyper hyper;
  hyper.epochs = a.epochs;
  hyper.batch = a.batch;
  hyper.lr = a.lr;
  hyper.seed = a.common.seed;
  hyper.optimizer = a.optimizer;
  hyper.clip_norm = a.clip;
  hyper.jobs = a.common.jobs;
  const ml::TrainResult res = ml::train(init, set, mode, hyper, rc);

  res.predictor.save(a.out, ml::to_string(mode));
  const std::string loss_path = a.loss_csv.empty() ? a.out + ".loss.csv" : a.loss_csv;
  std::ofstream lc(loss_path);
  if (!lc) throw IoError("cannot open " + loss_path + " for writing");
  lc << "epoch,loss\n";
  for (std::size_t e = 0; e < res.loss_curve.size(); ++e) lc << e + 1 << ',' << format_double(res.loss_curve[e]) << '\n';
  if (!lc) throw IoError("failed writing " + loss_path);

  const double final_loss = mode == ml::LossMode::aware ? ml::loss_aware(res.predictor, set, rc)
                                                        : ml::loss_oblivious(res.predictor, set);
  out << "final train loss: " << format_double(final_loss) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  Common common;
  std::string data;
  std::string checkpoint;
  std::vector<std::string> algorithms;
  std::vector<double> lambdas{1.0};
  double lambda0 = 0.0;
  std::string expert = "auto";
  std::string out = "report";
  double bin = 0.05;
  std::vector<CLI::Option*> flags;
};

int cmd_eval(EvalArgs& a, std::ostream& out, std::ostream& err) {
  const json sec = a.common.resolve("eval");
  merge(a.data, a.flags[0], sec, "data");
  merge(a.checkpoint, a.flags[1], sec, "checkpoint");
  merge(a.algorithms, a.flags[2], sec, "algorithms");
  merge(a.lambdas, a.flags[3], sec, "lambdas");
  merge(a.lambda0, a.flags[4], sec, "lambda0");
  merge(a.expert, a.flags[5], sec, "expert");
  merge(a.out, a.flags[6], sec, "out");
  merge(a.bin, a.flags[7], sec, "bin");

  bench::SuiteConfig cfg;
  if (a.algorithms.empty()) {
    cfg.algorithms = a.checkpoint.empty() ? std::vector<std::string>{"opt", "expert"}
                                          : std::vector<std::string>{"opt", "expert", "ml", "rcl"};
  } else {
    cfg.algorithms = a.algorithms;
  }
  // Validate names before touching any file.
  for (const auto& name : cfg.algorithms) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    const auto& names = bench::algorithm_names();
    if (std::find(names.begin(), names.end(), lower) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      throw ConfigError("unknown algorithm '" + name + "' (valid: " + list + ")");
    }
  }
  cfg.lambdas = a.lambdas;
  if (a.flags[4]->count() > 0 || sec.contains("lambda0")) cfg.lambda0 = a.lambda0;
  cfg.seed = a.common.seed;
  cfg.jobs = a.common.jobs;

  const Dataset ds = load_dataset(a.data);
  if (!a.expert.empty() && a.expert != "auto") cfg.expert = experts::parse_expert(a.expert);
  std::optional<ml::Predictor> pred;
  if (!a.checkpoint.empty()) {
    if (!fs::exists(a.checkpoint)) throw IoError("checkpoint not found: " + a.checkpoint);
    pred = ml::Predictor::load(a.checkpoint);
  }
  const bench::BenchReport report = bench::run_suite(ds.instances, ds.schedules, ds.model, cfg, pred ? &*pred : nullptr);

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  bench::write_report_csv(dir / "report.csv", report);
  bench::write_report_json(dir / "report.json", report);
  for (const auto& cell : report.cells) {
    std::string stem = cell.algorithm;
    if (cell.algorithm == "rcl") stem += "_" + lambda_tag(cell.lambda);
    bench::write_histogram_csv(dir / ("hist_" + stem + ".csv"), cell, a.bin);
    if (cell.algorithm == "rcl" && pred) bench::write_pairs_csv(dir / ("pairs_" + stem + ".csv"), report, cell);
  }

  auto row = [&out](const std::string& a, const std::string& l, const std::string& avg, const std::string& cr,
                    const std::string& fp) {
    out << std::left << std::setw(10) << a << ' ' << std::setw(8) << l << ' ' << std::setw(22) << avg << ' '
        << std::setw(22) << cr << ' ' << fp << "\n";
  };
  row("algorithm", "lambda", "AVG", "CR", "frac_projected");
  for (const auto& c : report.cells) {
    row(c.algorithm, format_double(c.lambda), format_double(c.avg), format_double(c.cr), format_double(c.frac_projected));
  }
  if (!report.skipped.empty()) out << report.skipped.size() << " instances skipped (OPT cost 0)\n";
  for (const auto& f : report.failures) err << "numerical failure: " << f << "\n";
  return report.failures.empty() ? kOk : kNumerical;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  Common common;
  std::string input;
  std::string format = "table";
};

int cmd_report(ReportArgs& a, std::ostream& out) {
  a.common.resolve("report");
  std::ifstream in(a.input);
  if (!in) throw IoError("cannot open report " + a.input);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(a.input + ": " + e.what());
  }
  auto num = [](const json& v) { return v.is_null() ? std::string("nan") : format_double(v.get<double>()); };
  if (a.format == "csv") {
    out << "algorithm,lambda,AVG,CR,frac_projected\n";
  } else {
    out << "| algorithm | lambda | AVG | CR | frac_projected |\n|---|---|---|---|---|\n";
  }
  for (const auto& c : doc.at("cells")) {
    const std::string row[] = {c.at("algorithm").get<std::string>(), num(c.at("lambda")), num(c.at("AVG")),
                               num(c.at("CR")), num(c.at("frac_projected"))};
    if (a.format == "csv") {
      out << row[0] << ',' << row[1] << ',' << row[2] << ',' << row[3] << ',' << row[4] << "\n";
    } else {
      out << "| " << row[0] << " | " << row[1] << " | " << row[2] << " | " << row[3] << " | " << row[4] << " |\n";
    }
  }
  const auto failures = doc.value("failures", json::array());
  if (!failures.empty()) out << failures.size() << " numerical failures recorded\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robustness-constrained learning for smoothed online optimization"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate instance files");
  gen.common.add(g);
  gen.flags = {g->add_option("--family", gen.family, "random-walk | sinusoid | adversarial-spike"),
               g->add_option("--count", gen.count, "number of synthetic instances"),
               g->add_option("--horizon", gen.horizon, "steps per instance"),
               g->add_option("--dim", gen.dim, "battery groups"),
               g->add_option("--ev", gen.ev, "hourly demand CSV to window instead of synthetic data"),
               g->add_option("--window", gen.window, "rows per demand window"),
               g->add_option("--stride", gen.stride, "rows between window starts"),
               g->add_option("--b", gen.b, "switching weight b"),
               g->add_option("--q", gen.q, "maximum feedback delay"),
               g->add_option("--delay", gen.delay, "identical | random"),
               g->add_option("--out", gen.out, "output directory")};

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train the recurrent predictor");
  train.common.add(t);
  train.flags = {t->add_option("--data", train.data, "instance directory"),
                 t->add_option("--mode", train.mode, "oblivious | aware"),
                 t->add_option("--lambda", train.lambda, "robustness budget (aware mode)"),
                 t->add_option("--lambda0", train.lambda0, "inner split, default sqrt(1+lambda)-1"),
                 t->add_option("--epochs", train.epochs, "training epochs"),
                 t->add_option("--batch", train.batch, "batch size"),
                 t->add_option("--lr", train.lr, "learning rate"),
                 t->add_option("--optimizer", train.optimizer, "sgd | adam"),
                 t->add_option("--clip", train.clip, "gradient norm clip"),
                 t->add_option("--hidden", train.hidden, "units per hidden layer"),
                 t->add_option("--expert", train.expert, "auto | hitmin | robd | irobd"),
                 t->add_option("--init", train.init, "checkpoint to start from"),
                 t->add_option("--out", train.out, "checkpoint path"),
                 t->add_option("--loss-csv", train.loss_csv, "loss curve path (default <out>.loss.csv)")};

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate algorithms against OPT");
  eval.common.add(e);
  eval.flags = {e->add_option("--data", eval.data, "instance directory"),
                e->add_option("--checkpoint", eval.checkpoint, "predictor checkpoint (needed for ml, rcl)"),
                e->add_option("--algorithms", eval.algorithms, "comma list of opt, expert, hitmin, robd, irobd, ml, rcl")
                    ->delimiter(','),
                e->add_option("--lambdas", eval.lambdas, "comma list of lambda values for rcl")->delimiter(','),
                e->add_option("--lambda0", eval.lambda0, "inner split override"),
                e->add_option("--expert", eval.expert, "auto | hitmin | robd | irobd"),
                e->add_option("--out", eval.out, "report directory"),
                e->add_option("--bin", eval.bin, "histogram bin width")};

  ReportArgs report;
  auto* r = app.add_subcommand("report", "print a report table");
  report.common.add(r);
  r->add_option("--input", report.input, "report.json written by eval")->required();
  r->add_option("--format", report.format, "table | csv")->check(CLI::IsMember({"table", "csv"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& ex) {
    err << "usage error: " << ex.what() << "\n";
    for (auto* sub : app.get_subcommands()) err << sub->help();
    return kUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen, out);
    if (t->parsed()) return cmd_train(train, out);
    if (e->parsed()) return cmd_eval(eval, out, err);
    return cmd_report(report, out);
  } catch (const IoError& ex) {
    err << "I/O error: " << ex.what() << "\n";
    return kIo;
  } catch (const NumericalError& ex) {
    err << "numerical failure: " << ex.what() << "\n";
    return kNumerical;
  } catch (const Error& ex) {
    err << "usage error: " << ex.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& ex) {
    err << "I/O error: " << ex.what() << "\n";
    return kIo;
  }
}

}  // namespace soco::cli
