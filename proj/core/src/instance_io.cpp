#include "soco_rcl/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace soco {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

Vector vector_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix matrix_from(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return Matrix();
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw IoError("ragged matrix in JSON");
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  }
  return m;
}

double parse_cell(const std::string& cell, int row, const std::string& file) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r')) --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw IoError(file + ": non-numeric cell '" + cell + "' on row " + std::to_string(row));
  }
  return v;
}

}  // namespace

CostModel CostModelSpec::build(int dim) const {
  CostModel model;
  const Matrix w = weight.size() == 0 ? Matrix::Identity(dim, dim) : weight;
  if (w.rows() != dim) throw DimensionError("hitting weight does not match action dimension", static_cast<int>(w.rows()));
  model.hitting = std::make_shared<const QuadraticTracking>(scale, w);
  if (memory == "identity") {
    model.switching = std::make_shared<const IdentityMemory>(dim);
  } else if (memory == "linear") {
    model.switching = std::make_shared<const LinearMemory>(blocks);
    if (model.switching->dim() != dim) throw DimensionError("memory blocks do not match action dimension", model.switching->dim());
  } else if (memory == "drone") {
    model.switching = std::make_shared<const DroneMemory>(dim, c1, c2, radius);
  } else {
    throw ConfigError("unknown memory kind '" + memory + "' (expected identity, linear or drone)");
  }
  return model;
}

CostModelSpec CostModelSpec::from_model(const CostModel& model) {
  CostModelSpec spec;
  const auto* quad = dynamic_cast<const QuadraticTracking*>(model.hitting.get());
  if (quad == nullptr) throw ConfigError("only quadratic hitting costs can be serialized");
  spec.scale = quad->scale();
  spec.weight = quad->weight();
  spec.memory = model.switching->kind();
  if (const auto* lin = dynamic_cast<const LinearMemory*>(model.switching.get())) spec.blocks = lin->blocks();
  if (const auto* drone = dynamic_cast<const DroneMemory*>(model.switching.get())) {
    spec.c1 = drone->c1();
    spec.c2 = drone->c2();
    spec.radius = drone->radius();
  }
  return spec;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".json");
  return p;
}

void write_instance(const std::filesystem::path& csv, const InstanceBundle& bundle) {
  const auto& inst = bundle.instance;
  inst.validate();
  std::ofstream out(csv);
  if (!out) throw IoError("cannot open " + csv.string() + " for writing");
  out << "t";
  for (int i = 1; i <= inst.context_dim(); ++i) out << ",y" << i;
  out << "\n";
  for (int t = 1; t <= inst.horizon(); ++t) {
    out << t;
    for (Eigen::Index i = 0; i < inst.context(t).size(); ++i) out << "," << format_double(inst.context(t)[i]);
    out << "\n";
  }
  if (!out) throw IoError("failed writing " + csv.string());

  json meta;
  meta["dim"] = inst.dim();
  meta["p"] = inst.memory();
  meta["horizon"] = inst.horizon();
  meta["initial_actions"] = json::array();
  for (const auto& x : inst.initial_actions) meta["initial_actions"].push_back(to_json(x));
  meta["delay"] = {{"q", bundle.schedule.max_delay}, {"reveal_sets", bundle.schedule.reveal_sets}};
  meta["action_space"] = {{"lower", to_json(inst.space.lower)}, {"upper", to_json(inst.space.upper)}};
  json cm;
  cm["hitting"] = {{"kind", "quadratic"}, {"scale", bundle.model.scale}};
  if (bundle.model.weight.size() != 0) cm["hitting"]["weight"] = to_json(bundle.model.weight);
  cm["memory"] = {{"kind", bundle.model.memory}};
  if (bundle.model.memory == "linear") {
    cm["memory"]["blocks"] = json::array();
    for (const auto& b : bundle.model.blocks) cm["memory"]["blocks"].push_back(to_json(b));
  } else if (bundle.model.memory == "drone") {
    cm["memory"]["c1"] = bundle.model.c1;
    cm["memory"]["c2"] = bundle.model.c2;
    cm["memory"]["radius"] = bundle.model.radius;
  }
  meta["cost_model"] = cm;

  const auto side = sidecar_path(csv);
  std::ofstream mout(side);
  if (!mout) throw IoError("cannot open " + side.string() + " for writing");
  mout << meta.dump(2) << "\n";
  if (!mout) throw IoError("failed writing " + side.string());
}

InstanceBundle read_instance(const std::filesystem::path& csv) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open instance file " + csv.string());
  const auto side = sidecar_path(csv);
  std::ifstream min(side);
  if (!min) throw IoError("cannot open instance metadata " + side.string());

  InstanceBundle b;
  std::string line;
  if (!std::getline(in, line)) throw IoError(csv.string() + ": missing header row");
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(parse_cell(cell, row, csv.string()));
    if (cells.size() < 2) throw IoError(csv.string() + ": row " + std::to_string(row) + " has no context values");
    b.instance.contexts.push_back(Eigen::Map<const Vector>(cells.data() + 1, static_cast<Eigen::Index>(cells.size() - 1)));
  }

  json meta;
  try {
    meta = json::parse(min);
    const int dim = meta.at("dim").get<int>();
    for (const auto& x : meta.at("initial_actions")) b.instance.initial_actions.push_back(vector_from(x));
    if (meta.contains("action_space")) {
      b.instance.space = ActionSpace{vector_from(meta["action_space"].at("lower")),
                                     vector_from(meta["action_space"].at("upper"))};
    } else {
      b.instance.space = ActionSpace::box(dim, 0.0, 1.0);
    }
    const auto& delay = meta.at("delay");
    b.schedule.max_delay = delay.at("q").get<int>();
    if (delay.contains("reveal_sets")) {
      b.schedule.reveal_sets = delay["reveal_sets"].get<std::vector<std::vector<int>>>();
    } else {
      b.schedule = DelaySchedule::identical(static_cast<int>(b.instance.contexts.size()), b.schedule.max_delay);
    }
    if (meta.contains("cost_model")) {
      const auto& cm = meta["cost_model"];
      b.model.scale = cm.at("hitting").value("scale", b.model.scale);
      if (cm["hitting"].contains("weight")) b.model.weight = matrix_from(cm["hitting"]["weight"]);
      b.model.memory = cm.at("memory").value("kind", std::string("identity"));
      if (cm["memory"].contains("blocks")) {
        for (const auto& m : cm["memory"]["blocks"]) b.model.blocks.push_back(matrix_from(m));
      }
      b.model.c1 = cm["memory"].value("c1", 0.0);
      b.model.c2 = cm["memory"].value("c2", 0.0);
      b.model.radius = cm["memory"].value("radius", 1.0);
    }
    if (meta.at("horizon").get<int>() != static_cast<int>(b.instance.contexts.size())) {
      throw DimensionError("horizon in metadata differs from CSV row count", meta["horizon"].get<int>());
    }
    if (meta.at("p").get<int>() != static_cast<int>(b.instance.initial_actions.size())) {
      throw DimensionError("p in metadata differs from number of initial actions", meta["p"].get<int>());
    }
  } catch (const json::exception& e) {
    throw IoError(side.string() + ": " + e.what());
  }
  b.instance.validate();
  if (auto v = validate_delay(b.schedule, b.instance.horizon())) {
    throw ConfigError(side.string() + ": invalid delay schedule at t=" + std::to_string(v->t) +
                      ", tau=" + std::to_string(v->tau) + ": " + v->reason);
  }
  return b;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<ActionVector>& actions,
                     const std::vector<double>& revealed_cost) {
  if (actions.size() != revealed_cost.size()) {
    throw DimensionError("trace: actions and costs differ in length", static_cast<int>(actions.size()));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "t";
  const auto n = actions.empty() ? 0 : actions.front().size();
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  out << ",revealed_cost\n";
  for (std::size_t t = 0; t < actions.size(); ++t) {
    out << t + 1;
    for (Eigen::Index i = 0; i < actions[t].size(); ++i) out << "," << format_double(actions[t][i]);
    out << "," << format_double(revealed_cost[t]) << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace soco
