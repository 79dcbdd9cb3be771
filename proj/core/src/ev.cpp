#include "soco_rcl/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace soco::bench {

EvConfig EvConfig::identity(int n) {
  EvConfig c;
  c.A = Matrix::Identity(n, n);
  c.B = Matrix::Identity(n, n);
  c.x_bar = Vector::Zero(n);
  c.x1 = Vector::Zero(n);
  c.a0 = Vector::Zero(n);
  return c;
}

void EvConfig::validate() const {
  const auto n = A.rows();
  if (n == 0 || A.cols() != n || B.rows() != n || B.cols() != n) {
    throw DimensionError("EV config: A and B must be square of matching size", static_cast<int>(n));
  }
  if (x_bar.size() != n || x1.size() != n || a0.size() != n) {
    throw DimensionError("EV config: x_bar, x1 and a0 must match A", static_cast<int>(n));
  }
  if (!(b > 0.0)) throw ConfigError("EV config: b must be positive");
  if (!B.isIdentity(0.0)) throw ConfigError("EV reduction supports only B = I (charging losses ignored)");
}

EvProblem reduce_ev(const std::vector<Vector>& demands, const EvConfig& cfg) {
  cfg.validate();
  const int n = cfg.dim();
  if (demands.empty()) throw DimensionError("EV reduction needs at least one demand", 0);
  EvProblem out;
  Vector acc = Vector::Zero(n);
  Vector drift = cfg.x1;
  for (std::size_t t = 0; t < demands.size(); ++t) {
    if (demands[t].size() != n) throw DimensionError("demand has wrong dimension", static_cast<int>(t + 1));
    acc = cfg.A * acc + demands[t];
    drift = cfg.A * drift;
    out.instance.contexts.push_back(cfg.x_bar - drift + acc);
  }
  out.instance.initial_actions = {cfg.a0};
  if (cfg.space) {
    out.instance.space = *cfg.space;
  } else {
    Vector lo = cfg.a0;
    Vector hi = cfg.a0;
    for (const auto& y : out.instance.contexts) {
      lo = lo.cwiseMin(y);
      hi = hi.cwiseMax(y);
    }
    out.instance.space = ActionSpace{lo, hi};
  }
  out.instance.validate();
  out.model.hitting = std::make_shared<const QuadraticTracking>(0.5 / cfg.b, Matrix::Identity(n, n));
  out.model.switching = LinearMemory::single(cfg.A);
  return out;
}

double battery_objective(const EvProblem& problem, const EvConfig& cfg, const std::vector<ActionVector>& actions) {
  const auto& inst = problem.instance;
  if (static_cast<int>(actions.size()) != inst.horizon()) {
    throw DimensionError("action count differs from horizon", static_cast<int>(actions.size()));
  }
  double total = 0.0;
  Vector prev = inst.initial_actions.back();
  for (int t = 1; t <= inst.horizon(); ++t) {
    const Vector& a = actions[t - 1];
    total += (a - inst.context(t)).squaredNorm() / cfg.b + (a - cfg.A * prev).squaredNorm();
    prev = a;
  }
  return total;
}

std::vector<DemandWindow> ingest_demand_csv(const std::filesystem::path& path, int window, int stride) {
  if (window < 2 || stride < 1) throw ConfigError("demand windows need window >= 2 and stride >= 1");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open demand file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header row");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  auto lower = [](std::string s) {
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\r' || c == '"'; }), s.end());
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  };
  const std::string first = header.empty() ? "" : lower(header.front());
  const std::size_t skip = (first == "t" || first == "time" || first == "hour" || first == "timestamp") ? 1 : 0;
  if (header.size() <= skip) throw IoError(path.string() + ": no demand columns");
  const auto n = static_cast<Eigen::Index>(header.size() - skip);

  std::vector<Vector> rows;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw IoError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                    " cells, expected " + std::to_string(header.size()));
    }
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::string& c = cells[static_cast<std::size_t>(i) + skip];
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      const std::string rest = lower(c.substr(std::min(used, c.size())));
      if (used == 0 || !rest.empty() || !std::isfinite(x)) {
        throw IoError(path.string() + ": non-numeric cell '" + c + "' on row " + std::to_string(row));
      }
      v[i] = x;
    }
    rows.push_back(std::move(v));
  }

  std::vector<DemandWindow> out;
  for (std::size_t start = 0; start + static_cast<std::size_t>(window) <= rows.size(); start += static_cast<std::size_t>(stride)) {
    DemandWindow w;
    w.initial = rows[start];
    w.demands.assign(rows.begin() + static_cast<std::ptrdiff_t>(start + 1),
                     rows.begin() + static_cast<std::ptrdiff_t>(start + static_cast<std::size_t>(window)));
    out.push_back(std::move(w));
  }
  return out;
}

EvDataset build_ev_dataset(const std::vector<DemandWindow>& windows, const EvConfig& cfg) {
  EvDataset ds;
  if (windows.empty()) {
    ds.model = reduce_ev({Vector::Zero(cfg.dim())}, cfg).model;
    return ds;
  }
  double scale = 0.0;
  for (const auto& w : windows) {
    EvConfig c = cfg;
    c.a0 = w.initial;
    EvProblem p = reduce_ev(w.demands, c);
    for (const auto& y : p.instance.contexts) scale = std::max(scale, y.cwiseAbs().maxCoeff());
    scale = std::max(scale, p.instance.initial_actions.front().cwiseAbs().maxCoeff());
    if (ds.instances.empty()) ds.model = p.model;
    ds.instances.push_back(std::move(p.instance));
  }
  if (scale == 0.0) scale = 1.0;
  ds.scale = scale;
  const int n = cfg.dim();
  for (auto& inst : ds.instances) {
    for (auto& y : inst.contexts) y /= scale;
    for (auto& x : inst.initial_actions) x /= scale;
    inst.space = ActionSpace::box(n, 0.0, 1.0);
  }
  return ds;
}

}  // namespace soco::bench
