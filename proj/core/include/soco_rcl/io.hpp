#pragma once

#include "soco_rcl/cost_model.hpp"
#include "soco_rcl/delay.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace soco {

/// Serializable description of the built-in cost models.
struct CostModelSpec {
  double scale = 0.05;
  Matrix weight;                    ///< empty means identity
  std::string memory = "identity";  ///< identity | linear | drone
  std::vector<Matrix> blocks;       ///< linear memory A_1..A_p
  double c1 = 0.0;
  double c2 = 0.0;
  double radius = 1.0;

  CostModel build(int dim) const;
  /// Throws ConfigError for evaluator hitting costs, which have no file form.
  static CostModelSpec from_model(const CostModel& model);
};

/// Everything stored for one instance on disk.
struct InstanceBundle {
  ProblemInstance instance;
  DelaySchedule schedule;
  CostModelSpec model;
};

/// Sidecar metadata path: same stem, `.json` extension.
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes `csv` (header t,y1..ym) and its JSON sidecar.
void write_instance(const std::filesystem::path& csv, const InstanceBundle& bundle);
/// Reads and validates an instance pair; IoError on missing files or bad cells.
InstanceBundle read_instance(const std::filesystem::path& csv);

/// Expert or algorithm trace: t, x1..xn, revealed_cost.
void write_trace_csv(const std::filesystem::path& path, const std::vector<ActionVector>& actions,
                     const std::vector<double>& revealed_cost);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace soco
