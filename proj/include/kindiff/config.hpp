#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "kindiff/geometry.hpp"
#include "kindiff/initial.hpp"
#include "kindiff/kernel.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

// Parsed and validated run configuration. The JSON schema is strict: unknown
// keys anywhere are hard errors, as are out-of-order eps lists and snapshot
// times outside the horizon.
struct RunConfig {
  // geometry
  Eigen::VectorXd box_lo, box_hi;
  std::vector<int> cells_per_axis;
  std::vector<RegionShape> inclusions;

  QuadratureSpec velocity;
  KernelSpec kernel;

  std::vector<double> eps_list;

  double horizon = 0.1;
  std::vector<double> snapshot_times;
  double dt_kinetic_scale = 1.0;
  double dt_diffusion = 0.0;

  InitialField initial;

  std::string mode;          // optional; CLI subcommand takes precedence
  std::string output = "out";
  bool deterministic = false;
  bool force = false;
  double interior_margin = 0.0;
  double weak_ratio = 0.25;
  double weak_abs_threshold = std::numeric_limits<double>::infinity();
  double solve_tol = 1e-10;
  bool use_iterative = false;

  std::string source_text;   // raw config bytes (hashed into metadata)
  std::string source_path;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& path_label);

// Builds the domain objects a run needs; geometry-level cross-field violations
// (inclusion touching the boundary, empty A) surface here.
struct BuiltModel {
  Geometry geom;
  VelocityGrid grid;
  Kernel kernel;
};

BuiltModel build_model(const RunConfig& cfg);

}  // namespace kindiff
