#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kindiff/diffusion.hpp"
#include "kindiff/fredholm.hpp"
#include "kindiff/geometry.hpp"
#include "kindiff/initial.hpp"
#include "kindiff/kernel.hpp"
#include "kindiff/kinetic.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

struct SweepSetup {
  const Geometry* geom = nullptr;
  const VelocityGrid* grid = nullptr;
  const Kernel* kernel = nullptr;
  InitialField initial;
  std::vector<double> eps_list;  // strictly decreasing
  double horizon = 0.1;
  std::vector<double> snapshot_times;  // increasing, within horizon
  double interior_margin = 0.0;        // distance from the domain boundary
  bool force = false;                  // run despite failing hypotheses
  double weak_ratio = 0.25;            // smallest-eps error vs largest-eps error
  double weak_abs_threshold = std::numeric_limits<double>::infinity();
  double dt_kinetic_scale = 1.0;       // multiplies the solver's default dt
  double dt_diffusion = 0.0;           // 0: horizon / 2000
  double solve_tol = 1e-10;
  bool use_iterative = false;
};

// Metrics of one (eps, snapshot-time) pair against the diffusion reference.
struct SnapshotMetrics {
  double eps = 0, t = 0;
  double weak_error = 0;           // || <f_eps> - rho ||_{L2(Omega)}
  double weak_error_interior = 0;  // same, restricted away from the boundary
  double flux_residual = 0;        // || (1/eps)<v f> + M grad rho ||_{L2(A)}
  double flux_identity_max = 0;    // algebraic current identity, relative
  double strong_error = std::numeric_limits<double>::quiet_NaN();
  double strong_error_interior = std::numeric_limits<double>::quiet_NaN();
  double entropy_gap_min = std::numeric_limits<double>::quiet_NaN();
  double entropy_gap_mean = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> flatness;       // per inclusion
  std::vector<double> incl_mean_gap;  // per inclusion: |mean_B f - rho_l|
};

struct EpsRunSummary {
  double eps = 0;
  double q_entropy = 0;  // time-integrated entropy production
  bool entropy_ok = true, mass_ok = true;
  bool uniform_bound_ok = true;   // ||f(t)|| <= ||f_in|| at every snapshot
  bool equicontinuity_ok = true;  // bounded snapshot differences of int rho w dx
  double equicontinuity_max = 0;  // largest observed ratio against the bound
};

struct ConvergenceReport {
  std::vector<double> eps_list;
  std::vector<double> times;
  std::vector<SnapshotMetrics> rows;  // eps-major, time-minor
  std::vector<EpsRunSummary> runs;
  HypothesisReport hypotheses;
  bool field_symmetric = false;

  bool weak_pass = false;
  bool inclusion_pass = false;
  bool strong_pass = false;
  bool strong_ran = false;
  bool inclusion_ran = false;
  bool flux_identity_ok = false;
  bool invariants_ok = false;  // entropy + mass + flux identity across all runs

  const SnapshotMetrics& at(int eps_idx, int time_idx) const {
    return rows[eps_idx * times.size() + time_idx];
  }
};

// Runs the full eps sweep once and fills every applicable section of the
// report (weak always; inclusion metrics when inclusions exist; strong
// diagnostics when M is symmetric and the data is admissible for them).
ConvergenceReport run_sweep(const SweepSetup& setup);

// The three study entry points share the sweep and differ in their
// preconditions and verdicts; each refuses (throws) when its hypotheses fail
// and `force` is not set.
ConvergenceReport weak_study(const SweepSetup& setup);
ConvergenceReport inclusion_study(const SweepSetup& setup);
ConvergenceReport strong_study(const SweepSetup& setup);

// Diagnostics-grade discrete gradient of a reconstructed density field:
// central differences where both axis neighbors are A cells, one-sided near
// region interfaces and the domain boundary.
Eigen::MatrixXd density_gradient(const Geometry& geom, const Eigen::VectorXd& per_cell);

}  // namespace kindiff
