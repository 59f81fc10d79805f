#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <vector>

#include "kindiff/geometry.hpp"
#include "kindiff/initial.hpp"
#include "kindiff/kernel.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

// Phase-space state: f over (cell, velocity node), flattened cell-major.
struct KineticState {
  double t = 0;
  double eps = 0;
  Eigen::VectorXd f;

  double at(int cell, int k, int V) const { return f[cell * V + k]; }
};

struct KineticOptions {
  std::optional<double> dt;    // explicit step; else dt_scale * default
  double dt_scale = 1.0;       // default dt is min(eps*h_min, eps^2/max_a)/2
  double solve_tol = 1e-10;    // relative residual required of each implicit solve
  bool use_iterative = false;  // BiCGSTAB instead of the prefactored direct solve
  int max_iterations = 5000;
};

struct StepDiagnostics {
  double t = 0;
  double mass = 0;
  double outflow_rate = 0;           // (1/eps) boundary outflux, nonnegative
  double mass_balance_residual = 0;  // relative defect of mass change vs outflow
  double l2_sq = 0;                  // sum_x vol <f^2>
  double entropy_production = 0;     // sum_x vol <<k_eps q^2>>, q = (f(v)-f(w))/eps
  double entropy_defect = 0;         // l2^{n+1} + dt*production - l2^n (<= 0)
  double solve_residual = 0;
};

struct KineticRunResult {
  std::vector<KineticState> snapshots;
  std::vector<StepDiagnostics> steps;
  double q_entropy_integral = 0;  // sum over steps of dt * entropy_production
  bool entropy_ok = true;
  bool mass_ok = true;
};

// Backward-Euler integrator for the scaled kinetic equation
//   d_t f + (1/eps) v.grad_x f + (1/eps^2) L_x f = 0
// with first-order upwind transport and zero inflow on the domain boundary.
// The full implicit operator is solved each step; unconditionally stable and
// dissipative in the weighted L2 norm for any dt.
class KineticSolver {
 public:
  KineticSolver(const Geometry& geom, const VelocityGrid& grid, const Kernel& kernel,
                double eps, KineticOptions opt = {});

  KineticState initial(const InitialField& field, bool strong_mode = false) const;

  double default_dt() const;
  StepDiagnostics step(KineticState& state, double dt);
  KineticRunResult run(const KineticState& start, double horizon,
                       const std::vector<double>& snapshot_times);

  Eigen::VectorXd velocity_average(const KineticState& s) const;  // per cell <f>
  Eigen::MatrixXd current(const KineticState& s) const;           // (1/eps)<v f>, nc x N
  Eigen::VectorXd collision_apply(const KineticState& s) const;   // (1/eps) L f
  double mass(const Eigen::VectorXd& f) const;
  double outflow_rate(const Eigen::VectorXd& f) const;
  double weighted_l2_sq(const Eigen::VectorXd& f) const;
  double entropy_production(const Eigen::VectorXd& f) const;
  double cell_entropy_production(const KineticState& s, int cell) const;  // <<k q^2>> at one cell

  const Geometry& geometry() const { return geom_; }
  const VelocityGrid& grid() const { return grid_; }
  double eps() const { return eps_; }
  double entropy_tol() const { return 1e-10; }
  double mass_tol() const { return 1e-12; }

 private:
  void build_system(double dt);

  const Geometry& geom_;
  const VelocityGrid& grid_;
  double eps_;
  KineticOptions opt_;
  int V_, nc_, n_;
  std::vector<Eigen::MatrixXd> eff_tables_;   // effective kernel per distinct (table, region scale)
  std::vector<Eigen::MatrixXd> eff_L_;        // collision matrix per effective table
  std::vector<int> eff_of_cell_;
  double max_rate_ = 0;

  double built_dt_ = -1;
  Eigen::SparseMatrix<double> system_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

}  // namespace kindiff
