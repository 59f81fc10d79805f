#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <vector>

#include "kindiff/fredholm.hpp"
#include "kindiff/geometry.hpp"
#include "kindiff/initial.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

// Density state of the limit problem: one value per A cell plus one merged
// value per inclusion. The reconstructed field is constant on each B_l by
// representation.
struct DiffusionState {
  double t = 0;
  Eigen::VectorXd u;  // size nA + m: A cells first, then inclusion slots
};

struct DiffusionStepDiagnostics {
  double t = 0;
  double energy = 0;            // (1/2) sum m_i u_i^2
  double energy_defect = 0;     // E^{n+1} - E^n + dt * a(u^{n+1}, u^{n+1}), <= 0
  double dirichlet_energy = 0;  // a(u^{n+1}, u^{n+1})
  double incl_flux_residual = 0;  // max_l relative defect of the inclusion flux ODE
  double mass = 0;
  double mass_balance_residual = 0;
};

struct DiffusionRunResult {
  std::vector<DiffusionState> snapshots;
  std::vector<DiffusionStepDiagnostics> steps;
  bool energy_ok = true;
  bool flux_ok = true;
  bool mass_ok = true;
};

// Two-point-flux finite-volume discretization of the limit diffusion problem:
// homogeneous Dirichlet on the domain boundary, harmonic face averaging of the
// axis-diagonal entries of M inside A, and one merged unknown per inclusion.
// The inclusion row divided by |B_l| is the discrete flux ODE for rho_l.
class DiffusionOperator {
 public:
  DiffusionOperator(const Geometry& geom, const DiffusionField& field);

  int n() const { return n_; }
  int n_a() const { return n_a_; }
  const Eigen::SparseMatrix<double>& stiffness() const { return K_; }
  const Eigen::VectorXd& masses() const { return mass_; }
  bool anisotropy_warning() const { return anisotropy_warning_; }

  // rho_A(x) = <f_in(x,.)>, rho_l = inclusion average of the same.
  DiffusionState project_initial(const InitialField& field, const VelocityGrid& grid) const;
  // Same projection applied to an arbitrary per-cell scalar field.
  DiffusionState project_cell_field(const Eigen::VectorXd& per_cell) const;

  Eigen::VectorXd reconstruct(const DiffusionState& s) const;  // per-cell field
  double energy(const DiffusionState& s) const;

  DiffusionStepDiagnostics step(DiffusionState& state, double dt);
  DiffusionRunResult run(const DiffusionState& start, double horizon,
                         const std::vector<double>& snapshot_times, double dt_target);

  double energy_tol() const { return 1e-10; }
  double flux_tol() const { return 1e-12; }

 private:
  void factorize(double dt);

  const Geometry& geom_;
  int n_a_ = 0, m_ = 0, n_ = 0;
  std::vector<int> slot_of_cell_;  // -1 on inclusion cells
  Eigen::SparseMatrix<double> K_;
  Eigen::VectorXd mass_;
  Eigen::VectorXd boundary_t_;  // Dirichlet face transmissibilities per unknown
  bool anisotropy_warning_ = false;

  double built_dt_ = -1;
  Eigen::SparseMatrix<double> system_;
  std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
};

}  // namespace kindiff
