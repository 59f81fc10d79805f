#pragma once

#include <Eigen/Dense>
#include <vector>

#include "kindiff/collision.hpp"
#include "kindiff/geometry.hpp"
#include "kindiff/kernel.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

// Mean-zero solutions of L b_i = v_i and L* b*_i = v_i at one cell.
struct CellFredholmSolution {
  Eigen::MatrixXd b;         // V x N, column i solves L b_i = v_i, <b_i> = 0
  Eigen::MatrixXd b_star;    // V x N, column i solves L* b*_i = v_i, <b*_i> = 0
  Eigen::VectorXd residual_b, residual_b_star;  // weighted residual norms per component
  Eigen::VectorXd mean_b, mean_b_star;          // weighted means per component
};

// Solves the constrained systems by augmenting with the weighted-mean row.
// Throws when the operator is rank deficient beyond the constants or when the
// residual exceeds `tol` relative to ||v_i||.
CellFredholmSolution solve_cell(const CollisionMatrices& cm, const VelocityGrid& grid,
                                double tol = 1e-10);

// M_ij = sum_k mu_k b*_i(v_k) v_kj. Also verifies the duality identity
// sum_k mu_k b*_i v_kj == sum_k mu_k v_ki b_j to `duality_tol` (relative).
Eigen::MatrixXd diffusion_matrix(const CellFredholmSolution& sol, const VelocityGrid& grid,
                                 double duality_tol = 1e-11);

// Per-A-cell diffusion matrices plus the solved transport fields.
struct DiffusionField {
  std::vector<int> a_cells;                 // cell ids of the A region, ascending
  std::vector<int> slot_of_cell;            // per cell: index into a_cells, -1 on B
  std::vector<Eigen::MatrixXd> M;           // per A cell
  std::vector<int> table_slot_of_cell;      // per A cell: index into solutions
  std::vector<CellFredholmSolution> solutions;  // one per distinct kernel table
  bool symmetric = false;                   // max asymmetry <= 1e-10
  double max_asymmetry = 0;
  double min_coercivity = 0;                // min eigenvalue of (M+M^T)/2 over cells
  double bound_2ck = 0;                     // the verified entry bound 2 C_K ||v_i|| ||v_j||

  const Eigen::MatrixXd& at_cell(int cell) const { return M[slot_of_cell[cell]]; }
  const CellFredholmSolution& solution_at_cell(int cell) const {
    return solutions[table_slot_of_cell[slot_of_cell[cell]]];
  }
};

// Solves every A cell (one solve per distinct kernel table) and verifies the
// entry bound |M_ij| <= 2 C_K ||v_i|| ||v_j|| and the coercivity bound
// lambda_min((M+M^T)/2) >= beta/(2 C_K) - slack for every cell.
DiffusionField assemble_field(const Kernel& kernel, const Geometry& geom,
                              const VelocityGrid& grid, const KernelMetrics& metrics,
                              double bound_slack = 1e-10);

}  // namespace kindiff
