#pragma once

#include <Eigen/Dense>

#include "kindiff/velocity_grid.hpp"

namespace kindiff {

// Dense realizations of the collision operator at one cell, acting on velocity
// profiles phi (one value per node):
//   L   phi(v) = a(v) phi(v) - sum_w mu_w k(v,w) phi(w)
//   L*  phi(v) = a*(v) phi(v) - sum_w mu_w k(w,v) phi(w)
// The adjoint is assembled from the transposed kernel, not by transposing L,
// so the weighted-inner-product adjointness below is a genuine check.
struct CollisionMatrices {
  Eigen::MatrixXd L;      // loss-gain operator
  Eigen::MatrixXd L_adj;  // adjoint in the mu-weighted inner product
  Eigen::MatrixXd K;      // gain part, K(v,w) = k(v,w) mu_w
  Eigen::VectorXd a;      // scattering rate a(v)
};

// Assemble from a V x V kernel table k(v,w). Verifies that constants lie in
// both kernels, that L_adj is the mu-adjoint of L, and the gain-norm bound
// ||K|| <= max_v a(v); throws on violation beyond `check_tol`.
CollisionMatrices assemble_collision(const Eigen::MatrixXd& k_table,
                                     const VelocityGrid& grid,
                                     double check_tol = 1e-13);

struct DirichletForm {
  double quadratic = 0;   // <phi, L phi>_mu
  double double_sum = 0;  // (1/2) sum_vw mu_v mu_w k(v,w) (phi(v)-phi(w))^2
};

// Evaluates both sides of the Dirichlet-form identity; callers assert that the
// two routes agree.
DirichletForm dirichlet_form(const CollisionMatrices& cm, const Eigen::MatrixXd& k_table,
                             const VelocityGrid& grid, const Eigen::VectorXd& phi);

}  // namespace kindiff
