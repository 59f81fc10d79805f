#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

namespace kindiff {

// Discrete velocity measure: nodes v_k in R^N with strictly positive weights
// summing to one. Immutable after construction; shared freely across threads.
struct VelocityGrid {
  int dim = 0;
  Eigen::MatrixXd nodes;    // V x dim, one node per row
  Eigen::VectorXd weights;  // V, strictly positive, sums to 1

  int size() const { return static_cast<int>(weights.size()); }
  Eigen::VectorXd node(int k) const { return nodes.row(k).transpose(); }
};

struct QuadratureSpec {
  std::string model;  // two_point_1d | uniform_circle | four_point_axes |
                      // tensor_symmetric | sphere_symmetric
  int points = 0;     // uniform_circle: number of nodes (>= 3)
  int dim = 1;        // tensor_symmetric: spatial dimension (1, 2 or 3)
  std::vector<double> speeds;         // tensor_symmetric
  std::vector<double> speed_weights;  // tensor_symmetric, must sum to 1
};

struct Moments {
  Eigen::VectorXd mean;    // sum_k w_k v_k
  Eigen::MatrixXd second;  // S_ij = sum_k w_k v_ki v_kj
  double beta = 0.0;       // smallest eigenvalue of S
};

struct AdmissibilityTolerances {
  double weight_sum = 1e-12;
  double mean_zero = 1e-12;
  double spd = 1e-12;  // relative floor on beta / max eigenvalue of S
  bool require_no_zero = false;
};

struct AdmissibilityCheck {
  std::string name;
  bool pass = false;
  double residual = 0.0;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityCheck> checks;
  bool all_pass = false;
};

VelocityGrid build_quadrature(const QuadratureSpec& spec);
Moments moments(const VelocityGrid& grid);
AdmissibilityReport check_admissibility(const VelocityGrid& grid,
                                        const AdmissibilityTolerances& tol = {});

// Weighted inner product / norm on velocity functions (one value per node).
template <typename A, typename B>
double mu_dot(const VelocityGrid& g, const Eigen::MatrixBase<A>& u,
              const Eigen::MatrixBase<B>& v) {
  return (g.weights.array() * u.derived().array() * v.derived().array()).sum();
}

template <typename A>
double mu_mean(const VelocityGrid& g, const Eigen::MatrixBase<A>& u) {
  return (g.weights.array() * u.derived().array()).sum();
}

template <typename A>
double mu_norm(const VelocityGrid& g, const Eigen::MatrixBase<A>& u) {
  return std::sqrt((g.weights.array() * u.derived().array().square()).sum());
}

}  // namespace kindiff
