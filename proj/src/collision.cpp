#include "kindiff/collision.hpp"

#include <Eigen/SVD>

#include "kindiff/errors.hpp"

namespace kindiff {

CollisionMatrices assemble_collision(const Eigen::MatrixXd& k_table,
                                     const VelocityGrid& grid, double check_tol) {
  const int V = grid.size();
  require(k_table.rows() == V && k_table.cols() == V,
          "assemble_collision: kernel table size mismatch");
  CollisionMatrices cm;
  cm.K = k_table * grid.weights.asDiagonal();
  cm.a = k_table * grid.weights;
  cm.L = cm.a.asDiagonal();
  cm.L -= cm.K;

  const Eigen::MatrixXd kT = k_table.transpose();
  const Eigen::VectorXd a_adj = kT * grid.weights;
  cm.L_adj = a_adj.asDiagonal();
  cm.L_adj -= kT * grid.weights.asDiagonal();

  const double scale = std::max(1.0, cm.a.maxCoeff());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(V);
  require((cm.L * ones).cwiseAbs().maxCoeff() <= check_tol * scale,
          "assemble_collision: constants not in the kernel of L");
  require((cm.L_adj * ones).cwiseAbs().maxCoeff() <= check_tol * scale,
          "assemble_collision: constants not in the kernel of L_adj");

  // mu-adjointness: W L_adj == L^T W with W = diag(mu).
  const Eigen::MatrixXd W = grid.weights.asDiagonal();
  const double adj_res = (W * cm.L_adj - cm.L.transpose() * W).cwiseAbs().maxCoeff();
  require(adj_res <= check_tol * scale,
          "assemble_collision: adjointness residual " + std::to_string(adj_res) +
              " exceeds tolerance (semi-detailed balance violated?)");

  // Gain-part norm in the weighted space: sigma_max of W^1/2 K W^-1/2.
  const Eigen::VectorXd sq = grid.weights.cwiseSqrt();
  const Eigen::MatrixXd Kw =
      sq.asDiagonal() * cm.K * sq.cwiseInverse().asDiagonal();
  const double knorm = Kw.jacobiSvd().singularValues()(0);
  require(knorm <= cm.a.maxCoeff() * (1.0 + 1e-12) + check_tol,
          "assemble_collision: gain norm exceeds the max scattering rate");
  return cm;
}

DirichletForm dirichlet_form(const CollisionMatrices& cm, const Eigen::MatrixXd& k_table,
                             const VelocityGrid& grid, const Eigen::VectorXd& phi) {
  DirichletForm out;
  out.quadratic = mu_dot(grid, phi, (cm.L * phi).eval());
  const int V = grid.size();
  double s = 0;
  for (int v = 0; v < V; ++v)
    for (int w = 0; w < V; ++w) {
      const double d = phi[v] - phi[w];
      s += grid.weights[v] * grid.weights[w] * k_table(v, w) * d * d;
    }
  out.double_sum = 0.5 * s;
  return out;
}

}  // namespace kindiff
