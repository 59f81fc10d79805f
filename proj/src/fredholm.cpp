#include "kindiff/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kindiff/errors.hpp"
#include "kindiff/parallel.hpp"

namespace kindiff {

CellFredholmSolution solve_cell(const CollisionMatrices& cm, const VelocityGrid& grid,
                                double tol) {
  const int V = grid.size();
  const int N = grid.dim;
  CellFredholmSolution sol;
  sol.b.resize(V, N);
  sol.b_star.resize(V, N);
  sol.residual_b.resize(N);
  sol.residual_b_star.resize(N);
  sol.mean_b.resize(N);
  sol.mean_b_star.resize(N);

  // Augment with the weighted-mean row; the exact solution exists because the
  // data is mean-zero and the kernel of L is spanned by the constants.
  auto solve_one = [&](const Eigen::MatrixXd& op, const Eigen::VectorXd& rhs,
                       const char* which) -> Eigen::VectorXd {
    Eigen::MatrixXd aug(V + 1, V);
    aug.topRows(V) = op;
    aug.row(V) = grid.weights.transpose();
    Eigen::VectorXd full_rhs(V + 1);
    full_rhs.head(V) = rhs;
    full_rhs[V] = 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(aug);
    if (qr.rank() < V) {
      throw Error(std::string("solve_cell: Fredholm solvability violated for ") + which +
                  " (operator rank deficient beyond the constants)");
    }
    return qr.solve(full_rhs);
  };

  for (int i = 0; i < N; ++i) {
    const Eigen::VectorXd vi = grid.nodes.col(i);
    const double vnorm = mu_norm(grid, vi);

    sol.b.col(i) = solve_one(cm.L, vi, "b");
    sol.b_star.col(i) = solve_one(cm.L_adj, vi, "b_star");
    sol.residual_b[i] = mu_norm(grid, (cm.L * sol.b.col(i) - vi).eval());
    sol.residual_b_star[i] = mu_norm(grid, (cm.L_adj * sol.b_star.col(i) - vi).eval());
    sol.mean_b[i] = mu_mean(grid, sol.b.col(i));
    sol.mean_b_star[i] = mu_mean(grid, sol.b_star.col(i));

    if (sol.residual_b[i] > tol * vnorm || sol.residual_b_star[i] > tol * vnorm) {
      throw Error("solve_cell: residual above tolerance (component " + std::to_string(i) +
                  ", residuals " + std::to_string(sol.residual_b[i]) + " / " +
                  std::to_string(sol.residual_b_star[i]) + ")");
    }
  }
  return sol;
}

Eigen::MatrixXd diffusion_matrix(const CellFredholmSolution& sol, const VelocityGrid& grid,
                                 double duality_tol) {
  const Eigen::MatrixXd W = grid.weights.asDiagonal();
  Eigen::MatrixXd M = sol.b_star.transpose() * W * grid.nodes;
  const Eigen::MatrixXd dual = grid.nodes.transpose() * W * sol.b;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double res = (M - dual).cwiseAbs().maxCoeff();
  require(res <= duality_tol * scale,
          "diffusion_matrix: duality identity violated (residual " + std::to_string(res) + ")");
  return M;
}

DiffusionField assemble_field(const Kernel& kernel, const Geometry& geom,
                              const VelocityGrid& grid, const KernelMetrics& metrics,
                              double bound_slack) {
  require(std::isfinite(metrics.C_K),
          "assemble_field: C_K is infinite, hypothesis (h2) fails on A");
  DiffusionField field;
  field.slot_of_cell.assign(geom.num_cells(), -1);

  // One Fredholm solve per distinct kernel table appearing on A.
  std::map<int, int> slot_of_table;
  std::vector<int> tables;
  for (int c = 0; c < geom.num_cells(); ++c) {
    if (geom.region[c] != 0) continue;
    field.slot_of_cell[c] = static_cast<int>(field.a_cells.size());
    field.a_cells.push_back(c);
    const int t = kernel.table_of_cell[c];
    if (!slot_of_table.count(t)) {
      slot_of_table[t] = static_cast<int>(tables.size());
      tables.push_back(t);
    }
    field.table_slot_of_cell.push_back(slot_of_table[t]);
  }

  field.solutions.resize(tables.size());
  std::vector<Eigen::MatrixXd> M_of_table(tables.size());
  parallel_for(static_cast<int>(tables.size()), [&](int s) {
    const CollisionMatrices cm = assemble_collision(kernel.tables[tables[s]], grid);
    field.solutions[s] = solve_cell(cm, grid);
    M_of_table[s] = diffusion_matrix(field.solutions[s], grid);
  });

  const Moments mom = moments(grid);
  const double coercivity_floor = mom.beta / (2.0 * metrics.C_K);
  field.min_coercivity = std::numeric_limits<double>::infinity();
  field.bound_2ck = 0;

  field.M.reserve(field.a_cells.size());
  for (size_t slot = 0; slot < field.a_cells.size(); ++slot) {
    const Eigen::MatrixXd& M = M_of_table[field.table_slot_of_cell[slot]];
    field.M.push_back(M);
    const int cell = field.a_cells[slot];
    for (int i = 0; i < grid.dim; ++i)
      for (int j = 0; j < grid.dim; ++j) {
        const double bound =
            2.0 * metrics.C_K * std::sqrt(mom.second(i, i) * mom.second(j, j));
        field.bound_2ck = std::max(field.bound_2ck, bound);
        if (std::abs(M(i, j)) > bound + bound_slack) {
          throw Error("assemble_field: |M_ij| bound violated at cell " +
                      std::to_string(cell));
        }
      }
    const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const double lmin = es.eigenvalues().minCoeff();
    field.min_coercivity = std::min(field.min_coercivity, lmin);
    if (lmin < coercivity_floor - bound_slack) {
      throw Error("assemble_field: coercivity bound violated at cell " +
                  std::to_string(cell));
    }
    field.max_asymmetry =
        std::max(field.max_asymmetry, (M - M.transpose()).cwiseAbs().maxCoeff());
  }
  field.symmetric = field.max_asymmetry <= 1e-10;
  return field;
}

}  // namespace kindiff
