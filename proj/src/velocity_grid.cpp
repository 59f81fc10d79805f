#include "kindiff/velocity_grid.hpp"

#include <algorithm>
#include <numbers>

#include "kindiff/errors.hpp"

namespace kindiff {

namespace {

VelocityGrid make_grid(int dim, std::vector<Eigen::VectorXd> nodes,
                       std::vector<double> weights) {
  VelocityGrid g;
  g.dim = dim;
  const int v = static_cast<int>(nodes.size());
  g.nodes.resize(v, dim);
  g.weights.resize(v);
  for (int k = 0; k < v; ++k) {
    g.nodes.row(k) = nodes[k].transpose();
    g.weights[k] = weights[k];
  }
  return g;
}

void validate_built(const VelocityGrid& g, const std::string& model) {
  AdmissibilityTolerances tol;
  const AdmissibilityReport rep = check_admissibility(g, tol);
  for (const auto& c : rep.checks) {
    if (!c.pass) {
      throw Error("build_quadrature(" + model + "): admissibility check '" +
                  c.name + "' failed (residual " + std::to_string(c.residual) + ")");
    }
  }
}

}  // namespace

VelocityGrid build_quadrature(const QuadratureSpec& spec) {
  VelocityGrid g;
  if (spec.model == "two_point_1d") {
    g = make_grid(1, {Eigen::VectorXd::Constant(1, 1.0), Eigen::VectorXd::Constant(1, -1.0)},
                  {0.5, 0.5});
  } else if (spec.model == "uniform_circle") {
    require(spec.points >= 3, "build_quadrature(uniform_circle): need points >= 3");
    std::vector<Eigen::VectorXd> nodes;
    std::vector<double> weights;
    for (int k = 0; k < spec.points; ++k) {
      const double th = 2.0 * std::numbers::pi * k / spec.points;
      Eigen::VectorXd v(2);
      v << std::cos(th), std::sin(th);
      nodes.push_back(v);
      weights.push_back(1.0 / spec.points);
    }
    g = make_grid(2, std::move(nodes), std::move(weights));
  } else if (spec.model == "four_point_axes") {
    std::vector<Eigen::VectorXd> nodes;
    for (int d = 0; d < 2; ++d)
      for (int s : {+1, -1}) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(2);
        v[d] = s;
        nodes.push_back(v);
      }
    g = make_grid(2, std::move(nodes), {0.25, 0.25, 0.25, 0.25});
  } else if (spec.model == "tensor_symmetric") {
    require(spec.dim >= 1 && spec.dim <= 3,
            "build_quadrature(tensor_symmetric): dim must be 1, 2 or 3");
    require(!spec.speeds.empty() && spec.speeds.size() == spec.speed_weights.size(),
            "build_quadrature(tensor_symmetric): speeds/weights size mismatch");
    double wsum = 0;
    for (double w : spec.speed_weights) wsum += w;
    require(std::abs(wsum - 1.0) <= 1e-12,
            "build_quadrature(tensor_symmetric): speed weights must sum to 1");
    std::vector<Eigen::VectorXd> nodes;
    std::vector<double> weights;
    for (size_t i = 0; i < spec.speeds.size(); ++i) {
      require(spec.speeds[i] > 0, "build_quadrature(tensor_symmetric): speeds must be > 0");
      require(spec.speed_weights[i] > 0,
              "build_quadrature(tensor_symmetric): speed weights must be > 0");
      for (int d = 0; d < spec.dim; ++d)
        for (int s : {+1, -1}) {
          Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.dim);
          v[d] = s * spec.speeds[i];
          nodes.push_back(v);
          weights.push_back(spec.speed_weights[i] / (2.0 * spec.dim));
        }
    }
    g = make_grid(spec.dim, std::move(nodes), std::move(weights));
  } else if (spec.model == "sphere_symmetric") {
    // 26-direction octahedrally symmetric set on the unit sphere; the full
    // symmetry group forces mean 0 and S = I/3 exactly.
    std::vector<Eigen::VectorXd> nodes;
    auto push = [&](double x, double y, double z) {
      Eigen::VectorXd v(3);
      v << x, y, z;
      nodes.push_back(v / v.norm());
    };
    for (int d = 0; d < 3; ++d)
      for (int s : {+1, -1}) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(3);
        v[d] = s;
        nodes.push_back(v);
      }
    for (int sa : {+1, -1})
      for (int sb : {+1, -1}) {
        push(sa, sb, 0);
        push(sa, 0, sb);
        push(0, sa, sb);
      }
    for (int sx : {+1, -1})
      for (int sy : {+1, -1})
        for (int sz : {+1, -1}) push(sx, sy, sz);
    std::vector<double> weights(nodes.size(), 1.0 / static_cast<double>(nodes.size()));
    g = make_grid(3, std::move(nodes), std::move(weights));
  } else {
    throw Error("build_quadrature: unsupported model '" + spec.model + "'");
  }
  validate_built(g, spec.model);
  return g;
}

Moments moments(const VelocityGrid& grid) {
  Moments m;
  m.mean = grid.nodes.transpose() * grid.weights;
  m.second = grid.nodes.transpose() * grid.weights.asDiagonal() * grid.nodes;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.second);
  m.beta = es.eigenvalues().minCoeff();
  return m;
}

AdmissibilityReport check_admissibility(const VelocityGrid& grid,
                                        const AdmissibilityTolerances& tol) {
  AdmissibilityReport rep;
  const Moments m = moments(grid);
  const double wsum_res = std::abs(grid.weights.sum() - 1.0);
  rep.checks.push_back({"weight_normalization", wsum_res <= tol.weight_sum, wsum_res});

  const double wmin = grid.size() > 0 ? grid.weights.minCoeff() : 0.0;
  rep.checks.push_back({"weights_positive", wmin > 0.0, wmin});

  const double mean_res = m.mean.cwiseAbs().maxCoeff();
  rep.checks.push_back({"mean_zero", mean_res <= tol.mean_zero, mean_res});

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.second);
  const double lmax = es.eigenvalues().maxCoeff();
  const bool spd = m.beta > tol.spd * std::max(1.0, lmax);
  rep.checks.push_back({"second_moment_spd", spd, m.beta});

  double min_dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.size(); ++i)
    for (int j = i + 1; j < grid.size(); ++j)
      min_dist = std::min(min_dist, (grid.nodes.row(i) - grid.nodes.row(j)).norm());
  rep.checks.push_back({"no_duplicate_nodes", grid.size() < 2 || min_dist > 1e-12,
                        grid.size() < 2 ? 1.0 : min_dist});

  if (tol.require_no_zero) {
    double min_speed = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid.size(); ++i)
      min_speed = std::min(min_speed, grid.nodes.row(i).norm());
    rep.checks.push_back({"no_zero_velocity", min_speed > 1e-12, min_speed});
  }

  rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                             [](const AdmissibilityCheck& c) { return c.pass; });
  return rep;
}

}  // namespace kindiff
