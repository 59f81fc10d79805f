#include "kindiff/initial.hpp"

#include <cmath>
#include <numbers>

#include "kindiff/errors.hpp"

namespace kindiff {

double InitialField::profile_at(const Eigen::VectorXd& x, const Geometry& geom) const {
  switch (profile) {
    case Profile::Zero:
      return 0.0;
    case Profile::Constant:
      return amplitude;
    case Profile::SineProduct: {
      double p = amplitude;
      for (int d = 0; d < geom.dim; ++d)
        p *= std::sin(std::numbers::pi * (x[d] - geom.lo[d]) / (geom.hi[d] - geom.lo[d]));
      return p;
    }
    case Profile::Gaussian: {
      const double r2 = (x - center).squaredNorm();
      return amplitude * std::exp(-r2 / (2.0 * width * width));
    }
    case Profile::Indicator: {
      for (int d = 0; d < geom.dim; ++d)
        if (x[d] < box_lo[d] || x[d] > box_hi[d]) return 0.0;
      return amplitude;
    }
  }
  return 0.0;
}

double InitialField::factor_at(const Eigen::VectorXd& v) const {
  switch (factor) {
    case VelocityFactor::None: return 1.0;
    case VelocityFactor::V1Squared: return v[0] * v[0];
    case VelocityFactor::OnePlusV1: return 1.0 + v[0];
  }
  return 1.0;
}

Eigen::VectorXd sample_profile(const InitialField& field, const Geometry& geom) {
  Eigen::VectorXd rho(geom.num_cells());
  for (int c = 0; c < geom.num_cells(); ++c)
    rho[c] = field.profile_at(geom.cell_center(c), geom);
  require(rho.minCoeff() >= 0, "initial data must be nonnegative");
  if (field.flatten_inclusions) {
    for (int l = 1; l <= geom.num_inclusions; ++l) {
      const std::vector<int> cells = geom.cells_of_region(l);
      double mean = 0;
      for (int c : cells) mean += rho[c];
      mean /= static_cast<double>(cells.size());
      for (int c : cells) rho[c] = mean;
    }
  }
  return rho;
}

}  // namespace kindiff
