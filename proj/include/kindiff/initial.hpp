#pragma once

#include <Eigen/Dense>
#include <string>

#include "kindiff/geometry.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

// Closed-form initial data f_in(x,v) = profile(x) * factor(v), sampled at cell
// centers. Strong-convergence runs require factor == None and values constant
// on every inclusion.
struct InitialField {
  enum class Profile { Zero, Constant, SineProduct, Gaussian, Indicator };
  enum class VelocityFactor { None, V1Squared, OnePlusV1 };

  Profile profile = Profile::SineProduct;
  double amplitude = 1.0;
  Eigen::VectorXd center;  // Gaussian
  double width = 0.1;      // Gaussian
  Eigen::VectorXd box_lo, box_hi;  // Indicator
  VelocityFactor factor = VelocityFactor::None;
  bool flatten_inclusions = false;  // replace inclusion values by their average

  double profile_at(const Eigen::VectorXd& x, const Geometry& geom) const;
  double factor_at(const Eigen::VectorXd& v) const;
};

// Cell-center samples of the spatial profile, with inclusion flattening applied
// when requested. Throws on negative data.
Eigen::VectorXd sample_profile(const InitialField& field, const Geometry& geom);

}  // namespace kindiff
