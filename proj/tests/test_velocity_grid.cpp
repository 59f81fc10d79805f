#include <doctest.h>

#include <algorithm>
#include <random>

#include "kindiff/errors.hpp"
#include "kindiff/velocity_grid.hpp"

using namespace kindiff;

TEST_CASE("two_point_1d quadrature") {
  QuadratureSpec spec;
  spec.model = "two_point_1d";
  const VelocityGrid g = build_quadrature(spec);
  CHECK(g.dim == 1);
  CHECK(g.size() == 2);
  CHECK(g.nodes(0, 0) == 1.0);
  CHECK(g.nodes(1, 0) == -1.0);
  CHECK(g.weights[0] == 0.5);

  const Moments m = moments(g);
  CHECK(std::abs(m.mean[0]) == 0.0);
  CHECK(m.second(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.beta == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("four_point_axes moments") {
  QuadratureSpec spec;
  spec.model = "four_point_axes";
  const VelocityGrid g = build_quadrature(spec);
  // Oracle: direct weighted sum of v (x) v over the four axis nodes.
  Eigen::Matrix2d S_oracle = Eigen::Matrix2d::Zero();
  for (int k = 0; k < g.size(); ++k)
    S_oracle += g.weights[k] * g.nodes.row(k).transpose() * g.nodes.row(k);
  CHECK((S_oracle - 0.5 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-15);

  const Moments m = moments(g);
  CHECK((m.second - S_oracle).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(m.beta == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.mean.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("uniform_circle second moment") {
  QuadratureSpec spec;
  spec.model = "uniform_circle";
  spec.points = 8;
  const VelocityGrid g = build_quadrature(spec);
  // Oracle: brute-force sum of cos^2 over equispaced angles equals 1/2.
  double s = 0;
  for (int k = 0; k < 8; ++k) {
    const double th = 2.0 * std::numbers::pi * k / 8;
    s += std::cos(th) * std::cos(th) / 8.0;
  }
  CHECK(s == doctest::Approx(0.5).epsilon(1e-14));
  const Moments m = moments(g);
  CHECK((m.second - 0.5 * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-14);

  // Mean-zero holds to summation accuracy for every circle size.
  for (int n : {3, 5, 7, 16}) {
    spec.points = n;
    const Moments mm = moments(build_quadrature(spec));
    CHECK(mm.mean.cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("sphere_symmetric 26-node set") {
  QuadratureSpec spec;
  spec.model = "sphere_symmetric";
  const VelocityGrid g = build_quadrature(spec);
  CHECK(g.size() == 26);
  CHECK(g.dim == 3);
  const Moments m = moments(g);
  CHECK(m.mean.cwiseAbs().maxCoeff() < 1e-15);
  CHECK((m.second - Eigen::Matrix3d::Identity() / 3.0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tensor_symmetric builds mean-zero grids") {
  QuadratureSpec spec;
  spec.model = "tensor_symmetric";
  spec.dim = 1;
  spec.speeds = {0.5, 1.0, 1.5, 2.0};
  spec.speed_weights = {0.1, 0.2, 0.3, 0.4};
  const VelocityGrid g = build_quadrature(spec);
  CHECK(g.size() == 8);
  CHECK(g.weights.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(moments(g).mean.cwiseAbs().maxCoeff() < 1e-14);

  SUBCASE("weights must sum to one") {
    spec.speed_weights = {0.1, 0.2, 0.3, 0.3};
    CHECK_THROWS_AS(build_quadrature(spec), Error);
  }
  SUBCASE("duplicate speeds produce duplicate nodes") {
    spec.speeds = {1.0, 1.0, 1.5, 2.0};
    spec.speed_weights = {0.1, 0.2, 0.3, 0.4};
    CHECK_THROWS_AS(build_quadrature(spec), Error);
  }
}

TEST_CASE("unsupported model") {
  QuadratureSpec spec;
  spec.model = "dodecahedron";
  CHECK_THROWS_WITH_AS(build_quadrature(spec),
                       doctest::Contains("unsupported model"), Error);
}

TEST_CASE("admissibility report on degenerate grids") {
  SUBCASE("single node has nonzero mean") {
    VelocityGrid g;
    g.dim = 1;
    g.nodes = Eigen::MatrixXd::Constant(1, 1, 1.0);
    g.weights = Eigen::VectorXd::Constant(1, 1.0);
    const AdmissibilityReport rep = check_admissibility(g);
    CHECK(!rep.all_pass);
    const Moments m = moments(g);
    CHECK(m.mean[0] == 1.0);
    auto mean_check = std::find_if(rep.checks.begin(), rep.checks.end(),
                                   [](const auto& c) { return c.name == "mean_zero"; });
    REQUIRE(mean_check != rep.checks.end());
    CHECK(!mean_check->pass);
  }
  SUBCASE("collinear 2D nodes fail the second-moment check") {
    VelocityGrid g;
    g.dim = 2;
    g.nodes.resize(2, 2);
    g.nodes << 1, 0, -1, 0;
    g.weights = Eigen::VectorXd::Constant(2, 0.5);
    const AdmissibilityReport rep = check_admissibility(g);
    auto spd = std::find_if(rep.checks.begin(), rep.checks.end(),
                            [](const auto& c) { return c.name == "second_moment_spd"; });
    REQUIRE(spd != rep.checks.end());
    CHECK(!spd->pass);
  }
  SUBCASE("zero node flagged when required") {
    VelocityGrid g;
    g.dim = 1;
    g.nodes.resize(3, 1);
    g.nodes << 1, -1, 0;
    g.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    AdmissibilityTolerances tol;
    tol.require_no_zero = true;
    const AdmissibilityReport rep = check_admissibility(g, tol);
    auto zero = std::find_if(rep.checks.begin(), rep.checks.end(),
                             [](const auto& c) { return c.name == "no_zero_velocity"; });
    REQUIRE(zero != rep.checks.end());
    CHECK(!zero->pass);
    CHECK(moments(g).mean.cwiseAbs().maxCoeff() < 1e-15);  // still mean-zero
  }
}

TEST_CASE("moments invariant under node permutation") {
  QuadratureSpec spec;
  spec.model = "uniform_circle";
  spec.points = 7;
  const VelocityGrid g = build_quadrature(spec);
  VelocityGrid p = g;
  std::mt19937 rng(7);
  std::vector<int> perm(g.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int k = 0; k < g.size(); ++k) {
    p.nodes.row(k) = g.nodes.row(perm[k]);
    p.weights[k] = g.weights[perm[k]];
  }
  const Moments a = moments(g), b = moments(p);
  CHECK((a.second - b.second).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(a.beta == doctest::Approx(b.beta).epsilon(1e-13));
}

TEST_CASE("positive beta iff nodes span the space") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    VelocityGrid g;
    g.dim = 2;
    const int V = 4;
    g.nodes.resize(V, 2);
    const bool degenerate = trial % 2 == 0;
    for (int k = 0; k < V; ++k) {
      const double t = U(rng);
      if (degenerate) {
        g.nodes.row(k) << t, 2.0 * t;  // all on one line
      } else {
        g.nodes.row(k) << U(rng), U(rng);
      }
    }
    g.weights = Eigen::VectorXd::Constant(V, 1.0 / V);
    const Moments m = moments(g);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(g.nodes);
    const bool spans = lu.rank() == 2;
    CHECK((m.beta > 1e-12) == spans);
  }
}
