#include <doctest.h>

#include <random>

#include "kindiff/errors.hpp"
#include "kindiff/harness.hpp"
#include "kindiff/kinetic.hpp"
#include "test_support.hpp"

using namespace kindiff;
using kindiff::test::geom_1d;
using kindiff::test::interval;

namespace {

VelocityGrid two_point() {
  QuadratureSpec spec;
  spec.model = "two_point_1d";
  return build_quadrature(spec);
}

KernelSpec isotropic(double sigma, const std::string& law = "linear") {
  KernelSpec spec;
  spec.sigma = sigma;
  spec.scaling = parse_scaling_law(law);
  return spec;
}

}  // namespace

TEST_CASE("zero initial state stays zero") {
  const Geometry geom = geom_1d(20);
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(1.0), geom, grid);
  KineticSolver solver(geom, grid, kernel, 0.5);
  InitialField field;
  field.profile = InitialField::Profile::Zero;
  KineticState st = solver.initial(field);
  solver.step(st, 0.01);
  CHECK(st.f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("space-homogeneous relaxation matches the 2x2 ODE solution") {
  // f' = -L f with L = sigma (I - mean); deviations decay like exp(-t).
  // Transport vanishes identically on x-constant data; the boundary drain
  // wave moves at speed 1 and cannot reach the center of a 20-unit slab
  // within t = 1.
  Eigen::VectorXd lo(1), hi(1);
  lo << 0.0;
  hi << 20.0;
  const Geometry geom = build_geometry(lo, hi, {200}, {});
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(1.0), geom, grid);
  KineticOptions opt;
  opt.dt = 2.5e-3;
  KineticSolver solver(geom, grid, kernel, 1.0, opt);

  InitialField field;
  field.profile = InitialField::Profile::Constant;
  field.amplitude = 1.0;
  field.factor = InitialField::VelocityFactor::OnePlusV1;  // f = (2, 0)
  KineticState st = solver.initial(field);
  CHECK(st.f[100 * 2 + 0] == 2.0);
  CHECK(st.f[100 * 2 + 1] == 0.0);

  const KineticRunResult run = solver.run(st, 1.0, {1.0});
  REQUIRE(run.snapshots.size() == 1);
  const KineticState& end = run.snapshots[0];
  const double fp = end.f[100 * 2 + 0], fm = end.f[100 * 2 + 1];
  CHECK(fp == doctest::Approx(1.0 + std::exp(-1.0)).epsilon(5e-3));
  CHECK(fm == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(5e-3));
  CHECK(fp + fm == doctest::Approx(2.0).epsilon(1e-12));  // mean preserved
  CHECK(run.entropy_ok);
  CHECK(run.mass_ok);
}

TEST_CASE("pure transport advects at speed v/eps") {
  // Vacuum everywhere (sigma = 0 is a valid SDB kernel); the discrete
  // center-of-mass of each velocity packet moves at exactly v/eps until the
  // pulse reaches the boundary.
  const Geometry geom = geom_1d(200);
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(0.0), geom, grid);
  const double eps = 0.5;
  KineticOptions opt;
  opt.dt = 1e-3;
  KineticSolver solver(geom, grid, kernel, eps, opt);

  InitialField field;
  field.profile = InitialField::Profile::Indicator;
  field.box_lo = Eigen::VectorXd::Constant(1, 0.45);
  field.box_hi = Eigen::VectorXd::Constant(1, 0.55);
  KineticState st = solver.initial(field);

  auto packet_com = [&](const KineticState& s, int k) {
    double m = 0, mx = 0;
    for (int c = 0; c < geom.num_cells(); ++c) {
      m += s.f[c * 2 + k];
      mx += s.f[c * 2 + k] * geom.cell_center(c)[0];
    }
    return std::pair<double, double>(mx / m, m);
  };
  const auto [com0, mass0] = packet_com(st, 0);
  const double t_end = 0.05;  // displacement 0.1, well inside the domain
  const KineticRunResult run = solver.run(st, t_end, {t_end});
  const auto [com1, mass1] = packet_com(run.snapshots[0], 0);
  CHECK(com1 - com0 == doctest::Approx((1.0 / eps) * t_end).epsilon(1e-10));
  CHECK(mass1 == doctest::Approx(mass0).epsilon(1e-12));
  CHECK(run.snapshots[0].f.minCoeff() >= -1e-13);
}

TEST_CASE("init_state rejections") {
  const Geometry geom = geom_1d(50, {interval(0.4, 0.6)});
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(1.0), geom, grid);
  KineticSolver solver(geom, grid, kernel, 0.25);

  SUBCASE("negative data") {
    InitialField field;
    field.profile = InitialField::Profile::Constant;
    field.amplitude = -1.0;
    CHECK_THROWS_AS(solver.initial(field), Error);
  }
  SUBCASE("strong mode rejects velocity-dependent data") {
    InitialField field;
    field.profile = InitialField::Profile::Constant;
    field.factor = InitialField::VelocityFactor::OnePlusV1;
    CHECK_THROWS_WITH_AS(solver.initial(field, true),
                         doctest::Contains("velocity-independent"), Error);
  }
  SUBCASE("strong mode rejects data varying across an inclusion") {
    InitialField field;
    field.profile = InitialField::Profile::SineProduct;
    CHECK_THROWS_WITH_AS(solver.initial(field, true), doctest::Contains("B_1"), Error);
  }
  SUBCASE("flattened data passes the strong check") {
    InitialField field;
    field.profile = InitialField::Profile::SineProduct;
    field.flatten_inclusions = true;
    CHECK_NOTHROW(solver.initial(field, true));
  }
}

TEST_CASE("entropy and mass ledgers hold on randomized configurations") {
  std::mt19937 rng(51);
  std::uniform_real_distribution<double> U(0.5, 3.0);
  for (int trial = 0; trial < 12; ++trial) {
    const bool with_inclusion = trial % 2 == 0;
    const Geometry geom =
        with_inclusion ? geom_1d(40, {interval(0.35, 0.65)}) : geom_1d(40);
    QuadratureSpec vspec;
    vspec.model = "tensor_symmetric";
    vspec.dim = 1;
    vspec.speeds = {U(rng), 3.0 + U(rng)};
    vspec.speed_weights = {0.5, 0.5};
    const VelocityGrid grid = build_quadrature(vspec);
    KernelSpec kspec = isotropic(U(rng), trial % 3 == 0 ? "zero" : "linear");
    kspec.b_base = U(rng);
    const Kernel kernel = build_kernel(kspec, geom, grid);
    const double eps = 0.1 + 0.2 * (trial % 4);
    KineticSolver solver(geom, grid, kernel, eps);
    InitialField field;
    field.profile = InitialField::Profile::SineProduct;
    field.amplitude = U(rng);
    KineticState st = solver.initial(field);
    for (int s = 0; s < 15; ++s) {
      const StepDiagnostics d = solver.step(st, solver.default_dt());
      CHECK(d.entropy_defect <= 1e-10 * std::max(1.0, d.l2_sq));
      CHECK(d.mass_balance_residual <= 1e-12);
    }
    CHECK(st.f.minCoeff() >= -1e-13);
  }
}

TEST_CASE("weighted L2 norm never increases, any dt") {
  const Geometry geom = geom_1d(30, {interval(0.4, 0.6)});
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(2.0), geom, grid);
  KineticSolver solver(geom, grid, kernel, 0.2);
  InitialField field;
  field.profile = InitialField::Profile::SineProduct;
  KineticState st = solver.initial(field);
  double l2 = solver.weighted_l2_sq(st.f);
  for (const double dt : {1e-4, 0.05, 10.0, 0.3}) {
    solver.step(st, dt);
    const double next = solver.weighted_l2_sq(st.f);
    CHECK(next <= l2 * (1.0 + 1e-12));
    l2 = next;
  }
}

TEST_CASE("kinetic current tracks the Fourier law as eps shrinks") {
  const Geometry geom = geom_1d(100);
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(1.0), geom, grid);
  InitialField field;
  field.profile = InitialField::Profile::SineProduct;

  auto current_residual = [&](double eps) {
    KineticSolver solver(geom, grid, kernel, eps);
    KineticState st = solver.initial(field);
    const KineticRunResult run = solver.run(st, 0.05, {0.05});
    const KineticState& s = run.snapshots[0];
    const Eigen::VectorXd avg = solver.velocity_average(s);
    const Eigen::MatrixXd grad = density_gradient(geom, avg);
    const Eigen::MatrixXd j = solver.current(s);
    double res = 0;
    for (int c = 5; c < geom.num_cells() - 5; ++c)
      res += std::pow(j(c, 0) + 1.0 * grad(c, 0), 2) * geom.cell_volume;
    return std::sqrt(res);
  };
  const double r1 = current_residual(0.25);
  const double r2 = current_residual(0.125);
  CHECK(r2 < r1);
}

TEST_CASE("reflection symmetry of the discrete solution") {
  const Geometry geom = geom_1d(60);
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(1.0), geom, grid);
  KineticSolver solver(geom, grid, kernel, 0.2);
  InitialField field;
  field.profile = InitialField::Profile::SineProduct;
  KineticState st = solver.initial(field);
  for (int s = 0; s < 10; ++s) solver.step(st, 1e-3);
  const int nc = geom.num_cells();
  for (int c = 0; c < nc; ++c) {
    const double a = st.f[c * 2 + 0];
    const double b = st.f[(nc - 1 - c) * 2 + 1];
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("iterative solver path agrees with the direct path") {
  const Geometry geom = geom_1d(50, {interval(0.4, 0.6)});
  const VelocityGrid grid = two_point();
  const Kernel kernel = build_kernel(isotropic(1.0), geom, grid);
  InitialField field;
  field.profile = InitialField::Profile::SineProduct;

  KineticOptions direct;
  KineticSolver s1(geom, grid, kernel, 0.3, direct);
  KineticOptions iterative;
  iterative.use_iterative = true;
  KineticSolver s2(geom, grid, kernel, 0.3, iterative);
  KineticState a = s1.initial(field);
  KineticState b = s2.initial(field);
  for (int s = 0; s < 5; ++s) {
    s1.step(a, 2e-3);
    s2.step(b, 2e-3);
  }
  CHECK((a.f - b.f).cwiseAbs().maxCoeff() < 1e-9);
}
