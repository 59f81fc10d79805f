#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "kindiff/errors.hpp"
#include "kindiff/kernel.hpp"
#include "test_support.hpp"

using namespace kindiff;
using kindiff::test::geom_1d;
using kindiff::test::interval;
using kindiff::test::kernel_from_table;
using kindiff::test::random_grid;
using kindiff::test::random_sdb_table;

namespace {

VelocityGrid two_point() {
  QuadratureSpec spec;
  spec.model = "two_point_1d";
  return build_quadrature(spec);
}

std::string write_table_csv(const std::vector<std::array<double, 4>>& rows) {
  static int counter = 0;
  const std::string path = "kernel_table_" + std::to_string(counter++) + ".csv";
  std::ofstream out(path);
  out << "cell_id,v_index,w_index,value\n";
  for (const auto& r : rows)
    out << static_cast<int>(r[0]) << ',' << static_cast<int>(r[1]) << ','
        << static_cast<int>(r[2]) << ',' << r[3] << '\n';
  return path;
}

}  // namespace

TEST_CASE("isotropic kernel is constant with zero SDB residual") {
  const Geometry g = geom_1d(10);
  const VelocityGrid grid = two_point();
  KernelSpec spec;
  spec.sigma = 1.0;
  const Kernel k = build_kernel(spec, g, grid);
  CHECK(k.sdb_residual == 0.0);
  CHECK(k.tables.size() == 1);
  CHECK(k.tables[0].minCoeff() == 1.0);
  CHECK(k.tables[0].maxCoeff() == 1.0);
  CHECK((k.rates[0] - Eigen::VectorXd::Ones(2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("semi-detailed balance violation is a construction error") {
  const Geometry g = geom_1d(4);
  const VelocityGrid grid = two_point();
  // Row integral at v=+1 is 1.5, column integral is 1.0: residual 0.5.
  KernelSpec spec;
  spec.type = KernelSpec::Type::Tabulated;
  spec.table_path = write_table_csv({{-1, 0, 0, 2}, {-1, 0, 1, 1}, {-1, 1, 0, 0}, {-1, 1, 1, 1}});
  CHECK_THROWS_WITH_AS(build_kernel(spec, g, grid),
                       doctest::Contains("semi-detailed balance"), Error);
  std::remove(spec.table_path.c_str());
}

TEST_CASE("off-diagonal SDB table passes with unit rate") {
  const Geometry g = geom_1d(4);
  const VelocityGrid grid = two_point();
  KernelSpec spec;
  spec.type = KernelSpec::Type::Tabulated;
  spec.table_path = write_table_csv({{-1, 0, 0, 0}, {-1, 0, 1, 2}, {-1, 1, 0, 2}, {-1, 1, 1, 0}});
  const Kernel k = build_kernel(spec, g, grid);
  CHECK(k.sdb_residual < 1e-15);
  CHECK((k.rates[0] - Eigen::VectorXd::Ones(2)).cwiseAbs().maxCoeff() < 1e-15);
  std::remove(spec.table_path.c_str());
}

TEST_CASE("C_K closed form for isotropic kernels") {
  const VelocityGrid grid = two_point();
  for (double sigma : {0.5, 1.0, 2.0, 3.0}) {
    const Geometry g = geom_1d(10);
    KernelSpec spec;
    spec.sigma = sigma;
    const Kernel k = build_kernel(spec, g, grid);
    const KernelMetrics m = compute_metrics(k, g, grid, {0.1});
    CHECK(m.C_K == doctest::Approx(sigma + 2.0 / sigma).epsilon(1e-14));
    CHECK(m.sup_a_A == doctest::Approx(sigma).epsilon(1e-14));
  }
}

TEST_CASE("h3 margin across scaling laws") {
  const Geometry g = geom_1d(50, {interval(0.4, 0.6)});
  const VelocityGrid grid = two_point();
  KernelSpec spec;
  spec.sigma = 1.0;
  spec.b_base = 1.0;
  const std::vector<double> eps = {0.4, 0.2, 0.1};

  SUBCASE("linear: margin equals eps, hypothesis satisfied") {
    spec.scaling = parse_scaling_law("linear");
    const Kernel k = build_kernel(spec, g, grid);
    const KernelMetrics m = compute_metrics(k, g, grid, eps);
    for (size_t i = 0; i < eps.size(); ++i)
      CHECK(m.h3_margin[i] == doctest::Approx(eps[i]).epsilon(1e-14));
    const HypothesisReport rep = hypothesis_report(k, g, grid, eps);
    CHECK(rep.h1 == Verdict::Pass);
    CHECK(rep.h3 == Verdict::Pass);
    CHECK(rep.applicable);
  }
  SUBCASE("quadratic: margin stalls at one, needs ergodicity") {
    spec.scaling = parse_scaling_law("quadratic");
    const Kernel k = build_kernel(spec, g, grid);
    const KernelMetrics m = compute_metrics(k, g, grid, eps);
    for (double margin : m.h3_margin) CHECK(margin == doctest::Approx(1.0).epsilon(1e-14));
    const HypothesisReport rep = hypothesis_report(k, g, grid, eps);
    CHECK(rep.h3 == Verdict::Fail);
    CHECK(rep.notes.find("h4") != std::string::npos);
    // The 1D interval is ergodic under the two-point measure, so the theorem
    // still applies through (h4).
    CHECK(rep.h4 == Verdict::Pass);
    CHECK(rep.applicable);
  }
  SUBCASE("vacuum: margin infinite, h4 carries the verdict") {
    spec.scaling = parse_scaling_law("zero");
    const Kernel k = build_kernel(spec, g, grid);
    const KernelMetrics m = compute_metrics(k, g, grid, eps);
    for (double margin : m.h3_margin) CHECK(std::isinf(margin));
    const HypothesisReport rep = hypothesis_report(k, g, grid, eps);
    CHECK(rep.h1 == Verdict::Pass);
    CHECK(rep.h3 == Verdict::Fail);
    CHECK(rep.h4 == Verdict::Pass);
    CHECK(rep.applicable);
  }
  SUBCASE("constant: rate does not vanish on B") {
    spec.scaling = parse_scaling_law("constant");
    const Kernel k = build_kernel(spec, g, grid);
    const HypothesisReport rep = hypothesis_report(k, g, grid, eps);
    CHECK(rep.h1 == Verdict::Fail);
    CHECK(!rep.applicable);
  }
  SUBCASE("log scaling vanishes slowly but passes both h1 and h3") {
    spec.scaling = parse_scaling_law("log", 2.0);
    const Kernel k = build_kernel(spec, g, grid);
    const KernelMetrics m = compute_metrics(k, g, grid, eps);
    for (size_t i = 0; i < eps.size(); ++i) {
      const double s = std::pow(std::abs(std::log(eps[i])), -2.0);
      CHECK(m.sup_a_on_B[i] == doctest::Approx(s).epsilon(1e-12));
    }
    const HypothesisReport rep = hypothesis_report(k, g, grid, eps);
    CHECK(rep.h1 == Verdict::Pass);
    CHECK(rep.h3 == Verdict::Pass);
  }
}

TEST_CASE("counterexample geometry: quadratic scaling with axis velocities refused") {
  Eigen::VectorXd lo(2), hi(2);
  lo << 0, 0;
  hi << 1, 1;
  RegionShape d;
  d.kind = RegionShape::Kind::Disk;
  d.center.resize(2);
  d.center << 0.5, 0.5;
  d.radius = 0.25;
  const Geometry g = build_geometry(lo, hi, {32, 32}, {d});
  QuadratureSpec vspec;
  vspec.model = "four_point_axes";
  const VelocityGrid grid = build_quadrature(vspec);
  KernelSpec spec;
  spec.sigma = 1.0;
  spec.scaling = parse_scaling_law("quadratic");
  const Kernel k = build_kernel(spec, g, grid);
  const HypothesisReport rep = hypothesis_report(k, g, grid, {0.4, 0.2, 0.1});
  CHECK(rep.h1 == Verdict::Pass);
  CHECK(rep.h2 == Verdict::Pass);
  CHECK(rep.h3 == Verdict::Fail);
  CHECK(rep.h4 == Verdict::Fail);
  CHECK(!rep.applicable);
}

TEST_CASE("no inclusions: only h2 is material") {
  const Geometry g = geom_1d(10);
  const VelocityGrid grid = two_point();
  KernelSpec spec;
  spec.sigma = 2.0;
  const Kernel k = build_kernel(spec, g, grid);
  const HypothesisReport rep = hypothesis_report(k, g, grid, {0.1});
  CHECK(rep.h1 == Verdict::NotApplicable);
  CHECK(rep.h3 == Verdict::NotApplicable);
  CHECK(rep.h4 == Verdict::NotApplicable);
  CHECK(rep.h2 == Verdict::Pass);
  CHECK(rep.applicable);
}

TEST_CASE("anisotropic dot kernel") {
  QuadratureSpec vspec;
  vspec.model = "uniform_circle";
  vspec.points = 8;
  const VelocityGrid grid = build_quadrature(vspec);
  Eigen::VectorXd lo(2), hi(2);
  lo << 0, 0;
  hi << 1, 1;
  const Geometry g = build_geometry(lo, hi, {8, 8}, {});

  SUBCASE("mild anisotropy keeps C_K finite") {
    KernelSpec spec;
    spec.type = KernelSpec::Type::AnisotropicDot;
    spec.c0 = 1.0;
    spec.c1 = 0.5;
    const Kernel k = build_kernel(spec, g, grid);
    CHECK(k.sdb_residual < 1e-15);  // the dot-product kernel is symmetric
    const KernelMetrics m = compute_metrics(k, g, grid, {0.1});
    CHECK(std::isfinite(m.C_K));
  }
  SUBCASE("clipping to zero makes C_K infinite and fails h2") {
    KernelSpec spec;
    spec.type = KernelSpec::Type::AnisotropicDot;
    spec.c0 = 0.5;
    spec.c1 = 1.0;
    const Kernel k = build_kernel(spec, g, grid);
    const KernelMetrics m = compute_metrics(k, g, grid, {0.1});
    CHECK(std::isinf(m.C_K));
    const HypothesisReport rep = hypothesis_report(k, g, grid, {0.1});
    CHECK(rep.h2 == Verdict::Fail);
    CHECK(!rep.applicable);
  }
}

TEST_CASE("stored rates match recomputation") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const VelocityGrid grid = random_grid(rng);
    const Eigen::MatrixXd table = random_sdb_table(rng, grid);
    const Geometry g = geom_1d(5);
    const Kernel k = kernel_from_table(table, g, grid);
    const Eigen::VectorXd recomputed = table * grid.weights;
    CHECK((recomputed - k.rates[0]).cwiseAbs().maxCoeff() <=
          1e-14 * std::max(1.0, recomputed.maxCoeff()));
  }
}

TEST_CASE("symmetric tables have exactly zero SDB residual") {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const VelocityGrid grid = random_grid(rng);
    const Eigen::MatrixXd table = random_sdb_table(rng, grid, /*symmetric=*/true);
    const Geometry g = geom_1d(3);
    const Kernel k = kernel_from_table(table, g, grid);
    CHECK(k.sdb_residual == 0.0);
  }
}

TEST_CASE("C_K does not increase under pointwise scaling toward one") {
  // For kernel values in (0, 1], the integrand k + 1/k + 1/k~ is pointwise
  // nonincreasing in k, so scaling the table up (still below one) cannot
  // increase C_K.
  std::mt19937 rng(23);
  const Geometry g = geom_1d(4);
  for (int trial = 0; trial < 20; ++trial) {
    const VelocityGrid grid = random_grid(rng);
    Eigen::MatrixXd table = random_sdb_table(rng, grid, false, 0.2, 0.8);
    table /= table.maxCoeff() * 1.25;  // entries now in (0, 0.8]
    const double c = 1.0 + 0.2 * (rng() % 100) / 100.0;
    const Kernel k1 = kernel_from_table(table, g, grid);
    const Kernel k2 = kernel_from_table((c * table).eval(), g, grid);
    const double ck1 = compute_metrics(k1, g, grid, {0.1}).C_K;
    const double ck2 = compute_metrics(k2, g, grid, {0.1}).C_K;
    CHECK(ck2 <= ck1 * (1.0 + 1e-12));
  }
}
