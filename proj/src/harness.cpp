#include "kindiff/harness.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kindiff/errors.hpp"
#include "kindiff/parallel.hpp"

namespace kindiff {

namespace {

bool monotone_decreasing(const std::vector<double>& s) {
  for (size_t i = 1; i < s.size(); ++i)
    if (!(s[i] <= s[i - 1] * (1.0 + 1e-12))) return false;
  return true;
}

std::string failing_hypotheses(const HypothesisReport& hyp) {
  std::ostringstream os;
  if (hyp.h1 == Verdict::Fail) os << " (h1)";
  if (hyp.h2 == Verdict::Fail) os << " (h2)";
  if (hyp.h3 == Verdict::Fail && hyp.h4 == Verdict::Fail) os << " (h3 and h4)";
  return os.str();
}

// Strong-convergence data admissibility: velocity independent and constant on
// every inclusion.
bool strong_data_ok(const InitialField& field, const Geometry& geom) {
  if (field.factor != InitialField::VelocityFactor::None) return false;
  const Eigen::VectorXd rho = sample_profile(field, geom);
  for (int l = 1; l <= geom.num_inclusions; ++l) {
    const std::vector<int> cells = geom.cells_of_region(l);
    double mn = rho[cells.front()], mx = mn;
    for (int c : cells) {
      mn = std::min(mn, rho[c]);
      mx = std::max(mx, rho[c]);
    }
    if (mx - mn > 1e-12 * std::max(1.0, std::abs(mx))) return false;
  }
  return true;
}

}  // namespace

Eigen::MatrixXd density_gradient(const Geometry& geom, const Eigen::VectorXd& rho) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(geom.num_cells(), geom.dim);
  for (int c = 0; c < geom.num_cells(); ++c) {
    if (geom.region[c] != 0) continue;
    const int i = geom.ci(c), j = geom.cj(c);
    for (int d = 0; d < geom.dim; ++d) {
      const int mi = i - (d == 0), mj = j - (d == 1);
      const int pi = i + (d == 0), pj = j + (d == 1);
      const bool has_m = geom.in_bounds(mi, mj) && geom.region[geom.index(mi, mj)] == 0;
      const bool has_p = geom.in_bounds(pi, pj) && geom.region[geom.index(pi, pj)] == 0;
      if (has_m && has_p) {
        g(c, d) = (rho[geom.index(pi, pj)] - rho[geom.index(mi, mj)]) / (2 * geom.h[d]);
      } else if (has_p) {
        g(c, d) = (rho[geom.index(pi, pj)] - rho[c]) / geom.h[d];
      } else if (has_m) {
        g(c, d) = (rho[c] - rho[geom.index(mi, mj)]) / geom.h[d];
      }
    }
  }
  return g;
}

ConvergenceReport run_sweep(const SweepSetup& setup) {
  const Geometry& geom = *setup.geom;
  const VelocityGrid& grid = *setup.grid;
  const Kernel& kernel = *setup.kernel;

  require(!setup.eps_list.empty(), "run_sweep: eps list is empty");
  for (size_t i = 0; i < setup.eps_list.size(); ++i) {
    require(setup.eps_list[i] > 0, "run_sweep: eps values must be positive");
    require(i == 0 || setup.eps_list[i] < setup.eps_list[i - 1],
            "run_sweep: eps values must be strictly decreasing");
  }
  std::vector<double> times = setup.snapshot_times;
  if (times.empty()) times.push_back(setup.horizon);

  ConvergenceReport report;
  report.eps_list = setup.eps_list;
  report.times = times;
  report.hypotheses = hypothesis_report(kernel, geom, grid, setup.eps_list);
  if (!report.hypotheses.applicable && !setup.force) {
    throw Error("sweep refused: diffusion limit hypotheses fail" +
                failing_hypotheses(report.hypotheses) +
                "; rerun with force to record the sweep anyway");
  }

  const DiffusionField field =
      assemble_field(kernel, geom, grid, report.hypotheses.metrics);
  report.field_symmetric = field.symmetric;
  DiffusionOperator dop(geom, field);
  const DiffusionState rho0 = dop.project_initial(setup.initial, grid);
  const double dt_diff =
      setup.dt_diffusion > 0 ? setup.dt_diffusion : setup.horizon / 2000.0;
  const DiffusionRunResult dref = dop.run(rho0, setup.horizon, times, dt_diff);
  require(dref.snapshots.size() == times.size(),
          "run_sweep: diffusion reference snapshot mismatch");

  // Per-snapshot reference fields and their diagnostic gradients.
  std::vector<Eigen::VectorXd> rho_fields;
  std::vector<Eigen::MatrixXd> rho_grads;
  for (const auto& s : dref.snapshots) {
    rho_fields.push_back(dop.reconstruct(s));
    rho_grads.push_back(density_gradient(geom, rho_fields.back()));
  }

  // Interior mask (distance from the domain boundary >= margin).
  std::vector<char> interior(geom.num_cells(), 1);
  for (int c = 0; c < geom.num_cells(); ++c) {
    const Eigen::VectorXd x = geom.cell_center(c);
    for (int d = 0; d < geom.dim; ++d) {
      if (x[d] - geom.lo[d] < setup.interior_margin ||
          geom.hi[d] - x[d] < setup.interior_margin)
        interior[c] = 0;
    }
  }

  const bool strong = field.symmetric && strong_data_ok(setup.initial, geom);
  const int m = geom.num_inclusions;
  const int n_eps = static_cast<int>(setup.eps_list.size());
  const int n_t = static_cast<int>(times.size());
  report.rows.resize(static_cast<size_t>(n_eps) * n_t);
  report.runs.resize(n_eps);

  // Equicontinuity test function: the sine bump, flattened on inclusions so
  // its discrete realization lies in the constrained space.
  InitialField wspec;
  wspec.profile = InitialField::Profile::SineProduct;
  wspec.flatten_inclusions = true;
  const Eigen::VectorXd w = sample_profile(wspec, geom);
  const Eigen::MatrixXd gw = density_gradient(geom, w);
  double gw_norm2 = 0;
  for (int c = 0; c < geom.num_cells(); ++c) gw_norm2 += gw.row(c).squaredNorm();
  gw_norm2 *= geom.cell_volume;
  const Moments mom = moments(grid);
  const double v2_mean = mom.second.trace();
  const double ck = report.hypotheses.metrics.C_K;

  parallel_for(n_eps, [&](int e) {
    const double eps = setup.eps_list[e];
    KineticOptions kopt;
    kopt.dt_scale = setup.dt_kinetic_scale;
    kopt.solve_tol = setup.solve_tol;
    kopt.use_iterative = setup.use_iterative;
    KineticSolver solver(geom, grid, kernel, eps, kopt);
    const KineticState f0 = solver.initial(setup.initial, false);
    const double norm_in = std::sqrt(solver.weighted_l2_sq(f0.f));

    EpsRunSummary& summary = report.runs[e];
    summary.eps = eps;

    const KineticRunResult kr = solver.run(f0, setup.horizon, times);
    require(kr.snapshots.size() == times.size(), "run_sweep: kinetic snapshot mismatch");
    summary.q_entropy = kr.q_entropy_integral;
    summary.entropy_ok = kr.entropy_ok && kr.q_entropy_integral <=
                                              norm_in * norm_in * (1.0 + 1e-10);
    summary.mass_ok = kr.mass_ok;

    double prev_iw = 0;
    {
      const Eigen::VectorXd avg0 = solver.velocity_average(f0);
      prev_iw = geom.cell_volume * avg0.dot(w);
    }
    double prev_t = 0;

    for (int ti = 0; ti < n_t; ++ti) {
      const KineticState& snap = kr.snapshots[ti];
      SnapshotMetrics& row = report.rows[e * n_t + ti];
      row.eps = eps;
      row.t = times[ti];

      const Eigen::VectorXd avg = solver.velocity_average(snap);
      const Eigen::VectorXd& rho = rho_fields[ti];
      const Eigen::MatrixXd& grad = rho_grads[ti];

      double err2 = 0, err2_int = 0;
      for (int c = 0; c < geom.num_cells(); ++c) {
        const double d2 = (avg[c] - rho[c]) * (avg[c] - rho[c]) * geom.cell_volume;
        err2 += d2;
        if (interior[c]) err2_int += d2;
      }
      row.weak_error = std::sqrt(err2);
      row.weak_error_interior = std::sqrt(err2_int);

      // Uniform bound check (entropy gives ||f(t)|| <= ||f_in||).
      if (std::sqrt(solver.weighted_l2_sq(snap.f)) > norm_in * (1.0 + 1e-10))
        summary.uniform_bound_ok = false;

      // Equicontinuity of t -> int <f> w dx against the a-priori constant.
      const double iw = geom.cell_volume * avg.dot(w);
      if (std::isfinite(ck)) {
        const double bound = std::pow(2.0 * ck, 1.5) * std::sqrt(v2_mean) * norm_in *
                             std::sqrt(gw_norm2) * (times[ti] - prev_t);
        const double ratio = bound > 0 ? std::abs(iw - prev_iw) / bound : 0.0;
        summary.equicontinuity_max = std::max(summary.equicontinuity_max, ratio);
        if (ratio > 1.0 + 1e-6) summary.equicontinuity_ok = false;
      }
      prev_iw = iw;
      prev_t = times[ti];

      // Flux: kinetic current vs -M grad rho, and the per-cell algebraic
      // identity current = <b* (1/eps) L f>.
      const Eigen::MatrixXd j = solver.current(snap);
      const Eigen::VectorXd lf = solver.collision_apply(snap);
      double flux2 = 0, id_abs = 0, j_scale = 1.0;
      for (int c = 0; c < geom.num_cells(); ++c) {
        if (geom.region[c] != 0) continue;
        const CellFredholmSolution& sol = field.solution_at_cell(c);
        const Eigen::MatrixXd& M = field.at_cell(c);
        Eigen::VectorXd rhs(geom.dim);
        const auto lf_c = lf.segment(c * grid.size(), grid.size());
        for (int d = 0; d < geom.dim; ++d)
          rhs[d] = mu_dot(grid, sol.b_star.col(d), lf_c);
        const Eigen::VectorXd jc = j.row(c).transpose();
        id_abs = std::max(id_abs, (jc - rhs).cwiseAbs().maxCoeff());
        j_scale = std::max(j_scale, jc.cwiseAbs().maxCoeff());
        flux2 += (jc + M * grad.row(c).transpose()).squaredNorm() * geom.cell_volume;
      }
      row.flux_residual = std::sqrt(flux2);
      row.flux_identity_max = id_abs / j_scale;

      if (strong) {
        double dev2 = 0, dev2_int = 0;
        double gap_min = std::numeric_limits<double>::infinity();
        double gap_sum = 0;
        int gap_count = 0;
        for (int c = 0; c < geom.num_cells(); ++c) {
          if (geom.region[c] != 0) continue;
          const CellFredholmSolution& sol = field.solution_at_cell(c);
          const Eigen::MatrixXd& M = field.at_cell(c);
          const Eigen::VectorXd gc = grad.row(c).transpose();
          double cell_dev2 = 0;
          for (int k = 0; k < grid.size(); ++k) {
            const double dev = (snap.f[c * grid.size() + k] - avg[c]) / eps +
                               sol.b_star.row(k).dot(gc);
            cell_dev2 += grid.weights[k] * dev * dev;
          }
          dev2 += cell_dev2 * geom.cell_volume;
          if (interior[c]) {
            dev2_int += cell_dev2 * geom.cell_volume;
            const double gap = solver.cell_entropy_production(snap, c) -
                               2.0 * gc.dot(M * gc);
            gap_min = std::min(gap_min, gap);
            gap_sum += gap;
            ++gap_count;
          }
        }
        row.strong_error = std::sqrt(dev2);
        row.strong_error_interior = std::sqrt(dev2_int);
        if (gap_count > 0) {
          row.entropy_gap_min = gap_min;
          row.entropy_gap_mean = gap_sum / gap_count;
        }
      }

      row.flatness.resize(m);
      row.incl_mean_gap.resize(m);
      for (int l = 1; l <= m; ++l) {
        const std::vector<int> cells = geom.cells_of_region(l);
        double mean = 0;
        for (int c : cells) mean += avg[c];
        mean /= static_cast<double>(cells.size());
        double flat = 0;
        for (int c : cells)
          for (int k = 0; k < grid.size(); ++k)
            flat = std::max(flat, std::abs(snap.f[c * grid.size() + k] - mean));
        row.flatness[l - 1] = flat;
        const double rho_l = dref.snapshots[ti].u[dop.n_a() + l - 1];
        row.incl_mean_gap[l - 1] = std::abs(mean - rho_l);
      }
    }
  });

  // Verdicts.
  report.flux_identity_ok = true;
  for (const auto& row : report.rows)
    report.flux_identity_ok = report.flux_identity_ok && row.flux_identity_max <= 1e-10;

  report.weak_pass = true;
  for (int ti = 0; ti < n_t; ++ti) {
    std::vector<double> series;
    for (int e = 0; e < n_eps; ++e) series.push_back(report.at(e, ti).weak_error);
    const bool mono = monotone_decreasing(series);
    const bool ratio = series.back() <= setup.weak_ratio * series.front();
    const bool abs_ok = series.back() <= setup.weak_abs_threshold;
    report.weak_pass = report.weak_pass && mono && ratio && abs_ok;
  }

  report.inclusion_ran = m >= 1;
  if (report.inclusion_ran) {
    report.inclusion_pass = true;
    for (int l = 0; l < m; ++l) {
      std::vector<double> series;
      for (int e = 0; e < n_eps; ++e)
        series.push_back(report.at(e, n_t - 1).flatness[l]);
      report.inclusion_pass = report.inclusion_pass && monotone_decreasing(series);
    }
  }

  report.strong_ran = strong;
  if (strong) {
    std::vector<double> series;
    for (int e = 0; e < n_eps; ++e)
      series.push_back(report.at(e, n_t - 1).strong_error);
    report.strong_pass = monotone_decreasing(series);
  }

  report.invariants_ok = report.flux_identity_ok;
  for (const auto& r : report.runs)
    report.invariants_ok = report.invariants_ok && r.entropy_ok && r.mass_ok &&
                           r.uniform_bound_ok && r.equicontinuity_ok;
  return report;
}

ConvergenceReport weak_study(const SweepSetup& setup) { return run_sweep(setup); }

ConvergenceReport inclusion_study(const SweepSetup& setup) {
  require(setup.geom->num_inclusions >= 1,
          "inclusion_study: geometry has no inclusions");
  return run_sweep(setup);
}

ConvergenceReport strong_study(const SweepSetup& setup) {
  // Symmetry of M gates the strong diagnostics; without it the strong limit
  // is an open problem and the study refuses rather than guessing.
  const std::vector<double> probe = {setup.eps_list.empty() ? 1.0 : setup.eps_list.front()};
  const KernelMetrics metrics =
      compute_metrics(*setup.kernel, *setup.geom, *setup.grid, probe);
  const DiffusionField field =
      assemble_field(*setup.kernel, *setup.geom, *setup.grid, metrics);
  require(field.symmetric,
          "strong_study refused: diffusion matrix is not symmetric (strong "
          "convergence is only established for symmetric M)");
  require(strong_data_ok(setup.initial, *setup.geom),
          "strong_study refused: initial data must be velocity independent and "
          "constant on every inclusion");
  ConvergenceReport rep = run_sweep(setup);
  require(rep.strong_ran, "strong_study: strong diagnostics did not run");
  return rep;
}

}  // namespace kindiff
