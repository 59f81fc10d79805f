#include "kindiff/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "kindiff/errors.hpp"
#include "kindiff/harness.hpp"
#include "kindiff/io.hpp"
#include "kindiff/parallel.hpp"

namespace kindiff {

namespace {

namespace fs = std::filesystem;

std::string fd(double x) { return format_double(x); }

std::vector<std::pair<std::string, std::string>> base_metadata(const RunConfig& cfg,
                                                               const std::string& mode) {
  return {
      {"tool", kToolVersion},
      {"mode", mode},
      {"config", cfg.source_path},
      {"config_hash", std::to_string(fnv1a64(cfg.source_text))},
      {"deterministic", cfg.deterministic ? "true" : "false"},
      {"solve_tol", fd(cfg.solve_tol)},
      {"sdb_tolerance", fd(cfg.kernel.sdb_tolerance)},
  };
}

void sidecar(const RunConfig& cfg, const std::string& mode, const std::string& artifact) {
  write_metadata(artifact + ".meta", base_metadata(cfg, mode));
}

int run_check(const RunConfig& cfg, const std::string& dir) {
  const BuiltModel model = build_model(cfg);
  const HypothesisReport rep =
      hypothesis_report(model.kernel, model.geom, model.grid, cfg.eps_list);
  {
    std::ofstream out(dir + "/hypotheses.txt");
    out << rep.render_text();
  }
  write_metadata(dir + "/hypotheses.kv", rep.render_kv());
  sidecar(cfg, "check", dir + "/hypotheses.txt");
  std::cout << rep.render_text();
  return 0;  // detecting a failing hypothesis is a successful check
}

int run_diffmat(const RunConfig& cfg, const std::string& dir) {
  const BuiltModel model = build_model(cfg);
  const KernelMetrics metrics =
      compute_metrics(model.kernel, model.geom, model.grid, cfg.eps_list);
  const DiffusionField field =
      assemble_field(model.kernel, model.geom, model.grid, metrics);

  const int N = model.grid.dim;
  std::vector<std::string> header{"cell_id"};
  for (int d = 0; d < model.geom.dim; ++d) header.push_back("x" + std::to_string(d + 1));
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      header.push_back("M_" + std::to_string(i + 1) + std::to_string(j + 1));
  CsvWriter csv(dir + "/diffusion_field.csv", header);
  double lmin = std::numeric_limits<double>::infinity(), lmax = 0;
  for (size_t s = 0; s < field.a_cells.size(); ++s) {
    const int c = field.a_cells[s];
    std::vector<std::string> row{std::to_string(c)};
    const Eigen::VectorXd x = model.geom.cell_center(c);
    for (int d = 0; d < model.geom.dim; ++d) row.push_back(fd(x[d]));
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) row.push_back(fd(field.M[s](i, j)));
    csv.row(row);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        0.5 * (field.M[s] + field.M[s].transpose()));
    lmin = std::min(lmin, es.eigenvalues().minCoeff());
    lmax = std::max(lmax, es.eigenvalues().maxCoeff());
  }
  sidecar(cfg, "diffmat", dir + "/diffusion_field.csv");
  {
    std::ofstream out(dir + "/diffusion_field_summary.txt");
    out << "cells " << field.a_cells.size() << "\n";
    out << "symmetric " << (field.symmetric ? "yes" : "no") << "\n";
    out << "max_asymmetry " << fd(field.max_asymmetry) << "\n";
    out << "min_eigenvalue " << fd(lmin) << "\n";
    out << "max_eigenvalue " << fd(lmax) << "\n";
    out << "coercivity_floor " << fd(moments(model.grid).beta / (2 * metrics.C_K)) << "\n";
    out << "entry_bound " << fd(field.bound_2ck) << "\n";
  }
  std::cout << "diffmat: wrote " << field.a_cells.size() << " cells, symmetric="
            << (field.symmetric ? "yes" : "no") << ", eigenvalues in [" << lmin << ", "
            << lmax << "]\n";
  return 0;
}

int run_kinetic(const RunConfig& cfg, const std::string& dir) {
  const BuiltModel model = build_model(cfg);
  const double eps = cfg.eps_list.front();
  KineticOptions opt;
  opt.dt_scale = cfg.dt_kinetic_scale;
  opt.solve_tol = cfg.solve_tol;
  opt.use_iterative = cfg.use_iterative;
  KineticSolver solver(model.geom, model.grid, model.kernel, eps, opt);
  const KineticState f0 = solver.initial(cfg.initial, false);
  const KineticRunResult res = solver.run(f0, cfg.horizon, cfg.snapshot_times);

  {
    CsvWriter csv(dir + "/kinetic_trajectory.csv", {"t", "cell_id", "v_index", "f"});
    for (const auto& snap : res.snapshots)
      for (int c = 0; c < model.geom.num_cells(); ++c)
        for (int k = 0; k < model.grid.size(); ++k)
          csv.row({fd(snap.t), std::to_string(c), std::to_string(k),
                   fd(snap.f[c * model.grid.size() + k])});
    sidecar(cfg, "kinetic", dir + "/kinetic_trajectory.csv");
  }
  {
    CsvWriter csv(dir + "/kinetic_diagnostics.csv",
                  {"t", "mass", "outflow_rate", "mass_balance_residual", "l2_sq",
                   "entropy_production", "entropy_defect", "solve_residual"});
    for (const auto& s : res.steps)
      csv.row({fd(s.t), fd(s.mass), fd(s.outflow_rate), fd(s.mass_balance_residual),
               fd(s.l2_sq), fd(s.entropy_production), fd(s.entropy_defect),
               fd(s.solve_residual)});
    sidecar(cfg, "kinetic", dir + "/kinetic_diagnostics.csv");
  }
  {
    CsvWriter csv(dir + "/kinetic_current.csv", {"t", "cell_id", "j1", "j2"});
    for (const auto& snap : res.snapshots) {
      const Eigen::MatrixXd j = solver.current(snap);
      for (int c = 0; c < model.geom.num_cells(); ++c)
        csv.row({fd(snap.t), std::to_string(c), fd(j(c, 0)),
                 model.geom.dim == 2 ? fd(j(c, 1)) : "0"});
    }
    sidecar(cfg, "kinetic", dir + "/kinetic_current.csv");
  }
  std::cout << "kinetic: eps=" << eps << ", " << res.steps.size() << " steps, entropy "
            << (res.entropy_ok ? "ok" : "VIOLATED") << ", mass balance "
            << (res.mass_ok ? "ok" : "VIOLATED") << "\n";
  return (res.entropy_ok && res.mass_ok) ? 0 : 1;
}

int run_diffusion(const RunConfig& cfg, const std::string& dir) {
  const BuiltModel model = build_model(cfg);
  const KernelMetrics metrics =
      compute_metrics(model.kernel, model.geom, model.grid, cfg.eps_list);
  const DiffusionField field =
      assemble_field(model.kernel, model.geom, model.grid, metrics);
  DiffusionOperator dop(model.geom, field);
  if (dop.anisotropy_warning()) {
    std::cerr << "warning: M has significant off-diagonal entries; the two-point "
                 "flux stencil is inconsistent for strongly anisotropic fields\n";
  }
  const DiffusionState rho0 = dop.project_initial(cfg.initial, model.grid);
  const double dt = cfg.dt_diffusion > 0 ? cfg.dt_diffusion : cfg.horizon / 2000.0;
  const DiffusionRunResult res = dop.run(rho0, cfg.horizon, cfg.snapshot_times, dt);

  {
    CsvWriter csv(dir + "/diffusion_trajectory.csv", {"t", "id", "rho"});
    for (const auto& snap : res.snapshots) {
      for (int s = 0; s < dop.n_a(); ++s) {
        // id column carries the A-cell index.
        int cell = -1;
        for (int c = 0; c < model.geom.num_cells(); ++c)
          if (model.geom.region[c] == 0 && s == field.slot_of_cell[c]) { cell = c; break; }
        csv.row({fd(snap.t), std::to_string(cell), fd(snap.u[s])});
      }
      for (int l = 1; l <= model.geom.num_inclusions; ++l)
        csv.row({fd(snap.t), "incl_" + std::to_string(l), fd(snap.u[dop.n_a() + l - 1])});
    }
    sidecar(cfg, "diffusion", dir + "/diffusion_trajectory.csv");
  }
  {
    CsvWriter csv(dir + "/diffusion_energy.csv",
                  {"t", "energy", "dirichlet_energy", "energy_defect",
                   "incl_flux_residual", "mass", "mass_balance_residual"});
    for (const auto& s : res.steps)
      csv.row({fd(s.t), fd(s.energy), fd(s.dirichlet_energy), fd(s.energy_defect),
               fd(s.incl_flux_residual), fd(s.mass), fd(s.mass_balance_residual)});
    sidecar(cfg, "diffusion", dir + "/diffusion_energy.csv");
  }
  std::cout << "diffusion: " << res.steps.size() << " steps, energy "
            << (res.energy_ok ? "ok" : "VIOLATED") << ", inclusion flux "
            << (res.flux_ok ? "ok" : "VIOLATED") << ", mass "
            << (res.mass_ok ? "ok" : "VIOLATED") << "\n";
  return (res.energy_ok && res.flux_ok && res.mass_ok) ? 0 : 1;
}

int run_converge(const RunConfig& cfg, const std::string& dir) {
  const BuiltModel model = build_model(cfg);
  SweepSetup setup;
  setup.geom = &model.geom;
  setup.grid = &model.grid;
  setup.kernel = &model.kernel;
  setup.initial = cfg.initial;
  setup.eps_list = cfg.eps_list;
  setup.horizon = cfg.horizon;
  setup.snapshot_times = cfg.snapshot_times;
  setup.interior_margin = cfg.interior_margin;
  setup.force = cfg.force;
  setup.weak_ratio = cfg.weak_ratio;
  setup.weak_abs_threshold = cfg.weak_abs_threshold;
  setup.dt_kinetic_scale = cfg.dt_kinetic_scale;
  setup.dt_diffusion = cfg.dt_diffusion;
  setup.solve_tol = cfg.solve_tol;
  setup.use_iterative = cfg.use_iterative;

  const ConvergenceReport rep = run_sweep(setup);
  const int n_t = static_cast<int>(rep.times.size());

  {
    CsvWriter csv(dir + "/report.csv",
                  {"eps", "t", "weak_error", "weak_error_interior", "flux_residual",
                   "flux_identity_max", "strong_error", "strong_error_interior",
                   "entropy_gap_min", "entropy_gap_mean"});
    for (const auto& r : rep.rows)
      csv.row({fd(r.eps), fd(r.t), fd(r.weak_error), fd(r.weak_error_interior),
               fd(r.flux_residual), fd(r.flux_identity_max), fd(r.strong_error),
               fd(r.strong_error_interior), fd(r.entropy_gap_min), fd(r.entropy_gap_mean)});
    sidecar(cfg, "converge", dir + "/report.csv");
  }
  if (!rep.rows.empty() && !rep.rows.front().flatness.empty()) {
    CsvWriter csv(dir + "/inclusions.csv", {"eps", "t", "inclusion", "flatness", "mean_gap"});
    for (const auto& r : rep.rows)
      for (size_t l = 0; l < r.flatness.size(); ++l)
        csv.row({fd(r.eps), fd(r.t), std::to_string(l + 1), fd(r.flatness[l]),
                 fd(r.incl_mean_gap[l])});
    sidecar(cfg, "converge", dir + "/inclusions.csv");
  }
  {
    CsvWriter csv(dir + "/runs.csv", {"eps", "q_entropy", "entropy_ok", "mass_ok",
                                      "uniform_bound_ok", "equicontinuity_ok"});
    for (const auto& r : rep.runs)
      csv.row({fd(r.eps), fd(r.q_entropy), r.entropy_ok ? "1" : "0", r.mass_ok ? "1" : "0",
               r.uniform_bound_ok ? "1" : "0", r.equicontinuity_ok ? "1" : "0"});
    sidecar(cfg, "converge", dir + "/runs.csv");
  }

  // Log-log error plots, one series per snapshot time.
  auto plot = [&](const std::string& name, auto getter, const std::string& ylabel) {
    std::vector<SvgSeries> series;
    for (int ti = 0; ti < n_t; ++ti) {
      SvgSeries s;
      s.label = "t = " + fd(rep.times[ti]);
      for (size_t e = 0; e < rep.eps_list.size(); ++e) {
        s.x.push_back(rep.eps_list[e]);
        s.y.push_back(getter(rep.at(static_cast<int>(e), ti)));
      }
      series.push_back(std::move(s));
    }
    SvgPlotOptions opt;
    opt.title = ylabel + " vs eps";
    opt.xlabel = "eps";
    opt.ylabel = ylabel;
    write_svg_plot(dir + "/" + name, series, opt);
  };
  plot("weak_error.svg", [](const SnapshotMetrics& r) { return r.weak_error; },
       "weak error");
  if (rep.strong_ran)
    plot("strong_error.svg", [](const SnapshotMetrics& r) { return r.strong_error; },
         "strong error");
  if (rep.inclusion_ran && !rep.rows.empty()) {
    std::vector<SvgSeries> series;
    const size_t m = rep.rows.front().flatness.size();
    for (size_t l = 0; l < m; ++l) {
      SvgSeries s;
      s.label = "inclusion " + std::to_string(l + 1);
      for (size_t e = 0; e < rep.eps_list.size(); ++e) {
        s.x.push_back(rep.eps_list[e]);
        s.y.push_back(rep.at(static_cast<int>(e), n_t - 1).flatness[l]);
      }
      series.push_back(std::move(s));
    }
    SvgPlotOptions opt;
    opt.title = "inclusion flatness vs eps";
    opt.xlabel = "eps";
    opt.ylabel = "flatness";
    write_svg_plot(dir + "/flatness.svg", series, opt);
  }

  std::ostringstream sum;
  sum << "convergence study\n";
  sum << "  hypotheses applicable: " << (rep.hypotheses.applicable ? "yes" : "no") << "\n";
  sum << "  diffusion matrix symmetric: " << (rep.field_symmetric ? "yes" : "no") << "\n";
  sum << "  weak study: " << (rep.weak_pass ? "PASS" : "FAIL") << "\n";
  if (rep.inclusion_ran)
    sum << "  inclusion study: " << (rep.inclusion_pass ? "PASS" : "FAIL") << "\n";
  if (rep.strong_ran)
    sum << "  strong study: " << (rep.strong_pass ? "PASS" : "FAIL") << "\n";
  sum << "  flux identity: " << (rep.flux_identity_ok ? "ok" : "VIOLATED") << "\n";
  sum << "  run invariants: " << (rep.invariants_ok ? "ok" : "VIOLATED") << "\n";
  {
    std::ofstream out(dir + "/summary.txt");
    out << sum.str();
  }
  std::cout << sum.str();
  return rep.invariants_ok ? 0 : 1;
}

}  // namespace

int run_subcommand(const RunConfig& cfg, const std::string& mode) {
  set_single_threaded(cfg.deterministic);
  fs::create_directories(cfg.output);
  const std::string dir = cfg.output;
  if (mode == "check") return run_check(cfg, dir);
  if (mode == "diffmat") return run_diffmat(cfg, dir);
  if (mode == "kinetic") return run_kinetic(cfg, dir);
  if (mode == "diffusion") return run_diffusion(cfg, dir);
  if (mode == "converge") return run_converge(cfg, dir);
  throw Error("run_subcommand: unknown mode '" + mode + "'");
}

}  // namespace kindiff
