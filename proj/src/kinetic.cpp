#include "kindiff/kinetic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "kindiff/collision.hpp"
#include "kindiff/errors.hpp"

namespace kindiff {

KineticSolver::KineticSolver(const Geometry& geom, const VelocityGrid& grid,
                             const Kernel& kernel, double eps, KineticOptions opt)
    : geom_(geom), grid_(grid), eps_(eps), opt_(opt) {
  require(eps > 0, "KineticSolver: eps must be positive");
  require(grid.dim == geom.dim, "KineticSolver: geometry/velocity dimension mismatch");
  V_ = grid.size();
  nc_ = geom.num_cells();
  n_ = nc_ * V_;

  // Distinct effective collision operators: A tables as-is, B tables scaled
  // by s(eps). Cells sharing a table and a region scale share the operator.
  const double s = kernel.scaling(eps);
  std::map<std::pair<int, int>, int> slot;
  eff_of_cell_.resize(nc_);
  for (int c = 0; c < nc_; ++c) {
    const int t = kernel.table_of_cell[c];
    const int in_b = geom.region[c] == 0 ? 0 : 1;
    auto [it, fresh] = slot.try_emplace({t, in_b}, static_cast<int>(eff_tables_.size()));
    if (fresh) {
      eff_tables_.push_back(in_b ? Eigen::MatrixXd(s * kernel.tables[t])
                                 : kernel.tables[t]);
      eff_L_.push_back(assemble_collision(eff_tables_.back(), grid).L);
      max_rate_ = std::max(max_rate_, (eff_tables_.back() * grid.weights).maxCoeff());
    }
    eff_of_cell_[c] = it->second;
  }
}

double KineticSolver::default_dt() const {
  const double hmin = geom_.dim == 2 ? std::min(geom_.h[0], geom_.h[1]) : geom_.h[0];
  double dt = eps_ * hmin;
  if (max_rate_ > 0) dt = std::min(dt, eps_ * eps_ / max_rate_);
  return 0.5 * dt;
}

KineticState KineticSolver::initial(const InitialField& field, bool strong_mode) const {
  if (strong_mode) {
    require(field.factor == InitialField::VelocityFactor::None,
            "init_state: strong mode requires velocity-independent initial data");
  }
  const Eigen::VectorXd rho = sample_profile(field, geom_);
  if (strong_mode) {
    for (int l = 1; l <= geom_.num_inclusions; ++l) {
      const std::vector<int> cells = geom_.cells_of_region(l);
      double mn = rho[cells.front()], mx = mn;
      for (int c : cells) {
        mn = std::min(mn, rho[c]);
        mx = std::max(mx, rho[c]);
      }
      const double scale = std::max(1.0, std::abs(mx));
      require(mx - mn <= 1e-12 * scale,
              "init_state: strong mode requires data constant on inclusion B_" +
                  std::to_string(l));
    }
  }
  KineticState st;
  st.t = 0;
  st.eps = eps_;
  st.f.resize(n_);
  for (int c = 0; c < nc_; ++c)
    for (int k = 0; k < V_; ++k)
      st.f[c * V_ + k] = rho[c] * field.factor_at(grid_.node(k));
  require(st.f.minCoeff() >= 0, "init_state: initial data must be nonnegative");
  return st;
}

void KineticSolver::build_system(double dt) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(n_) * (V_ + 2 * geom_.dim + 1));
  const double cdt = dt / (eps_ * eps_);
  for (int c = 0; c < nc_; ++c) {
    const Eigen::MatrixXd& L = eff_L_[eff_of_cell_[c]];
    const int base = c * V_;
    for (int v = 0; v < V_; ++v) {
      for (int w = 0; w < V_; ++w) {
        const double coeff = cdt * L(v, w) + (v == w ? 1.0 : 0.0);
        if (coeff != 0.0) trip.emplace_back(base + v, base + w, coeff);
      }
    }
    const int i = geom_.ci(c), j = geom_.cj(c);
    for (int k = 0; k < V_; ++k) {
      for (int d = 0; d < geom_.dim; ++d) {
        const double vd = grid_.nodes(k, d);
        if (vd == 0.0) continue;  // grazing node: no flux through axis-d faces
        const double rate = dt * std::abs(vd) / (eps_ * geom_.h[d]);
        trip.emplace_back(base + k, base + k, rate);
        const int ni = i + (d == 0 ? (vd > 0 ? -1 : +1) : 0);
        const int nj = j + (d == 1 ? (vd > 0 ? -1 : +1) : 0);
        if (geom_.in_bounds(ni, nj)) {
          trip.emplace_back(base + k, geom_.index(ni, nj) * V_ + k, -rate);
        }
        // Out-of-bounds upwind neighbor: zero inflow (absorbing boundary).
      }
    }
  }
  system_.resize(n_, n_);
  system_.setFromTriplets(trip.begin(), trip.end());
  system_.makeCompressed();
  if (!opt_.use_iterative) {
    lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(system_);
    require(lu_->info() == Eigen::Success, "KineticSolver: sparse factorization failed");
  }
  built_dt_ = dt;
}

StepDiagnostics KineticSolver::step(KineticState& state, double dt) {
  require(dt > 0, "KineticSolver::step: dt must be positive");
  if (dt != built_dt_) build_system(dt);

  const Eigen::VectorXd fn = state.f;
  const double mass_n = mass(fn);
  const double l2_n = weighted_l2_sq(fn);

  Eigen::VectorXd fnew;
  double resid = 0;
  const double rhs_norm = fn.norm();
  if (opt_.use_iterative) {
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>> it;
    it.setTolerance(std::min(1e-13, opt_.solve_tol * 1e-2));
    it.setMaxIterations(opt_.max_iterations);
    it.compute(system_);
    fnew = it.solveWithGuess(fn, fn);
    resid = rhs_norm > 0 ? (system_ * fnew - fn).norm() / rhs_norm : 0.0;
    if (resid > opt_.solve_tol) {
      std::ostringstream os;
      os << "KineticSolver: iterative solve did not converge (iterations "
         << it.iterations() << ", estimated error " << it.error()
         << ", verified residual " << resid << ")";
      throw Error(os.str());
    }
  } else {
    fnew = lu_->solve(fn);
    resid = rhs_norm > 0 ? (system_ * fnew - fn).norm() / rhs_norm : 0.0;
    require(resid <= opt_.solve_tol,
            "KineticSolver: direct solve residual above tolerance");
  }

  state.f = std::move(fnew);
  state.t += dt;

  StepDiagnostics d;
  d.t = state.t;
  d.solve_residual = resid;
  d.mass = mass(state.f);
  d.outflow_rate = outflow_rate(state.f);
  const double defect = std::abs(d.mass - mass_n + dt * d.outflow_rate);
  const double scale = std::max({mass_n, d.mass, dt * d.outflow_rate, 1e-300});
  d.mass_balance_residual = defect / scale;
  d.l2_sq = weighted_l2_sq(state.f);
  d.entropy_production = entropy_production(state.f);
  d.entropy_defect = d.l2_sq + dt * d.entropy_production - l2_n;
  return d;
}

KineticRunResult KineticSolver::run(const KineticState& start, double horizon,
                                    const std::vector<double>& snapshot_times) {
  require(horizon > 0, "KineticSolver::run: horizon must be positive");
  for (size_t i = 0; i < snapshot_times.size(); ++i) {
    require(snapshot_times[i] >= 0 && snapshot_times[i] <= horizon + 1e-12,
            "KineticSolver::run: snapshot times must lie within the horizon");
    require(i == 0 || snapshot_times[i] > snapshot_times[i - 1],
            "KineticSolver::run: snapshot times must be increasing");
  }
  const double dt_target = opt_.dt.value_or(opt_.dt_scale * default_dt());

  KineticRunResult result;
  KineticState state = start;
  std::vector<double> marks = snapshot_times;
  if (marks.empty() || std::abs(marks.back() - horizon) > 1e-12) marks.push_back(horizon);

  if (!snapshot_times.empty() && snapshot_times.front() == 0.0) {
    result.snapshots.push_back(state);
  }

  double t_prev = 0;
  for (double mark : marks) {
    if (mark <= 0) continue;
    const double seg = mark - t_prev;
    const int nsteps = std::max(1, static_cast<int>(std::ceil(seg / dt_target - 1e-12)));
    const double dt = seg / nsteps;
    for (int s = 0; s < nsteps; ++s) {
      StepDiagnostics d = step(state, dt);
      result.q_entropy_integral += dt * d.entropy_production;
      if (d.entropy_defect > entropy_tol() * std::max(1.0, d.l2_sq)) result.entropy_ok = false;
      if (d.mass_balance_residual > mass_tol()) result.mass_ok = false;
      result.steps.push_back(d);
    }
    state.t = mark;  // suppress roundoff drift at snapshot marks
    const bool wanted =
        std::any_of(snapshot_times.begin(), snapshot_times.end(),
                    [&](double t) { return std::abs(t - mark) <= 1e-12; });
    if (wanted) result.snapshots.push_back(state);
    t_prev = mark;
  }
  return result;
}

Eigen::VectorXd KineticSolver::velocity_average(const KineticState& s) const {
  Eigen::VectorXd avg(nc_);
  for (int c = 0; c < nc_; ++c)
    avg[c] = grid_.weights.dot(s.f.segment(c * V_, V_));
  return avg;
}

Eigen::MatrixXd KineticSolver::current(const KineticState& s) const {
  Eigen::MatrixXd j(nc_, geom_.dim);
  for (int c = 0; c < nc_; ++c) {
    const Eigen::VectorXd fc = s.f.segment(c * V_, V_);
    for (int d = 0; d < geom_.dim; ++d)
      j(c, d) = mu_dot(grid_, grid_.nodes.col(d), fc) / eps_;
  }
  return j;
}

Eigen::VectorXd KineticSolver::collision_apply(const KineticState& s) const {
  Eigen::VectorXd out(n_);
  for (int c = 0; c < nc_; ++c)
    out.segment(c * V_, V_) = eff_L_[eff_of_cell_[c]] * s.f.segment(c * V_, V_) / eps_;
  return out;
}

double KineticSolver::mass(const Eigen::VectorXd& f) const {
  double m = 0;
  for (int c = 0; c < nc_; ++c) m += grid_.weights.dot(f.segment(c * V_, V_));
  return m * geom_.cell_volume;
}

double KineticSolver::outflow_rate(const Eigen::VectorXd& f) const {
  double out = 0;
  for (int c = 0; c < nc_; ++c) {
    const int i = geom_.ci(c), j = geom_.cj(c);
    for (int d = 0; d < geom_.dim; ++d) {
      const bool at_lo = (d == 0 ? i == 0 : j == 0);
      const bool at_hi = (d == 0 ? i == geom_.cells[0] - 1 : j == geom_.cells[1] - 1);
      if (!at_lo && !at_hi) continue;
      for (int k = 0; k < V_; ++k) {
        const double vd = grid_.nodes(k, d);
        if (at_hi && vd > 0) out += grid_.weights[k] * vd * f[c * V_ + k] / geom_.h[d];
        if (at_lo && vd < 0) out -= grid_.weights[k] * vd * f[c * V_ + k] / geom_.h[d];
      }
    }
  }
  return out * geom_.cell_volume / eps_;
}

double KineticSolver::weighted_l2_sq(const Eigen::VectorXd& f) const {
  double s = 0;
  for (int c = 0; c < nc_; ++c) {
    const Eigen::VectorXd fc = f.segment(c * V_, V_);
    s += grid_.weights.dot(fc.cwiseProduct(fc));
  }
  return s * geom_.cell_volume;
}

double KineticSolver::entropy_production(const Eigen::VectorXd& f) const {
  double total = 0;
  for (int c = 0; c < nc_; ++c) {
    const Eigen::MatrixXd& k = eff_tables_[eff_of_cell_[c]];
    const auto fc = f.segment(c * V_, V_);
    double s = 0;
    for (int v = 0; v < V_; ++v)
      for (int w = 0; w < V_; ++w) {
        const double dq = (fc[v] - fc[w]) / eps_;
        s += grid_.weights[v] * grid_.weights[w] * k(v, w) * dq * dq;
      }
    total += s;
  }
  return total * geom_.cell_volume;
}

double KineticSolver::cell_entropy_production(const KineticState& s, int cell) const {
  const Eigen::MatrixXd& k = eff_tables_[eff_of_cell_[cell]];
  const auto fc = s.f.segment(cell * V_, V_);
  double out = 0;
  for (int v = 0; v < V_; ++v)
    for (int w = 0; w < V_; ++w) {
      const double dq = (fc[v] - fc[w]) / s.eps;
      out += grid_.weights[v] * grid_.weights[w] * k(v, w) * dq * dq;
    }
  return out;
}

}  // namespace kindiff
