#include "kindiff/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "kindiff/errors.hpp"

namespace kindiff {

namespace {
double harmonic(double a, double b) {
  if (a <= 0 || b <= 0) return 0.0;
  return 2.0 * a * b / (a + b);
}
}  // namespace

DiffusionOperator::DiffusionOperator(const Geometry& geom, const DiffusionField& field)
    : geom_(geom) {
  m_ = geom.num_inclusions;
  slot_of_cell_ = field.slot_of_cell;
  n_a_ = static_cast<int>(field.a_cells.size());
  n_ = n_a_ + m_;

  mass_.resize(n_);
  for (int s = 0; s < n_a_; ++s) mass_[s] = geom.cell_volume;
  for (int l = 1; l <= m_; ++l) mass_[n_a_ + l - 1] = geom.region_volume(l);

  for (const Eigen::MatrixXd& M : field.M) {
    double offdiag = 0, diag = 0;
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j)
        (i == j ? diag : offdiag) = std::max(i == j ? diag : offdiag, std::abs(M(i, j)));
    if (offdiag > 1e-10 * std::max(1.0, diag)) anisotropy_warning_ = true;
  }

  auto unknown_of = [&](int cell) {
    const int r = geom.region[cell];
    return r == 0 ? slot_of_cell_[cell] : n_a_ + r - 1;
  };
  auto m_dd = [&](int cell, int d) { return field.at_cell(cell)(d, d); };

  std::vector<Eigen::Triplet<double>> trip;
  boundary_t_ = Eigen::VectorXd::Zero(n_);
  const double vol = geom.cell_volume;
  for (int c = 0; c < geom.num_cells(); ++c) {
    const int i = geom.ci(c), j = geom.cj(c);
    const bool c_in_a = geom.region[c] == 0;
    for (int d = 0; d < geom.dim; ++d) {
      const double t_unit = vol / (geom.h[d] * geom.h[d]);
      // Interior face toward the positive side (each face visited once).
      const int ni = i + (d == 0 ? 1 : 0), nj = j + (d == 1 ? 1 : 0);
      if (geom.in_bounds(ni, nj)) {
        const int nb = geom.index(ni, nj);
        const bool nb_in_a = geom.region[nb] == 0;
        double T = 0;
        if (c_in_a && nb_in_a) {
          T = t_unit * harmonic(m_dd(c, d), m_dd(nb, d));
        } else if (c_in_a != nb_in_a) {
          // Interface with a merged inclusion: only the A half-cell resists.
          T = t_unit * 2.0 * m_dd(c_in_a ? c : nb, d);
        }
        if (T != 0) {
          const int u = unknown_of(c), w = unknown_of(nb);
          trip.emplace_back(u, u, T);
          trip.emplace_back(w, w, T);
          trip.emplace_back(u, w, -T);
          trip.emplace_back(w, u, -T);
        }
      }
      // Domain-boundary faces: homogeneous Dirichlet through a ghost value.
      for (int side : {-1, +1}) {
        const int bi = i + (d == 0 ? side : 0), bj = j + (d == 1 ? side : 0);
        if (geom.in_bounds(bi, bj)) continue;
        require(c_in_a, "DiffusionOperator: inclusion cell on the domain boundary");
        const double T = t_unit * 2.0 * m_dd(c, d);
        const int u = unknown_of(c);
        trip.emplace_back(u, u, T);
        boundary_t_[u] += T;
      }
    }
  }
  K_.resize(n_, n_);
  K_.setFromTriplets(trip.begin(), trip.end());
  K_.makeCompressed();
}

DiffusionState DiffusionOperator::project_initial(const InitialField& field,
                                                  const VelocityGrid& grid) const {
  double factor_mean = 0;
  for (int k = 0; k < grid.size(); ++k)
    factor_mean += grid.weights[k] * field.factor_at(grid.node(k));
  Eigen::VectorXd per_cell(geom_.num_cells());
  for (int c = 0; c < geom_.num_cells(); ++c)
    per_cell[c] = field.profile_at(geom_.cell_center(c), geom_) * factor_mean;
  return project_cell_field(per_cell);
}

DiffusionState DiffusionOperator::project_cell_field(const Eigen::VectorXd& per_cell) const {
  require(per_cell.size() == geom_.num_cells(),
          "project_cell_field: per-cell field size mismatch");
  DiffusionState st;
  st.t = 0;
  st.u = Eigen::VectorXd::Zero(n_);
  for (int c = 0; c < geom_.num_cells(); ++c) {
    if (geom_.region[c] == 0) {
      st.u[slot_of_cell_[c]] = per_cell[c];
    } else {
      st.u[n_a_ + geom_.region[c] - 1] +=
          per_cell[c] * geom_.cell_volume / geom_.region_volume(geom_.region[c]);
    }
  }
  return st;
}

Eigen::VectorXd DiffusionOperator::reconstruct(const DiffusionState& s) const {
  Eigen::VectorXd field(geom_.num_cells());
  for (int c = 0; c < geom_.num_cells(); ++c) {
    const int r = geom_.region[c];
    field[c] = r == 0 ? s.u[slot_of_cell_[c]] : s.u[n_a_ + r - 1];
  }
  return field;
}

double DiffusionOperator::energy(const DiffusionState& s) const {
  return 0.5 * s.u.dot(mass_.cwiseProduct(s.u));
}

void DiffusionOperator::factorize(double dt) {
  Eigen::SparseMatrix<double> mass_term(n_, n_);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n_);
  for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, mass_[i] / dt);
  mass_term.setFromTriplets(trip.begin(), trip.end());
  system_ = K_ + mass_term;
  system_.makeCompressed();
  ldlt_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  ldlt_->compute(system_);
  require(ldlt_->info() == Eigen::Success, "DiffusionOperator: factorization failed");
  built_dt_ = dt;
}

DiffusionStepDiagnostics DiffusionOperator::step(DiffusionState& state, double dt) {
  require(dt > 0, "DiffusionOperator::step: dt must be positive");
  if (dt != built_dt_) factorize(dt);

  const Eigen::VectorXd un = state.u;
  const double energy_n = energy(state);
  const double mass_n = mass_.dot(un);

  state.u = ldlt_->solve(mass_.cwiseProduct(un) / dt);
  state.t += dt;

  DiffusionStepDiagnostics d;
  d.t = state.t;
  d.energy = energy(state);
  d.dirichlet_energy = state.u.dot(K_ * state.u);
  d.energy_defect = d.energy - energy_n + dt * d.dirichlet_energy;
  d.mass = mass_.dot(state.u);

  const Eigen::VectorXd Ku = K_ * state.u;
  double flux_res = 0;
  for (int l = 0; l < m_; ++l) {
    const int r = n_a_ + l;
    const double lhs = mass_[r] * (state.u[r] - un[r]) / dt;
    const double scale = std::max({std::abs(lhs), std::abs(Ku[r]), 1.0});
    flux_res = std::max(flux_res, std::abs(lhs + Ku[r]) / scale);
  }
  d.incl_flux_residual = flux_res;

  const double outflow = boundary_t_.dot(state.u);
  const double defect = std::abs(d.mass - mass_n + dt * outflow);
  const double scale = std::max({std::abs(mass_n), std::abs(d.mass), dt * std::abs(outflow), 1e-300});
  d.mass_balance_residual = defect / scale;
  return d;
}

DiffusionRunResult DiffusionOperator::run(const DiffusionState& start, double horizon,
                                          const std::vector<double>& snapshot_times,
                                          double dt_target) {
  require(horizon > 0, "DiffusionOperator::run: horizon must be positive");
  DiffusionRunResult result;
  DiffusionState state = start;

  std::vector<double> marks = snapshot_times;
  if (marks.empty() || std::abs(marks.back() - horizon) > 1e-12) marks.push_back(horizon);
  if (!snapshot_times.empty() && snapshot_times.front() == 0.0)
    result.snapshots.push_back(state);

  double t_prev = 0;
  for (double mark : marks) {
    if (mark <= 0) continue;
    const double seg = mark - t_prev;
    const int nsteps = std::max(1, static_cast<int>(std::ceil(seg / dt_target - 1e-12)));
    const double dt = seg / nsteps;
    for (int s = 0; s < nsteps; ++s) {
      const DiffusionStepDiagnostics d = step(state, dt);
      if (d.energy_defect > energy_tol() * std::max(1.0, d.energy)) result.energy_ok = false;
      if (d.incl_flux_residual > flux_tol()) result.flux_ok = false;
      if (d.mass_balance_residual > flux_tol()) result.mass_ok = false;
      result.steps.push_back(d);
    }
    state.t = mark;
    const bool wanted =
        std::any_of(snapshot_times.begin(), snapshot_times.end(),
                    [&](double t) { return std::abs(t - mark) <= 1e-12; });
    if (wanted) result.snapshots.push_back(state);
    t_prev = mark;
  }
  return result;
}

}  // namespace kindiff
