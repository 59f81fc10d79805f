#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "kindiff/geometry.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

// Epsilon-scaling of the kernel on the inclusions: k_eps = s(eps) * k_base.
struct ScalingLaw {
  enum class Kind { Zero, Linear, Quadratic, Log, Constant };
  Kind kind = Kind::Linear;
  double gamma = 1.0;  // Log: s = |ln eps|^(-gamma)

  double operator()(double eps) const;
  std::string name() const;
};

ScalingLaw parse_scaling_law(const std::string& name, double gamma = 1.0);

struct KernelSpec {
  enum class Type { Isotropic, AnisotropicDot, Tabulated };
  Type type = Type::Isotropic;

  // Isotropic: k(x,v,w) = sigma(x) on A. sigma_regions overrides sigma for
  // cells whose center lies in the shape (applied in order).
  double sigma = 1.0;
  std::vector<std::pair<RegionShape, double>> sigma_regions;
  double b_base = 1.0;  // base kernel value on B (scaled by s(eps))

  // AnisotropicDot: k(x,v,w) = max(0, c0 + c1 * v.w) everywhere on A.
  double c0 = 1.0, c1 = 0.0;

  // Tabulated: rows (cell_id, v_index, w_index, value) read from CSV.
  std::string table_path;

  ScalingLaw scaling;
  double sdb_tolerance = 1e-12;  // relative to the largest scattering rate
};

// Scattering kernel over the domain: per-cell V x V tables k(v,w), deduplicated.
// A-cell tables are eps-independent; B-cell tables hold the base kernel and are
// scaled by s(eps) at use time.
struct Kernel {
  std::vector<Eigen::MatrixXd> tables;     // unique tables, entry (v,w) = k(x,v,w)
  std::vector<Eigen::VectorXd> rates;      // per table: a(v) = sum_w mu_w k(v,w)
  std::vector<int> table_of_cell;          // per cell
  ScalingLaw scaling;
  double sdb_residual = 0.0;               // max over tables

  const Eigen::MatrixXd& table(int cell) const { return tables[table_of_cell[cell]]; }
  // Scaling factor applying to the stored table of `cell` at this eps.
  double scale_at(const Geometry& g, int cell, double eps) const {
    return g.region[cell] == 0 ? 1.0 : scaling(eps);
  }
};

Kernel build_kernel(const KernelSpec& spec, const Geometry& geom, const VelocityGrid& grid);

struct KernelMetrics {
  double C_K = 0.0;  // sup over A cells and v of sum_w mu_w (k + 1/k(v,w) + 1/k(w,v))
  double sdb_residual = 0.0;
  double sup_a_A = 0.0;                  // max scattering rate on A
  double sup_a_B_base = 0.0;             // max base rate on B (unscaled)
  double sup_inv_k_B_base = 0.0;         // max over B,v of sum_w mu_w / k_base; inf if any zero
  std::vector<double> eps;               // evaluation points
  std::vector<double> sup_a_on_B;        // s(eps) * sup_a_B_base
  std::vector<double> h3_margin;         // eps^2 * sup_inv_k_B_base / s(eps)
};

KernelMetrics compute_metrics(const Kernel& kernel, const Geometry& geom,
                              const VelocityGrid& grid, const std::vector<double>& eps_list);

enum class Verdict { Pass, Fail, NotApplicable };
std::string to_string(Verdict v);

struct HypothesisReport {
  Verdict h1 = Verdict::NotApplicable;  // scattering rate vanishes on B
  Verdict h2 = Verdict::NotApplicable;  // eps-independent kernel on A with finite C_K
  Verdict h3 = Verdict::NotApplicable;  // reciprocal kernel bound o(1/eps^2) on B
  Verdict h4 = Verdict::NotApplicable;  // exit-time ergodicity of every inclusion
  bool applicable = false;              // h1 and h2 and (h3 or h4)
  KernelMetrics metrics;
  std::vector<ErgodicityResult> ergodicity;  // per inclusion (empty if B empty)
  std::string notes;

  std::string render_text() const;
  std::vector<std::pair<std::string, std::string>> render_kv() const;
};

HypothesisReport hypothesis_report(const Kernel& kernel, const Geometry& geom,
                                   const VelocityGrid& grid,
                                   const std::vector<double>& eps_list);

}  // namespace kindiff
