#include "kindiff/kernel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "kindiff/errors.hpp"

namespace kindiff {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double ScalingLaw::operator()(double eps) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Linear: return eps;
    case Kind::Quadratic: return eps * eps;
    case Kind::Log: return std::pow(std::abs(std::log(eps)), -gamma);
    case Kind::Constant: return 1.0;
  }
  return 0.0;
}

std::string ScalingLaw::name() const {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::Linear: return "linear";
    case Kind::Quadratic: return "quadratic";
    case Kind::Log: return "log";
    case Kind::Constant: return "constant";
  }
  return "?";
}

ScalingLaw parse_scaling_law(const std::string& name, double gamma) {
  ScalingLaw law;
  law.gamma = gamma;
  if (name == "zero") law.kind = ScalingLaw::Kind::Zero;
  else if (name == "linear") law.kind = ScalingLaw::Kind::Linear;
  else if (name == "quadratic") law.kind = ScalingLaw::Kind::Quadratic;
  else if (name == "log") law.kind = ScalingLaw::Kind::Log;
  else if (name == "constant") law.kind = ScalingLaw::Kind::Constant;
  else throw Error("unknown scaling law '" + name + "'");
  if (law.kind == ScalingLaw::Kind::Log)
    require(gamma > 0, "scaling law 'log' requires gamma > 0");
  return law;
}

namespace {

// Row and column rate integrals accumulate in the same index order so that a
// symmetric table yields a residual of exactly zero.
Eigen::VectorXd row_rates(const Eigen::MatrixXd& k, const VelocityGrid& grid) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(k.rows());
  for (int v = 0; v < k.rows(); ++v)
    for (int w = 0; w < k.cols(); ++w) r[v] += grid.weights[w] * k(v, w);
  return r;
}

Eigen::VectorXd col_rates(const Eigen::MatrixXd& k, const VelocityGrid& grid) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k.cols());
  for (int v = 0; v < k.cols(); ++v)
    for (int w = 0; w < k.rows(); ++w) c[v] += grid.weights[w] * k(w, v);
  return c;
}

// Semi-detailed balance residual, relative to the largest rate.
double sdb_residual_of(const Eigen::MatrixXd& k, const VelocityGrid& grid, int* worst_v) {
  const Eigen::VectorXd r = row_rates(k, grid);
  const Eigen::VectorXd c = col_rates(k, grid);
  const double scale = std::max(1e-300, std::max(r.maxCoeff(), c.maxCoeff()));
  int v = 0;
  const double res = (r - c).cwiseAbs().maxCoeff(&v);
  if (worst_v) *worst_v = v;
  return res / scale;
}

struct TableSet {
  std::vector<Eigen::MatrixXd> tables;
  std::vector<int> of_cell;
  std::map<std::string, int> dedup;

  int add(const Eigen::MatrixXd& t) {
    std::string key(reinterpret_cast<const char*>(t.data()), sizeof(double) * t.size());
    auto it = dedup.find(key);
    if (it != dedup.end()) return it->second;
    tables.push_back(t);
    dedup.emplace(std::move(key), static_cast<int>(tables.size() - 1));
    return static_cast<int>(tables.size() - 1);
  }
};

}  // namespace

Kernel build_kernel(const KernelSpec& spec, const Geometry& geom, const VelocityGrid& grid) {
  const int V = grid.size();
  const int nc = geom.num_cells();
  TableSet set;
  set.of_cell.assign(nc, -1);

  if (spec.type == KernelSpec::Type::Isotropic ||
      spec.type == KernelSpec::Type::AnisotropicDot) {
    Eigen::MatrixXd base_b = Eigen::MatrixXd::Constant(V, V, spec.b_base);
    for (int c = 0; c < nc; ++c) {
      if (geom.region[c] != 0) {
        set.of_cell[c] = set.add(base_b);
        continue;
      }
      Eigen::MatrixXd t(V, V);
      if (spec.type == KernelSpec::Type::Isotropic) {
        double sigma = spec.sigma;
        const Eigen::VectorXd x = geom.cell_center(c);
        for (const auto& [shape, value] : spec.sigma_regions) {
          bool inside = false;
          if (shape.kind == RegionShape::Kind::Rect) {
            inside = true;
            for (int d = 0; d < geom.dim; ++d)
              inside = inside && x[d] >= shape.lo[d] && x[d] <= shape.hi[d];
          } else if (shape.kind == RegionShape::Kind::Disk) {
            inside = (x - shape.center).norm() <= shape.radius;
          }
          if (inside) sigma = value;
        }
        require(sigma >= 0, "build_kernel: isotropic sigma must be nonnegative");
        t.setConstant(sigma);
      } else {
        for (int v = 0; v < V; ++v)
          for (int w = 0; w < V; ++w)
            t(v, w) = std::max(0.0, spec.c0 + spec.c1 * grid.nodes.row(v).dot(grid.nodes.row(w)));
      }
      set.of_cell[c] = set.add(t);
    }
  } else {  // Tabulated
    std::ifstream in(spec.table_path);
    require(in.good(), "build_kernel: cannot open kernel table '" + spec.table_path + "'");
    std::map<int, Eigen::MatrixXd> by_cell;  // -1: all A cells, -2: all B cells
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string f0, f1, f2, f3;
      std::getline(ss, f0, ',');
      std::getline(ss, f1, ',');
      std::getline(ss, f2, ',');
      std::getline(ss, f3, ',');
      if (lineno == 1 && f0 == "cell_id") continue;  // header
      try {
        const int cell = std::stoi(f0), v = std::stoi(f1), w = std::stoi(f2);
        const double val = std::stod(f3);
        require(v >= 0 && v < V && w >= 0 && w < V,
                "build_kernel: velocity index out of range at line " + std::to_string(lineno));
        require(val >= 0, "build_kernel: negative kernel entry at line " + std::to_string(lineno));
        auto [it, fresh] = by_cell.try_emplace(cell, Eigen::MatrixXd::Zero(V, V));
        it->second(v, w) = val;
      } catch (const std::invalid_argument&) {
        throw Error("build_kernel: malformed table row at line " + std::to_string(lineno));
      }
    }
    for (int c = 0; c < nc; ++c) {
      auto it = by_cell.find(c);
      if (it == by_cell.end()) it = by_cell.find(geom.region[c] == 0 ? -1 : -2);
      require(it != by_cell.end(),
              "build_kernel: tabulated kernel does not cover cell " + std::to_string(c));
      set.of_cell[c] = set.add(it->second);
    }
  }

  Kernel kernel;
  kernel.tables = std::move(set.tables);
  kernel.table_of_cell = std::move(set.of_cell);
  kernel.scaling = spec.scaling;
  kernel.rates.reserve(kernel.tables.size());

  double worst = 0;
  int worst_table = -1, worst_v = -1;
  for (size_t t = 0; t < kernel.tables.size(); ++t) {
    require(kernel.tables[t].minCoeff() >= 0, "build_kernel: kernel must be nonnegative");
    int v = 0;
    const double res = sdb_residual_of(kernel.tables[t], grid, &v);
    if (res > worst) {
      worst = res;
      worst_table = static_cast<int>(t);
      worst_v = v;
    }
    kernel.rates.push_back(row_rates(kernel.tables[t], grid));
  }
  kernel.sdb_residual = worst;
  if (worst > spec.sdb_tolerance) {
    int cell = -1;
    for (int c = 0; c < nc; ++c)
      if (kernel.table_of_cell[c] == worst_table) { cell = c; break; }
    throw Error("build_kernel: semi-detailed balance violated (relative residual " +
                std::to_string(worst) + " at cell " + std::to_string(cell) +
                ", velocity index " + std::to_string(worst_v) + ")");
  }
  return kernel;
}

KernelMetrics compute_metrics(const Kernel& kernel, const Geometry& geom,
                              const VelocityGrid& grid, const std::vector<double>& eps_list) {
  KernelMetrics m;
  m.sdb_residual = kernel.sdb_residual;
  m.eps = eps_list;

  std::vector<char> table_in_A(kernel.tables.size(), 0), table_in_B(kernel.tables.size(), 0);
  for (int c = 0; c < geom.num_cells(); ++c)
    (geom.region[c] == 0 ? table_in_A : table_in_B)[kernel.table_of_cell[c]] = 1;

  m.C_K = 0;
  for (size_t t = 0; t < kernel.tables.size(); ++t) {
    const Eigen::MatrixXd& k = kernel.tables[t];
    if (table_in_A[t]) {
      m.sup_a_A = std::max(m.sup_a_A, kernel.rates[t].maxCoeff());
      if (k.minCoeff() <= 0) {
        m.C_K = kInf;
      } else if (std::isfinite(m.C_K)) {
        for (int v = 0; v < k.rows(); ++v) {
          double s = 0;
          for (int w = 0; w < k.cols(); ++w)
            s += grid.weights[w] * (k(v, w) + 1.0 / k(v, w) + 1.0 / k(w, v));
          m.C_K = std::max(m.C_K, s);
        }
      }
    }
    if (table_in_B[t]) {
      m.sup_a_B_base = std::max(m.sup_a_B_base, kernel.rates[t].maxCoeff());
      if (k.minCoeff() <= 0) {
        m.sup_inv_k_B_base = kInf;
      } else if (std::isfinite(m.sup_inv_k_B_base)) {
        for (int v = 0; v < k.rows(); ++v) {
          double s = 0;
          for (int w = 0; w < k.cols(); ++w) s += grid.weights[w] / k(v, w);
          m.sup_inv_k_B_base = std::max(m.sup_inv_k_B_base, s);
        }
      }
    }
  }

  for (double eps : eps_list) {
    const double s = kernel.scaling(eps);
    m.sup_a_on_B.push_back(s * m.sup_a_B_base);
    m.h3_margin.push_back(s > 0 ? eps * eps * m.sup_inv_k_B_base / s : kInf);
  }
  return m;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::NotApplicable: return "not_applicable";
  }
  return "?";
}

HypothesisReport hypothesis_report(const Kernel& kernel, const Geometry& geom,
                                   const VelocityGrid& grid,
                                   const std::vector<double>& eps_list) {
  HypothesisReport rep;
  rep.metrics = compute_metrics(kernel, geom, grid, eps_list);
  const bool has_B = geom.num_inclusions > 0;
  std::ostringstream notes;

  // (H2): eps-independent kernel on A with finite C_K. The builder only scales
  // B tables, so eps-independence on A holds by construction.
  rep.h2 = std::isfinite(rep.metrics.C_K) ? Verdict::Pass : Verdict::Fail;
  if (rep.h2 == Verdict::Fail)
    notes << "h2: C_K infinite (kernel vanishes somewhere on A); ";

  if (!has_B) {
    rep.h1 = rep.h3 = rep.h4 = Verdict::NotApplicable;
    rep.applicable = rep.h2 == Verdict::Pass;
    rep.notes = notes.str();
    return rep;
  }

  // (H1): scattering rate uniformly vanishing on B as eps -> 0.
  const auto kind = kernel.scaling.kind;
  if (rep.metrics.sup_a_B_base == 0 || kind != ScalingLaw::Kind::Constant) {
    rep.h1 = Verdict::Pass;
  } else {
    rep.h1 = Verdict::Fail;
    notes << "h1: scaling law 'constant' keeps the rate on B order one; ";
  }

  // (H3): sup over B of the reciprocal kernel integral must be o(1/eps^2).
  const bool inv_finite = std::isfinite(rep.metrics.sup_inv_k_B_base);
  const bool law_h3 = kind == ScalingLaw::Kind::Linear || kind == ScalingLaw::Kind::Log ||
                      kind == ScalingLaw::Kind::Constant;
  rep.h3 = (inv_finite && law_h3) ? Verdict::Pass : Verdict::Fail;
  if (rep.h3 == Verdict::Fail) {
    if (!inv_finite)
      notes << "h3: reciprocal kernel integral infinite on B; ";
    else
      notes << "h3: scaling '" << kernel.scaling.name()
            << "' gives a margin that does not vanish, requires (h4); ";
  }

  // (H4): orbit-graph connectivity of every inclusion boundary.
  rep.h4 = Verdict::Pass;
  for (int l = 1; l <= geom.num_inclusions; ++l) {
    try {
      rep.ergodicity.push_back(ergodicity_check(geom, l, grid));
      if (!rep.ergodicity.back().ergodic) {
        rep.h4 = Verdict::Fail;
        notes << "h4: inclusion " << l << " splits into "
              << rep.ergodicity.back().num_components << " orbit components; ";
      }
    } catch (const Error& e) {
      rep.h4 = Verdict::Fail;
      notes << "h4: " << e.what() << "; ";
      break;
    }
  }

  rep.applicable = rep.h1 == Verdict::Pass && rep.h2 == Verdict::Pass &&
                   (rep.h3 == Verdict::Pass || rep.h4 == Verdict::Pass);
  rep.notes = notes.str();
  return rep;
}

std::string HypothesisReport::render_text() const {
  std::ostringstream os;
  os << "hypothesis report\n";
  os << "  h1 (rate vanishes on B):        " << to_string(h1) << "\n";
  os << "  h2 (finite C_K on A):           " << to_string(h2) << "\n";
  os << "  h3 (reciprocal bound on B):     " << to_string(h3) << "\n";
  os << "  h4 (inclusion ergodicity):      " << to_string(h4) << "\n";
  os << "  diffusion limit theorem applicable: " << (applicable ? "yes" : "no") << "\n";
  os << "  C_K = " << metrics.C_K << ", sdb_residual = " << metrics.sdb_residual
     << ", sup_a_A = " << metrics.sup_a_A << "\n";
  for (size_t i = 0; i < metrics.eps.size(); ++i) {
    os << "  eps = " << metrics.eps[i] << ": sup_a_on_B = " << metrics.sup_a_on_B[i]
       << ", h3_margin = " << metrics.h3_margin[i] << "\n";
  }
  for (size_t l = 0; l < ergodicity.size(); ++l) {
    os << "  inclusion " << (l + 1) << ": "
       << (ergodicity[l].ergodic ? "ergodic" : "non-ergodic") << " ("
       << ergodicity[l].num_components << " orbit components)\n";
  }
  if (!notes.empty()) os << "  notes: " << notes << "\n";
  return os.str();
}

std::vector<std::pair<std::string, std::string>> HypothesisReport::render_kv() const {
  std::vector<std::pair<std::string, std::string>> kv;
  auto num = [](double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };
  kv.emplace_back("h1", to_string(h1));
  kv.emplace_back("h2", to_string(h2));
  kv.emplace_back("h3", to_string(h3));
  kv.emplace_back("h4", to_string(h4));
  kv.emplace_back("applicable", applicable ? "yes" : "no");
  kv.emplace_back("C_K", num(metrics.C_K));
  kv.emplace_back("sdb_residual", num(metrics.sdb_residual));
  kv.emplace_back("sup_a_A", num(metrics.sup_a_A));
  for (size_t i = 0; i < metrics.eps.size(); ++i) {
    kv.emplace_back("sup_a_on_B[" + num(metrics.eps[i]) + "]", num(metrics.sup_a_on_B[i]));
    kv.emplace_back("h3_margin[" + num(metrics.eps[i]) + "]", num(metrics.h3_margin[i]));
  }
  for (size_t l = 0; l < ergodicity.size(); ++l) {
    kv.emplace_back("ergodic[" + std::to_string(l + 1) + "]",
                    ergodicity[l].ergodic ? "yes" : "no");
    kv.emplace_back("orbit_components[" + std::to_string(l + 1) + "]",
                    std::to_string(ergodicity[l].num_components));
  }
  return kv;
}

}  // namespace kindiff
