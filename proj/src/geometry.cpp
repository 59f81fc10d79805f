#include "kindiff/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>

#include "kindiff/errors.hpp"
#include "kindiff/velocity_grid.hpp"

namespace kindiff {

Eigen::VectorXd Geometry::cell_center(int cell) const {
  Eigen::VectorXd x(dim);
  x[0] = lo[0] + (ci(cell) + 0.5) * h[0];
  if (dim == 2) x[1] = lo[1] + (cj(cell) + 0.5) * h[1];
  return x;
}

bool Geometry::touches_domain_boundary(int cell) const {
  const int i = ci(cell), j = cj(cell);
  if (i == 0 || i == cells[0] - 1) return true;
  if (dim == 2 && (j == 0 || j == cells[1] - 1)) return true;
  return false;
}

int Geometry::cell_containing(const Eigen::VectorXd& x) const {
  std::array<int, 2> idx{0, 0};
  for (int d = 0; d < dim; ++d) {
    if (x[d] < lo[d] || x[d] > hi[d]) return -1;
    idx[d] = std::min(cells[d] - 1, static_cast<int>(std::floor((x[d] - lo[d]) / h[d])));
  }
  return index(idx[0], idx[1]);
}

std::vector<int> Geometry::cells_of_region(int label) const {
  std::vector<int> out;
  for (int c = 0; c < num_cells(); ++c)
    if (region[c] == label) out.push_back(c);
  return out;
}

double Geometry::region_volume(int label) const {
  return static_cast<double>(cells_of_region(label).size()) * cell_volume;
}

std::vector<InclusionFace> Geometry::inclusion_boundary(int label) const {
  std::vector<InclusionFace> faces;
  for (int c = 0; c < num_cells(); ++c) {
    if (region[c] != label) continue;
    const int i = ci(c), j = cj(c);
    for (int d = 0; d < dim; ++d) {
      for (int s : {-1, +1}) {
        const int ni = i + (d == 0 ? s : 0);
        const int nj = j + (d == 1 ? s : 0);
        if (!in_bounds(ni, nj)) continue;  // cannot happen for interior inclusions
        const int nb = index(ni, nj);
        if (region[nb] == label) continue;
        InclusionFace f;
        f.cell_in = c;
        f.cell_out = nb;
        f.axis = d;
        f.sign = s;
        f.center = cell_center(c);
        f.center[d] += 0.5 * s * h[d];
        faces.push_back(f);
      }
    }
  }
  return faces;
}

Geometry build_geometry(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        const std::vector<int>& cells_per_axis,
                        const std::vector<RegionShape>& inclusions) {
  const int dim = static_cast<int>(lo.size());
  require(dim == 1 || dim == 2, "build_geometry: spatial dimension must be 1 or 2");
  require(hi.size() == dim && static_cast<int>(cells_per_axis.size()) == dim,
          "build_geometry: box/resolution dimension mismatch");
  Geometry g;
  g.dim = dim;
  g.lo = lo;
  g.hi = hi;
  for (int d = 0; d < dim; ++d) {
    require(hi[d] > lo[d], "build_geometry: box must have positive extent");
    require(cells_per_axis[d] >= 1, "build_geometry: need at least one cell per axis");
    g.cells[d] = cells_per_axis[d];
    g.h[d] = (hi[d] - lo[d]) / cells_per_axis[d];
  }
  if (dim == 1) {
    g.cells[1] = 1;
    g.h[1] = 1.0;
  }
  g.cell_volume = (dim == 2) ? g.h[0] * g.h[1] : g.h[0];
  g.region.assign(g.num_cells(), 0);

  std::vector<char> marked(g.num_cells(), 0);
  for (const RegionShape& shape : inclusions) {
    if (shape.kind == RegionShape::Kind::Cells) {
      for (int c : shape.cells) {
        require(c >= 0 && c < g.num_cells(), "build_geometry: explicit cell index out of range");
        marked[c] = 1;
      }
      continue;
    }
    for (int c = 0; c < g.num_cells(); ++c) {
      const Eigen::VectorXd x = g.cell_center(c);
      bool inside = false;
      if (shape.kind == RegionShape::Kind::Rect) {
        inside = true;
        for (int d = 0; d < dim; ++d)
          inside = inside && x[d] >= shape.lo[d] && x[d] <= shape.hi[d];
      } else {
        inside = (x - shape.center).norm() <= shape.radius;
      }
      if (inside) marked[c] = 1;
    }
  }

  int n_marked = 0;
  for (int c = 0; c < g.num_cells(); ++c) {
    if (!marked[c]) continue;
    ++n_marked;
    if (g.touches_domain_boundary(c)) {
      throw Error("build_geometry: inclusion cell " + std::to_string(c) +
                  " touches the domain boundary; inclusions must be strictly "
                  "interior (B and the boundary of Omega must not intersect)");
    }
  }
  require(n_marked < g.num_cells(), "build_geometry: diffusive region A is empty");

  // Connected components of the marked set under face adjacency, labeled in
  // order of their smallest cell index.
  std::vector<int> comp(g.num_cells(), -1);
  std::vector<int> first_cell;
  int next = 0;
  for (int c0 = 0; c0 < g.num_cells(); ++c0) {
    if (!marked[c0] || comp[c0] >= 0) continue;
    std::queue<int> q;
    q.push(c0);
    comp[c0] = next;
    first_cell.push_back(c0);
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      const int i = g.ci(c), j = g.cj(c);
      const std::array<std::array<int, 2>, 4> nbrs{{{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}}};
      for (const auto& n : nbrs) {
        if (!g.in_bounds(n[0], n[1])) continue;
        const int nb = g.index(n[0], n[1]);
        if (marked[nb] && comp[nb] < 0) {
          comp[nb] = next;
          q.push(nb);
        }
      }
    }
    ++next;
  }
  std::vector<int> order(next);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return first_cell[a] < first_cell[b]; });
  std::vector<int> relabel(next);
  for (int r = 0; r < next; ++r) relabel[order[r]] = r + 1;
  for (int c = 0; c < g.num_cells(); ++c)
    if (marked[c]) g.region[c] = relabel[comp[c]];
  g.num_inclusions = next;
  return g;
}

namespace {

struct Crossing {
  double t = 0;
  int from_cell = -1;
  int to_cell = -1;  // -1 when the ray leaves the domain
  int axis = 0;
  int dir = +1;
  bool ambiguous = false;
  bool left_domain = false;
};

// Amanatides-Woo style traversal of the cell grid along x + t v, stopping at
// the first face crossing where membership in region `label` changes.
Crossing traverse_to_membership_change(const Geometry& g, int label,
                                       const Eigen::VectorXd& x,
                                       const Eigen::VectorXd& v) {
  const double speed = v.norm();
  require(speed > 0, "exit_time: velocity must be nonzero");
  const double hmin = (g.dim == 2) ? std::min(g.h[0], g.h[1]) : g.h[0];
  const double nudge = 1e-9 * hmin / speed;
  const Eigen::VectorXd x0 = x + nudge * v;

  std::array<int, 2> idx{0, 0};
  for (int d = 0; d < g.dim; ++d)
    idx[d] = std::max(0, std::min(g.cells[d] - 1,
                                  static_cast<int>(std::floor((x0[d] - g.lo[d]) / g.h[d]))));

  std::array<double, 2> t_next{std::numeric_limits<double>::infinity(),
                               std::numeric_limits<double>::infinity()};
  std::array<int, 2> step{0, 0};
  for (int d = 0; d < g.dim; ++d) {
    if (v[d] > 0) {
      step[d] = +1;
      t_next[d] = ((g.lo[d] + (idx[d] + 1) * g.h[d]) - x[d]) / v[d];
    } else if (v[d] < 0) {
      step[d] = -1;
      t_next[d] = ((g.lo[d] + idx[d] * g.h[d]) - x[d]) / v[d];
    }
  }

  bool inside = g.region[g.index(idx[0], idx[1])] == label;
  const double tie_tol = 1e-12 * hmin / speed;
  const int max_steps = 4 * (g.cells[0] + g.cells[1]) + 8;
  for (int it = 0; it < max_steps; ++it) {
    int d0 = (t_next[0] <= t_next[1]) ? 0 : 1;
    Crossing cr;
    cr.t = t_next[d0];
    cr.axis = d0;
    cr.dir = step[d0];
    cr.from_cell = g.index(idx[0], idx[1]);
    cr.ambiguous = g.dim == 2 && std::abs(t_next[0] - t_next[1]) <= tie_tol &&
                   std::isfinite(t_next[1 - d0]);

    // Advance; at an exact corner both axes step together (edge kept).
    idx[d0] += step[d0];
    t_next[d0] += g.h[d0] / std::abs(v[d0]);
    if (cr.ambiguous) {
      const int d1 = 1 - d0;
      idx[d1] += step[d1];
      t_next[d1] += g.h[d1] / std::abs(v[d1]);
    }

    if (!g.in_bounds(idx[0], idx[1])) {
      cr.left_domain = true;
      return cr;
    }
    cr.to_cell = g.index(idx[0], idx[1]);
    const bool now_inside = g.region[cr.to_cell] == label;
    if (now_inside != inside) return cr;
  }
  throw Error("exit_time: traversal exceeded step bound (degenerate ray)");
}

}  // namespace

double exit_time(const Geometry& geom, int label, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& v) {
  require(label >= 1 && label <= geom.num_inclusions, "exit_time: no such inclusion");
  const Crossing cr = traverse_to_membership_change(geom, label, x, v);
  if (cr.left_domain) {
    throw Error("exit_time: no forward crossing of the inclusion boundary");
  }
  return cr.t;
}

ErgodicityResult ergodicity_check(const Geometry& geom, int label,
                                  const VelocityGrid& grid) {
  AdmissibilityTolerances tol;
  tol.require_no_zero = true;  // the hypothesis requires mu({0}) = 0
  const AdmissibilityReport adm = check_admissibility(grid, tol);
  for (const auto& c : adm.checks) {
    if (!c.pass) {
      throw Error("ergodicity_check: velocity grid inadmissible ('" + c.name +
                  "' failed); check refused");
    }
  }

  const std::vector<InclusionFace> faces = geom.inclusion_boundary(label);
  ErgodicityResult res;
  res.component_of_face.assign(faces.size(), -1);
  if (faces.empty()) return res;

  // Face lookup keyed by (inclusion cell, axis, sign).
  auto key = [&](int cell, int axis, int sign) {
    return (cell * 2 + axis) * 2 + (sign > 0 ? 1 : 0);
  };
  std::vector<int> face_of_key(static_cast<size_t>(geom.num_cells()) * 4, -1);
  for (size_t f = 0; f < faces.size(); ++f)
    face_of_key[key(faces[f].cell_in, faces[f].axis, faces[f].sign)] = static_cast<int>(f);

  std::vector<int> parent(faces.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };

  for (size_t f = 0; f < faces.size(); ++f) {
    const InclusionFace& face = faces[f];
    for (int k = 0; k < grid.size(); ++k) {
      const Eigen::VectorXd v = grid.node(k);
      const double vn = v[face.axis] * face.sign;  // outward normal component
      if (vn >= -1e-12 * v.norm()) continue;       // only strictly inward rays
      const Crossing cr = traverse_to_membership_change(geom, label, face.center, v);
      if (cr.left_domain) continue;  // cannot happen from a strictly inward start
      if (cr.ambiguous) ++res.ambiguous_crossings;
      // Exit face: between the last inside cell and the first outside cell.
      int exit_face = face_of_key[key(cr.from_cell, cr.axis, cr.dir)];
      if (exit_face < 0 && cr.ambiguous) {
        // Corner exit: the other axis' face of the same cell may be the match.
        exit_face = face_of_key[key(cr.from_cell, 1 - cr.axis, cr.dir)];
      }
      if (exit_face >= 0) unite(static_cast<int>(f), exit_face);
    }
  }

  int n_comp = 0;
  std::vector<int> comp_label(faces.size(), -1);
  for (size_t f = 0; f < faces.size(); ++f) {
    const int r = find(static_cast<int>(f));
    if (comp_label[r] < 0) comp_label[r] = n_comp++;
    res.component_of_face[f] = comp_label[r];
  }
  res.num_components = n_comp;
  res.ergodic = (n_comp == 1);
  return res;
}

}  // namespace kindiff
