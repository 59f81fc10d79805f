#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace kindiff {

struct VelocityGrid;

// Shape predicates used to mark inclusion cells (by cell-center membership).
struct RegionShape {
  enum class Kind { Rect, Disk, Cells };
  Kind kind = Kind::Rect;
  Eigen::VectorXd lo, hi;      // Rect
  Eigen::VectorXd center;      // Disk
  double radius = 0.0;         // Disk
  std::vector<int> cells;      // Cells (explicit indices)
};

// Oriented face of an inclusion boundary: separates a B_l cell from an A cell.
struct InclusionFace {
  int cell_in = -1;    // B_l cell
  int cell_out = -1;   // adjacent A cell
  int axis = 0;        // face normal axis
  int sign = +1;       // outward normal = sign * e_axis (from B to A)
  Eigen::VectorXd center;  // face center coordinates
};

// Rectilinear domain Omega partitioned into the diffusive region A (label 0)
// and inclusion components B_1..B_m (labels 1..m). Immutable after build.
struct Geometry {
  int dim = 1;
  Eigen::VectorXd lo, hi;          // box extents per axis
  std::array<int, 2> cells{1, 1};  // cells per axis (cells[1] == 1 in 1D)
  std::array<double, 2> h{0, 0};   // cell widths
  std::vector<int> region;         // per cell: 0 = A, l >= 1 = B_l
  int num_inclusions = 0;
  double cell_volume = 0;

  int num_cells() const { return cells[0] * cells[1]; }
  int index(int i, int j) const { return i + cells[0] * j; }
  int ci(int cell) const { return cell % cells[0]; }
  int cj(int cell) const { return cell / cells[0]; }
  bool in_bounds(int i, int j) const {
    return i >= 0 && i < cells[0] && j >= 0 && j < cells[1];
  }
  Eigen::VectorXd cell_center(int cell) const;
  bool touches_domain_boundary(int cell) const;
  int cell_containing(const Eigen::VectorXd& x) const;  // -1 if outside

  std::vector<int> cells_of_region(int label) const;
  double region_volume(int label) const;
  // Faces of the boundary of inclusion l (1-based label).
  std::vector<InclusionFace> inclusion_boundary(int label) const;
};

Geometry build_geometry(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                        const std::vector<int>& cells_per_axis,
                        const std::vector<RegionShape>& inclusions);

// Forward exit time from inclusion `label` starting at boundary point x with
// velocity v: smallest t > 0 with x + t v on the (rasterized) boundary of B_l.
// Throws when v = 0 or when the forward ray never crosses the boundary again.
double exit_time(const Geometry& geom, int label, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& v);

struct ErgodicityResult {
  bool ergodic = false;
  int num_components = 0;
  std::vector<int> component_of_face;  // aligned with inclusion_boundary(label)
  int ambiguous_crossings = 0;         // corner-grazing traversals (edge kept)
};

// Discrete analogue of the exit-time ergodicity hypothesis: builds the orbit
// graph on boundary-face centers with edges x <-> x + tau(x,v) v over all
// strictly inward velocity nodes; ergodic iff the graph is connected.
ErgodicityResult ergodicity_check(const Geometry& geom, int label,
                                  const VelocityGrid& grid);

}  // namespace kindiff
