#pragma once

#include <array>
#include <vector>

#include "poroms/types.hpp"

namespace poroms {

/// Uniform triangulation of (0,1)^2: nx*ny square cells, each split into two
/// triangles by its lower-left/upper-right diagonal. Nodes are numbered
/// row-major bottom to top: node(ix, iy) = iy*(nx+1) + ix.
struct StructuredGrid {
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;

  StructuredGrid() = default;
  StructuredGrid(int nx_, int ny_);

  int node_count() const { return (nx + 1) * (ny + 1); }
  int cell_count() const { return nx * ny; }
  int tri_count() const { return 2 * nx * ny; }

  int node_id(int ix, int iy) const { return iy * (nx + 1) + ix; }
  int cell_id(int cx, int cy) const { return cy * nx + cx; }

  double node_x(int node) const { return hx * (node % (nx + 1)); }
  double node_y(int node) const { return hy * (node / (nx + 1)); }

  bool boundary_node(int node) const {
    const int ix = node % (nx + 1);
    const int iy = node / (nx + 1);
    return ix == 0 || ix == nx || iy == 0 || iy == ny;
  }

  /// Vertex node ids of triangle t, counterclockwise. Triangle 2*c is the
  /// lower half of cell c (below the diagonal), 2*c+1 the upper half.
  std::array<int, 3> tri_nodes(int t) const;
  int tri_cell(int t) const { return t / 2; }
  double tri_area() const { return 0.5 * hx * hy; }
};

/// Nested coarse/fine grid hierarchy with integer refinement ratio.
struct GridPair {
  StructuredGrid coarse;
  StructuredGrid fine;
  int ratio = 0;

  /// Coarse element containing fine cell fc.
  int coarse_elem_of_fine_cell(int fc) const;
  /// Coarse element owning fine triangle t.
  int coarse_elem_of_tri(int t) const { return coarse_elem_of_fine_cell(fine.tri_cell(t)); }
};

GridPair build_grid_pair(int coarse_n, int ratio);

/// Oversampled region K_{i,ell}: the coarse element i grown by ell layers of
/// neighboring coarse elements (vertex neighbors), clipped at the domain
/// boundary. In a structured grid this is always a rectangle of coarse cells.
struct Oversample {
  int element = -1;
  int layers = 0;
  int cx0 = 0, cx1 = 0, cy0 = 0, cy1 = 0; // inclusive coarse-cell range
  std::vector<int> members;               // coarse element ids, sorted
  std::vector<int> interior_nodes;        // fine nodes strictly inside the region

  bool contains_elem(int e, const GridPair& gp) const;
};

Oversample oversample(const GridPair& gp, int elem, int layers);

/// Coarse P1 hat functions interpolated onto the fine grid, one vector of
/// fine-node values per coarse node. They form a partition of unity.
std::vector<VecX> coarse_hat_functions(const GridPair& gp);

} // namespace poroms
