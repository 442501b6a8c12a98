#include "poroms/grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace poroms {

StructuredGrid::StructuredGrid(int nx_, int ny_) : nx(nx_), ny(ny_) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("StructuredGrid: cell counts must be positive");
  hx = 1.0 / nx;
  hy = 1.0 / ny;
}

std::array<int, 3> StructuredGrid::tri_nodes(int t) const {
  const int c = t / 2;
  const int cx = c % nx;
  const int cy = c / nx;
  const int ll = node_id(cx, cy);
  const int lr = node_id(cx + 1, cy);
  const int ur = node_id(cx + 1, cy + 1);
  const int ul = node_id(cx, cy + 1);
  if (t % 2 == 0) return {ll, lr, ur};
  return {ll, ur, ul};
}

int GridPair::coarse_elem_of_fine_cell(int fc) const {
  const int fx = fc % fine.nx;
  const int fy = fc / fine.nx;
  return coarse.cell_id(fx / ratio, fy / ratio);
}

GridPair build_grid_pair(int coarse_n, int ratio) {
  if (coarse_n < 2) throw std::invalid_argument("build_grid_pair: coarse_n must be >= 2");
  if (ratio < 2) throw std::invalid_argument("build_grid_pair: ratio must be >= 2");
  GridPair gp;
  gp.coarse = StructuredGrid(coarse_n, coarse_n);
  gp.fine = StructuredGrid(coarse_n * ratio, coarse_n * ratio);
  gp.ratio = ratio;
  return gp;
}

bool Oversample::contains_elem(int e, const GridPair& gp) const {
  const int cx = e % gp.coarse.nx;
  const int cy = e / gp.coarse.nx;
  return cx >= cx0 && cx <= cx1 && cy >= cy0 && cy <= cy1;
}

Oversample oversample(const GridPair& gp, int elem, int layers) {
  const int n = gp.coarse.nx;
  if (elem < 0 || elem >= gp.coarse.cell_count())
    throw std::out_of_range("oversample: coarse element index out of range");
  if (layers < 0) throw std::invalid_argument("oversample: layer count must be nonnegative");

  Oversample os;
  os.element = elem;
  os.layers = layers;
  const int cx = elem % n;
  const int cy = elem / n;
  os.cx0 = std::max(0, cx - layers);
  os.cx1 = std::min(n - 1, cx + layers);
  os.cy0 = std::max(0, cy - layers);
  os.cy1 = std::min(n - 1, cy + layers);

  for (int ey = os.cy0; ey <= os.cy1; ++ey)
    for (int ex = os.cx0; ex <= os.cx1; ++ex) os.members.push_back(gp.coarse.cell_id(ex, ey));

  // Fine nodes strictly inside the region rectangle. Nodes on the region
  // boundary carry the zero-trace condition; where that boundary coincides
  // with the domain boundary the global Dirichlet condition removes them too.
  const int r = gp.ratio;
  const int fx0 = os.cx0 * r, fx1 = (os.cx1 + 1) * r;
  const int fy0 = os.cy0 * r, fy1 = (os.cy1 + 1) * r;
  for (int fy = fy0 + 1; fy < fy1; ++fy)
    for (int fx = fx0 + 1; fx < fx1; ++fx) os.interior_nodes.push_back(gp.fine.node_id(fx, fy));
  return os;
}

std::vector<VecX> coarse_hat_functions(const GridPair& gp) {
  const int n_coarse_nodes = gp.coarse.node_count();
  const int n_fine_nodes = gp.fine.node_count();
  const int r = gp.ratio;
  std::vector<VecX> hats(n_coarse_nodes, VecX::Zero(n_fine_nodes));

  for (int node = 0; node < n_fine_nodes; ++node) {
    const int fx = node % (gp.fine.nx + 1);
    const int fy = node / (gp.fine.nx + 1);
    const int cx = std::min(fx / r, gp.coarse.nx - 1);
    const int cy = std::min(fy / r, gp.coarse.ny - 1);
    const double s = double(fx - cx * r) / r;
    const double t = double(fy - cy * r) / r;
    const int ll = gp.coarse.node_id(cx, cy);
    const int lr = gp.coarse.node_id(cx + 1, cy);
    const int ur = gp.coarse.node_id(cx + 1, cy + 1);
    const int ul = gp.coarse.node_id(cx, cy + 1);
    if (t <= s) { // lower triangle of the coarse cell
      hats[ll][node] = 1.0 - s;
      hats[lr][node] = s - t;
      hats[ur][node] = t;
    } else { // upper triangle
      hats[ll][node] = 1.0 - t;
      hats[ur][node] = s;
      hats[ul][node] = t - s;
    }
  }
  return hats;
}

} // namespace poroms
