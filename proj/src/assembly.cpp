#include "poroms/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace poroms {

DofMap DofMap::build(const StructuredGrid& fine) {
  DofMap dm;
  dm.node2p.assign(fine.node_count(), -1);
  for (int node = 0; node < fine.node_count(); ++node) {
    if (!fine.boundary_node(node)) {
      dm.node2p[node] = dm.n_p++;
      dm.p2node.push_back(node);
    }
  }
  dm.n_u = 2 * dm.n_p;
  return dm;
}

namespace detail {

void tri_elastic(const TriData& td, double em[6][6]) {
  // a(phi_j e_b, phi_i e_a) = T [ mu (delta_ab g_i.g_j + g_i[b] g_j[a]) + lambda g_i[a] g_j[b] ]
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 2; ++a)
      for (int j = 0; j < 3; ++j)
        for (int b = 0; b < 2; ++b) {
          const double dot = td.grad[i][0] * td.grad[j][0] + td.grad[i][1] * td.grad[j][1];
          double v = td.mu * ((a == b ? dot : 0.0) + td.grad[i][b] * td.grad[j][a]) +
                     td.lambda * td.grad[i][a] * td.grad[j][b];
          em[2 * i + a][2 * j + b] = td.area * v;
        }
}

void tri_scalar_stiffness(const TriData& td, double w, double em[3][3]) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      em[i][j] = w * td.area *
                 (td.grad[i][0] * td.grad[j][0] + td.grad[i][1] * td.grad[j][1]);
}

void tri_mass(const TriData& td, double w, double em[3][3]) {
  const double m = w * td.area / 12.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) em[i][j] = m * (i == j ? 2.0 : 1.0);
}

} // namespace detail

namespace {

std::vector<TriData> build_tri_table(const GridPair& gp, const CoefficientField& field,
                                     const PhysicsConstants& pc, const std::vector<VecX>& hats) {
  const StructuredGrid& g = gp.fine;
  std::vector<TriData> tris(size_t(g.tri_count()));
  for (int t = 0; t < g.tri_count(); ++t) {
    TriData& td = tris[size_t(t)];
    td.nodes = g.tri_nodes(t);
    double x[3], y[3];
    for (int k = 0; k < 3; ++k) {
      x[k] = g.node_x(td.nodes[k]);
      y[k] = g.node_y(td.nodes[k]);
    }
    const double det = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0]);
    if (!(det > 0.0)) throw std::runtime_error("assembly: degenerate triangle");
    td.area = 0.5 * det;
    td.grad[0][0] = (y[1] - y[2]) / det;
    td.grad[0][1] = (x[2] - x[1]) / det;
    td.grad[1][0] = (y[2] - y[0]) / det;
    td.grad[1][1] = (x[0] - x[2]) / det;
    td.grad[2][0] = (y[0] - y[1]) / det;
    td.grad[2][1] = (x[1] - x[0]) / det;

    const int cell = g.tri_cell(t);
    td.coarse_elem = gp.coarse_elem_of_fine_cell(cell);
    td.lambda = field.lambda[cell];
    td.mu = field.mu[cell];
    td.kappa_nu = field.perm[cell] / pc.viscosity;

    // sum_i |grad chi_i|^2 from the four coarse hats of the owning coarse
    // cell; all other hats vanish identically on this triangle.
    const int ccx = td.coarse_elem % gp.coarse.nx;
    const int ccy = td.coarse_elem / gp.coarse.nx;
    const int corners[4] = {gp.coarse.node_id(ccx, ccy), gp.coarse.node_id(ccx + 1, ccy),
                            gp.coarse.node_id(ccx, ccy + 1), gp.coarse.node_id(ccx + 1, ccy + 1)};
    double grad_sq = 0.0;
    for (int c : corners) {
      double gx = 0.0, gy = 0.0;
      for (int k = 0; k < 3; ++k) {
        gx += hats[size_t(c)][td.nodes[k]] * td.grad[k][0];
        gy += hats[size_t(c)][td.nodes[k]] * td.grad[k][1];
      }
      grad_sq += gx * gx + gy * gy;
    }
    td.tilde_sigma = (td.lambda + 2.0 * td.mu) * grad_sq;
    td.tilde_kappa = td.kappa_nu * grad_sq;
  }
  return tris;
}

} // namespace

FormSet assemble_forms(const GridPair& gp, const CoefficientField& field,
                       const PhysicsConstants& pc, const std::vector<VecX>& hats) {
  pc.validate();
  if (field.young.size() != gp.fine.cell_count())
    throw std::invalid_argument("assemble_forms: field size does not match the fine grid");

  FormSet fs;
  fs.gp = gp;
  fs.alpha = pc.alpha;
  fs.inv_m = 1.0 / pc.biot_modulus;
  fs.dofs = DofMap::build(gp.fine);
  fs.tris = std::make_shared<const std::vector<TriData>>(build_tri_table(gp, field, pc, hats));

  const DofMap& dm = fs.dofs;
  std::vector<Triplet> ta, tb, tc, td_, ts1, ts2, tmp;
  double ea[6][6], es[3][3];

  for (const TriData& td : *fs.tris) {
    int pd[3];
    for (int k = 0; k < 3; ++k) pd[k] = dm.node2p[size_t(td.nodes[k])];

    detail::tri_elastic(td, ea);
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 2; ++a) {
        if (pd[i] < 0) continue;
        for (int j = 0; j < 3; ++j)
          for (int b = 0; b < 2; ++b) {
            if (pd[j] < 0) continue;
            ta.emplace_back(2 * pd[i] + a, 2 * pd[j] + b, ea[2 * i + a][2 * j + b]);
          }
      }

    detail::tri_scalar_stiffness(td, td.kappa_nu, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (pd[i] >= 0 && pd[j] >= 0) tb.emplace_back(pd[i], pd[j], es[i][j]);

    detail::tri_mass(td, fs.inv_m, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (pd[i] >= 0 && pd[j] >= 0) tc.emplace_back(pd[i], pd[j], es[i][j]);

    detail::tri_mass(td, 1.0, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (pd[i] >= 0 && pd[j] >= 0) tmp.emplace_back(pd[i], pd[j], es[i][j]);

    detail::tri_mass(td, td.tilde_kappa, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (pd[i] >= 0 && pd[j] >= 0) ts2.emplace_back(pd[i], pd[j], es[i][j]);

    detail::tri_mass(td, td.tilde_sigma, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (pd[i] >= 0 && pd[j] >= 0)
          for (int a = 0; a < 2; ++a) ts1.emplace_back(2 * pd[i] + a, 2 * pd[j] + a, es[i][j]);

    // d(u, q) = alpha (div u, q): div(phi_j e_b) = grad_j[b], int phi_i = T/3
    for (int i = 0; i < 3; ++i) {
      if (pd[i] < 0) continue;
      for (int j = 0; j < 3; ++j) {
        if (pd[j] < 0) continue;
        for (int b = 0; b < 2; ++b)
          td_.emplace_back(pd[i], 2 * pd[j] + b, fs.alpha * td.grad[j][b] * td.area / 3.0);
      }
    }
  }

  auto make = [](int r, int c, std::vector<Triplet>& tr) {
    SpMat m(r, c);
    m.setFromTriplets(tr.begin(), tr.end());
    m.makeCompressed();
    return m;
  };
  fs.A = make(dm.n_u, dm.n_u, ta);
  fs.B = make(dm.n_p, dm.n_p, tb);
  fs.C = make(dm.n_p, dm.n_p, tc);
  fs.D = make(dm.n_p, dm.n_u, td_);
  fs.S1 = make(dm.n_u, dm.n_u, ts1);
  fs.S2 = make(dm.n_p, dm.n_p, ts2);
  fs.MP = make(dm.n_p, dm.n_p, tmp);
  return fs;
}

VecX assemble_load(const GridPair& gp, const DofMap& dofs, const SourceFn& f, double t) {
  const StructuredGrid& g = gp.fine;
  VecX load = VecX::Zero(dofs.n_p);
  for (int tri = 0; tri < g.tri_count(); ++tri) {
    const auto nodes = g.tri_nodes(tri);
    double x[3], y[3];
    for (int k = 0; k < 3; ++k) {
      x[k] = g.node_x(nodes[k]);
      y[k] = g.node_y(nodes[k]);
    }
    const double area = g.tri_area();
    double fm[3]; // f at edge midpoints (01, 12, 20)
    for (int e = 0; e < 3; ++e) {
      const int a = e, b = (e + 1) % 3;
      fm[e] = f(0.5 * (x[a] + x[b]), 0.5 * (y[a] + y[b]), t);
    }
    // phi_i = 1/2 at the two midpoints of edges containing node i
    for (int i = 0; i < 3; ++i) {
      const int pd = dofs.node2p[size_t(nodes[i])];
      if (pd < 0) continue;
      load[pd] += (area / 3.0) * 0.5 * (fm[i] + fm[(i + 2) % 3]);
    }
  }
  return load;
}

double source_l2_squared(const GridPair& gp, const SourceFn& f, double t) {
  const StructuredGrid& g = gp.fine;
  double acc = 0.0;
  for (int tri = 0; tri < g.tri_count(); ++tri) {
    const auto nodes = g.tri_nodes(tri);
    double x[3], y[3];
    for (int k = 0; k < 3; ++k) {
      x[k] = g.node_x(nodes[k]);
      y[k] = g.node_y(nodes[k]);
    }
    double s = 0.0;
    for (int e = 0; e < 3; ++e) {
      const int a = e, b = (e + 1) % 3;
      const double v = f(0.5 * (x[a] + x[b]), 0.5 * (y[a] + y[b]), t);
      s += v * v;
    }
    acc += g.tri_area() / 3.0 * s;
  }
  return acc;
}

LocalForms assemble_element_local(const FormSet& forms, int coarse_elem) {
  const GridPair& gp = forms.gp;
  if (coarse_elem < 0 || coarse_elem >= gp.coarse.cell_count())
    throw std::out_of_range("assemble_element_local: element index out of range");

  LocalForms lf;
  const int r = gp.ratio;
  const int cx = coarse_elem % gp.coarse.nx;
  const int cy = coarse_elem / gp.coarse.nx;
  std::vector<int> node2local(size_t(gp.fine.node_count()), -1);
  for (int fy = cy * r; fy <= (cy + 1) * r; ++fy)
    for (int fx = cx * r; fx <= (cx + 1) * r; ++fx) {
      const int node = gp.fine.node_id(fx, fy);
      if (forms.dofs.node2p[size_t(node)] < 0) continue; // global Dirichlet stays out
      node2local[size_t(node)] = int(lf.pnodes.size());
      lf.pnodes.push_back(node);
      lf.pdofs.push_back(forms.dofs.node2p[size_t(node)]);
    }

  const int n = int(lf.pnodes.size());
  lf.a = MatX::Zero(2 * n, 2 * n);
  lf.s1 = MatX::Zero(2 * n, 2 * n);
  lf.b = MatX::Zero(n, n);
  lf.s2 = MatX::Zero(n, n);
  lf.c = MatX::Zero(n, n);

  double ea[6][6], es[3][3];
  for (const TriData& td : *forms.tris) {
    if (td.coarse_elem != coarse_elem) continue;
    int loc[3];
    for (int k = 0; k < 3; ++k) loc[k] = node2local[size_t(td.nodes[k])];

    detail::tri_elastic(td, ea);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (loc[i] < 0 || loc[j] < 0) continue;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            lf.a(2 * loc[i] + a, 2 * loc[j] + b) += ea[2 * i + a][2 * j + b];
      }

    detail::tri_scalar_stiffness(td, td.kappa_nu, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (loc[i] >= 0 && loc[j] >= 0) lf.b(loc[i], loc[j]) += es[i][j];

    detail::tri_mass(td, td.tilde_kappa, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (loc[i] >= 0 && loc[j] >= 0) lf.s2(loc[i], loc[j]) += es[i][j];

    detail::tri_mass(td, forms.inv_m, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (loc[i] >= 0 && loc[j] >= 0) lf.c(loc[i], loc[j]) += es[i][j];

    detail::tri_mass(td, td.tilde_sigma, es);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (loc[i] >= 0 && loc[j] >= 0)
          for (int a = 0; a < 2; ++a) lf.s1(2 * loc[i] + a, 2 * loc[j] + a) += es[i][j];
  }
  return lf;
}

} // namespace poroms
