#include "poroms/cem.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace poroms {

namespace {

// Rows (and columns) of a sparse matrix restricted to an index set.
SpMat restrict_square(const SpMat& m, const std::vector<int>& g2l, int n_local) {
  std::vector<Triplet> trips;
  for (int o = 0; o < m.outerSize(); ++o)
    for (SpMat::InnerIterator it(m, o); it; ++it) {
      const int r = g2l[size_t(it.row())];
      const int c = g2l[size_t(it.col())];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  SpMat out(n_local, n_local);
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

// Selected columns of a sparse matrix with rows restricted to an index set.
SpMat restrict_cols(const SpMat& m, const std::vector<int>& g2l_row, int n_local,
                    const std::vector<int>& cols) {
  std::vector<Triplet> trips;
  for (size_t j = 0; j < cols.size(); ++j)
    for (SpMat::InnerIterator it(m, cols[j]); it; ++it) {
      const int r = g2l_row[size_t(it.row())];
      if (r >= 0) trips.emplace_back(r, int(j), it.value());
    }
  SpMat out(n_local, int(cols.size()));
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

struct AuxOps {
  const SpMat* G;
  const SpMat* W;
  const MatX* Minv;
  const MatX* MMt_inv;
  int J;
  int n_dofs;
};

AuxOps pick_ops(const FormSet& forms, const AuxiliarySpace& aux, SpaceTag which) {
  if (which == SpaceTag::V_H)
    return {&aux.Gu, &aux.Wu, &aux.Minv_u, &aux.MMt_inv_u, aux.J1, forms.dofs.n_u};
  if (which == SpaceTag::Q_H1)
    return {&aux.Gp, &aux.Wp, &aux.Minv_p, &aux.MMt_inv_p, aux.J2, forms.dofs.n_p};
  throw std::invalid_argument("CEM minimization builds V_H or Q_H1 only");
}

const SpMat& energy_form(const FormSet& forms, SpaceTag which) {
  return which == SpaceTag::V_H ? forms.A : forms.B;
}

// Region dof list: pressure dofs of the interior nodes, or the interleaved
// displacement dofs of the same nodes.
std::vector<int> region_dofs(const FormSet& forms, const std::vector<int>& interior_nodes,
                             SpaceTag which) {
  std::vector<int> dofs;
  dofs.reserve(interior_nodes.size() * (which == SpaceTag::V_H ? 2 : 1));
  for (int node : interior_nodes) {
    const int pd = forms.dofs.node2p[size_t(node)];
    if (pd < 0) continue;
    if (which == SpaceTag::V_H) {
      dofs.push_back(2 * pd);
      dofs.push_back(2 * pd + 1);
    } else {
      dofs.push_back(pd);
    }
  }
  return dofs;
}

// Shared core of the localized and global constructions: per element, solve
// (K_PP + W_Pm T W_Pm^T) phi = W_Pm t_j via the symmetric augmented system.
MultiscaleSpace minimize_basis(const FormSet& forms, const AuxiliarySpace& aux, int layers,
                               SpaceTag which, bool global) {
  const AuxOps ops = pick_ops(forms, aux, which);
  const int ne = aux.n_elems();

  MultiscaleSpace ms;
  ms.tag = which;
  ms.basis = MatX::Zero(ops.n_dofs, ne * ops.J);
  ms.meta.resize(size_t(ne * ops.J));
  ms.support.resize(size_t(ne * ops.J));

  for (int e = 0; e < ne; ++e) {
    std::vector<int> members;
    std::vector<int> dofs;
    if (global) {
      members.resize(size_t(ne));
      for (int m = 0; m < ne; ++m) members[size_t(m)] = m;
      dofs.resize(size_t(ops.n_dofs));
      for (int d = 0; d < ops.n_dofs; ++d) dofs[size_t(d)] = d;
    } else {
      Oversample os = oversample(forms.gp, e, layers);
      members = os.members;
      dofs = region_dofs(forms, os.interior_nodes, which);
    }
    if (dofs.empty()) throw std::runtime_error("cem basis: empty oversample region");

    std::vector<int> g2l(size_t(ops.n_dofs), -1);
    for (size_t k = 0; k < dofs.size(); ++k) g2l[size_t(dofs[k])] = int(k);
    const int np = int(dofs.size());

    std::vector<int> cols;
    cols.reserve(members.size() * size_t(ops.J));
    for (int m : members)
      for (int j = 0; j < ops.J; ++j) cols.push_back(m * ops.J + j);
    const int nc = int(cols.size());

    SpMat k_pp = restrict_square(energy_form(forms, which), g2l, np);
    SpMat w_pm = restrict_cols(*ops.W, g2l, np, cols);

    MatX t_mem(nc, nc);
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b) t_mem(a, b) = (*ops.MMt_inv)(cols[size_t(a)], cols[size_t(b)]);
    Eigen::LLT<MatX> t_llt(t_mem);
    if (t_llt.info() != Eigen::Success)
      throw std::runtime_error("cem basis: degenerate auxiliary coupling on element " +
                               std::to_string(e));
    MatX t_inv = t_llt.solve(MatX::Identity(nc, nc));

    std::vector<Triplet> trips;
    trips.reserve(size_t(k_pp.nonZeros() + 2 * w_pm.nonZeros() + nc * nc));
    for (int o = 0; o < k_pp.outerSize(); ++o)
      for (SpMat::InnerIterator it(k_pp, o); it; ++it)
        trips.emplace_back(int(it.row()), int(it.col()), it.value());
    for (int o = 0; o < w_pm.outerSize(); ++o)
      for (SpMat::InnerIterator it(w_pm, o); it; ++it) {
        trips.emplace_back(int(it.row()), np + int(it.col()), it.value());
        trips.emplace_back(np + int(it.col()), int(it.row()), it.value());
      }
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b) trips.emplace_back(np + a, np + b, -t_inv(a, b));

    SpMat aug(np + nc, np + nc);
    aug.setFromTriplets(trips.begin(), trips.end());
    aug.makeCompressed();
    Eigen::SparseLU<SpMat> lu(aug);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("cem basis: local solve failed on element " + std::to_string(e));

    for (int j = 0; j < ops.J; ++j) {
      VecX t_col(nc);
      for (int a = 0; a < nc; ++a) t_col[a] = (*ops.Minv)(e * ops.J + j, cols[size_t(a)]);
      VecX rhs = VecX::Zero(np + nc);
      rhs.head(np) = w_pm * t_col;
      VecX sol = lu.solve(rhs);
      if (lu.info() != Eigen::Success)
        throw std::runtime_error("cem basis: solve failed on element " + std::to_string(e));

      const int col = e * ops.J + j;
      for (int k = 0; k < np; ++k) ms.basis(dofs[size_t(k)], col) = sol[k];
      ms.meta[size_t(col)] = {e, j, global ? -1 : layers};
      ms.support[size_t(col)] = dofs;
    }
  }
  return ms;
}

} // namespace

AuxiliarySpace build_auxiliary(const FormSet& forms, int J1, int J2) {
  if (J1 < 1 || J2 < 1) throw std::invalid_argument("build_auxiliary: J1 and J2 must be >= 1");
  static bool warned = false;
  if (J1 < 3 && !warned) {
    warned = true;
    std::cerr << "poroms: note: J1 = " << J1
              << " keeps fewer displacement modes than the 3-dimensional rigid-motion kernel\n";
  }

  AuxiliarySpace aux;
  aux.J1 = J1;
  aux.J2 = J2;
  const int ne = forms.gp.coarse.cell_count();
  aux.elems.reserve(size_t(ne));

  std::vector<Triplet> tgp, twp, tgu, twu;
  for (int e = 0; e < ne; ++e) {
    ElementAux ea;
    ea.lf = assemble_element_local(forms, e);
    const int n = int(ea.lf.pnodes.size());
    if (n <= J2)
      throw std::runtime_error("build_auxiliary: element " + std::to_string(e) +
                               " patch has too few dofs for J2");
    if (2 * n <= J1)
      throw std::runtime_error("build_auxiliary: element " + std::to_string(e) +
                               " patch has too few dofs for J1");

    // Pressure: keep the whole spectrum; the tail is the pi_2 kernel.
    EigResult ep = gen_eig_sym(ea.lf.b, ea.lf.s2, n);
    ea.p_vals = ep.values.head(J2);
    ea.p_vecs = ep.vectors.leftCols(J2);
    ea.p_kernel = ep.vectors.rightCols(n - J2);

    EigResult eu = gen_eig_sym(ea.lf.a, ea.lf.s1, J1);
    ea.u_vals = eu.values;
    ea.u_vecs = eu.vectors;

    VecX wloc;
    for (int j = 0; j < J2; ++j) {
      const int col = e * J2 + j;
      wloc = ea.lf.s2 * ea.p_vecs.col(j);
      for (int k = 0; k < n; ++k) {
        tgp.emplace_back(ea.lf.pdofs[size_t(k)], col, ea.p_vecs(k, j));
        twp.emplace_back(ea.lf.pdofs[size_t(k)], col, wloc[k]);
      }
    }
    for (int j = 0; j < J1; ++j) {
      const int col = e * J1 + j;
      wloc = ea.lf.s1 * ea.u_vecs.col(j);
      for (int k = 0; k < n; ++k) {
        const int pd = ea.lf.pdofs[size_t(k)];
        for (int a = 0; a < 2; ++a) {
          tgu.emplace_back(2 * pd + a, col, ea.u_vecs(2 * k + a, j));
          twu.emplace_back(2 * pd + a, col, wloc[2 * k + a]);
        }
      }
    }
    aux.elems.push_back(std::move(ea));
  }

  auto make = [](int r, int c, std::vector<Triplet>& tr) {
    SpMat m(r, c);
    m.setFromTriplets(tr.begin(), tr.end());
    m.makeCompressed();
    return m;
  };
  aux.Gp = make(forms.dofs.n_p, ne * J2, tgp);
  aux.Wp = make(forms.dofs.n_p, ne * J2, twp);
  aux.Gu = make(forms.dofs.n_u, ne * J1, tgu);
  aux.Wu = make(forms.dofs.n_u, ne * J1, twu);

  auto dual = [](const SpMat& w, const SpMat& g, MatX& minv, MatX& mmt_inv) {
    MatX m = MatX(w.transpose() * g);
    Eigen::PartialPivLU<MatX> lu(m);
    minv = lu.inverse();
    MatX mmt = m * m.transpose();
    Eigen::LLT<MatX> llt(mmt);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("build_auxiliary: singular auxiliary coefficient Gram");
    mmt_inv = llt.solve(MatX::Identity(m.rows(), m.rows()));
  };
  dual(aux.Wp, aux.Gp, aux.Minv_p, aux.MMt_inv_p);
  dual(aux.Wu, aux.Gu, aux.Minv_u, aux.MMt_inv_u);
  return aux;
}

VecX project_pi_pressure(const AuxiliarySpace& aux, const VecX& v) {
  return aux.Gp * (aux.Minv_p * (aux.Wp.transpose() * v));
}

VecX project_pi_displacement(const AuxiliarySpace& aux, const VecX& v) {
  return aux.Gu * (aux.Minv_u * (aux.Wu.transpose() * v));
}

const MatX& kernel_basis(const AuxiliarySpace& aux, int elem) {
  if (elem < 0 || elem >= aux.n_elems()) throw std::out_of_range("kernel_basis: bad element");
  return aux.elems[size_t(elem)].p_kernel;
}

MultiscaleSpace build_cem_basis(const FormSet& forms, const AuxiliarySpace& aux, int layers,
                                SpaceTag which) {
  if (layers < 1) throw std::invalid_argument("build_cem_basis: layers must be >= 1");
  return minimize_basis(forms, aux, layers, which, false);
}

MultiscaleSpace build_global_basis(const FormSet& forms, const AuxiliarySpace& aux,
                                   SpaceTag which) {
  if (forms.gp.fine.nx > 64 || forms.gp.fine.ny > 64)
    throw std::invalid_argument("build_global_basis: refused above a 64x64 fine grid");
  return minimize_basis(forms, aux, 0, which, true);
}

void export_basis(const MultiscaleSpace& space, const std::string& path_prefix, int coarse_n,
                  int ratio, int J, std::uint64_t coeff_hash) {
  std::ofstream csv(path_prefix + ".csv");
  if (!csv) throw std::runtime_error("export_basis: cannot open " + path_prefix + ".csv");
  char buf[64];
  for (int c = 0; c < space.basis.cols(); ++c)
    for (int r = 0; r < space.basis.rows(); ++r)
      if (space.basis(r, c) != 0.0) {
        std::snprintf(buf, sizeof(buf), "%d,%d,%.17g\n", r, c, space.basis(r, c));
        csv << buf;
      }

  nlohmann::json meta;
  meta["coarse_n"] = coarse_n;
  meta["ratio"] = ratio;
  meta["layers"] = space.meta.empty() ? 0 : space.meta.front().layers;
  meta["J"] = J;
  meta["tag"] = space.tag == SpaceTag::V_H ? "V_H" : (space.tag == SpaceTag::Q_H1 ? "Q_H1" : "Q_H2");
  meta["rows"] = int(space.basis.rows());
  meta["cols"] = int(space.basis.cols());
  meta["coeff_hash"] = coeff_hash;
  std::ofstream js(path_prefix + ".json");
  js << meta.dump(2) << "\n";
}

MultiscaleSpace import_basis(const std::string& path_prefix, std::uint64_t expect_coeff_hash) {
  std::ifstream js(path_prefix + ".json");
  if (!js) throw std::runtime_error("import_basis: cannot open " + path_prefix + ".json");
  nlohmann::json meta = nlohmann::json::parse(js);
  if (meta.at("coeff_hash").get<std::uint64_t>() != expect_coeff_hash)
    throw std::runtime_error("import_basis: coefficient hash mismatch with the active field");

  MultiscaleSpace ms;
  const std::string tag = meta.at("tag").get<std::string>();
  ms.tag = tag == "V_H" ? SpaceTag::V_H : (tag == "Q_H1" ? SpaceTag::Q_H1 : SpaceTag::Q_H2);
  ms.basis = MatX::Zero(meta.at("rows").get<int>(), meta.at("cols").get<int>());
  const int J = meta.at("J").get<int>();
  const int layers = meta.at("layers").get<int>();
  ms.meta.resize(size_t(ms.basis.cols()));
  ms.support.resize(size_t(ms.basis.cols()));
  for (int c = 0; c < ms.basis.cols(); ++c) ms.meta[size_t(c)] = {c / J, c % J, layers};

  std::ifstream csv(path_prefix + ".csv");
  if (!csv) throw std::runtime_error("import_basis: cannot open " + path_prefix + ".csv");
  std::string line;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    const int r = std::stoi(tok);
    std::getline(ss, tok, ',');
    const int c = std::stoi(tok);
    std::getline(ss, tok, ',');
    ms.basis(r, c) = std::stod(tok);
    ms.support[size_t(c)].push_back(r);
  }
  return ms;
}

} // namespace poroms
