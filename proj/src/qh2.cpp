#include "poroms/qh2.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace poroms {

Qh2Aux build_qh2_aux(const FormSet& forms, const AuxiliarySpace& aux, int Ji) {
  if (Ji < 1) throw std::invalid_argument("build_qh2_aux: Ji must be >= 1");

  Qh2Aux q;
  q.Ji = Ji;
  const int ne = aux.n_elems();
  q.elems.reserve(size_t(ne));

  std::vector<Triplet> tg, tcw;
  for (int e = 0; e < ne; ++e) {
    const ElementAux& ea = aux.elems[size_t(e)];
    const MatX& z = ea.p_kernel;
    if (z.cols() < Ji)
      throw std::runtime_error("build_qh2_aux: element " + std::to_string(e) +
                               " kernel smaller than Ji");

    // Both forms restricted to kernel coordinates.
    MatX bz = z.transpose() * ea.lf.b * z;
    MatX cz = z.transpose() * ea.lf.c * z;
    EigResult er = gen_eig_sym(bz, cz, Ji);

    Qh2Aux::Elem el;
    el.gamma = er.values;
    el.xi = z * er.vectors; // c_i-orthonormal because the eigenvectors are cz-orthonormal
    q.elems.push_back(el);

    const int n = int(ea.lf.pnodes.size());
    for (int j = 0; j < Ji; ++j) {
      const int col = e * Ji + j;
      VecX cxi = ea.lf.c * el.xi.col(j);
      for (int k = 0; k < n; ++k) {
        tg.emplace_back(ea.lf.pdofs[size_t(k)], col, el.xi(k, j));
        tcw.emplace_back(ea.lf.pdofs[size_t(k)], col, cxi[k]);
      }
    }
  }

  q.G2 = SpMat(forms.dofs.n_p, ne * Ji);
  q.G2.setFromTriplets(tg.begin(), tg.end());
  q.G2.makeCompressed();
  q.CW2 = SpMat(forms.dofs.n_p, ne * Ji);
  q.CW2.setFromTriplets(tcw.begin(), tcw.end());
  q.CW2.makeCompressed();
  return q;
}

namespace {

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

} // namespace

MultiscaleSpace build_qh2_basis(const FormSet& forms, const AuxiliarySpace& aux,
                                const Qh2Aux& q2aux, int layers) {
  if (layers < 1) throw std::invalid_argument("build_qh2_basis: layers must be >= 1");
  const int ne = aux.n_elems();
  const int J2 = aux.J2;
  const int Ji = q2aux.Ji;

  MultiscaleSpace ms;
  ms.tag = SpaceTag::Q_H2;
  ms.basis = MatX::Zero(forms.dofs.n_p, ne * Ji);
  ms.meta.resize(size_t(ne * Ji));
  ms.support.resize(size_t(ne * Ji));

  for (int e = 0; e < ne; ++e) {
    Oversample os = oversample(forms.gp, e, layers);
    std::vector<int> dofs;
    dofs.reserve(os.interior_nodes.size());
    for (int node : os.interior_nodes) {
      const int pd = forms.dofs.node2p[size_t(node)];
      if (pd >= 0) dofs.push_back(pd);
    }
    if (dofs.empty()) throw std::runtime_error("qh2 basis: empty oversample region");
    std::vector<int> g2l(size_t(forms.dofs.n_p), -1);
    for (size_t k = 0; k < dofs.size(); ++k) g2l[size_t(dofs[k])] = int(k);
    const int np = int(dofs.size());

    std::vector<int> cols1, cols2;
    for (int m : os.members) {
      for (int j = 0; j < J2; ++j) cols1.push_back(m * J2 + j);
      for (int j = 0; j < Ji; ++j) cols2.push_back(m * Ji + j);
    }
    const int nc1 = int(cols1.size());
    const int nc2 = int(cols2.size());

    SpMat b_pp = restrict_square(forms.B, g2l, np);
    SpMat w1 = restrict_cols(aux.Wp, g2l, np, cols1);
    SpMat cw2 = restrict_cols(q2aux.CW2, g2l, np, cols2);

    // KKT: [B W1 CW2; W1^T 0 0; CW2^T 0 0]
    std::vector<Triplet> trips;
    for (int o = 0; o < b_pp.outerSize(); ++o)
      for (SpMat::InnerIterator it(b_pp, o); it; ++it)
        trips.emplace_back(int(it.row()), int(it.col()), it.value());
    for (int o = 0; o < w1.outerSize(); ++o)
      for (SpMat::InnerIterator it(w1, o); it; ++it) {
        trips.emplace_back(int(it.row()), np + int(it.col()), it.value());
        trips.emplace_back(np + int(it.col()), int(it.row()), it.value());
      }
    for (int o = 0; o < cw2.outerSize(); ++o)
      for (SpMat::InnerIterator it(cw2, o); it; ++it) {
        trips.emplace_back(int(it.row()), np + nc1 + int(it.col()), it.value());
        trips.emplace_back(np + nc1 + int(it.col()), int(it.row()), it.value());
      }

    const int ntot = np + nc1 + nc2;
    SpMat kkt(ntot, ntot);
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();
    Eigen::SparseLU<SpMat> lu(kkt);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("qh2 basis: rank-deficient constraint block on element " +
                               std::to_string(e));

    int e_pos = -1;
    for (int a = 0; a < nc2; ++a)
      if (cols2[size_t(a)] == e * Ji) e_pos = a;

    for (int j = 0; j < Ji; ++j) {
      VecX rhs = VecX::Zero(ntot);
      rhs[np + nc1 + e_pos + j] = 1.0; // c(xi_j^i, xi) in direct-sum coordinates
      VecX sol = lu.solve(rhs);
      if (lu.info() != Eigen::Success)
        throw std::runtime_error("qh2 basis: solve failed on element " + std::to_string(e));

      const int col = e * Ji + j;
      for (int k = 0; k < np; ++k) ms.basis(dofs[size_t(k)], col) = sol[k];
      ms.meta[size_t(col)] = {e, j, layers};
      ms.support[size_t(col)] = dofs;
    }
  }
  return ms;
}

StabilityReport stability_report(const FormSet& forms, const MultiscaleSpace& q1,
                                 const MultiscaleSpace& q2, double tau,
                                 std::optional<double> gamma_a_probe) {
  if (q1.cols() == 0 || q2.cols() == 0)
    throw std::invalid_argument("stability_report: both spaces must be nonempty");

  MatX cq1 = forms.C * q1.basis;
  MatX cq2 = forms.C * q2.basis;
  MatX g11 = q1.basis.transpose() * cq1;
  MatX g12 = q1.basis.transpose() * cq2;
  MatX g22 = q2.basis.transpose() * cq2;

  StabilityReport r;
  r.gamma_c = subspace_cos_angle(g11, g12, g22);

  MatX b22 = q2.basis.transpose() * (forms.B * q2.basis);
  EigResult er = gen_eig_sym(b22, g22, int(b22.rows()));
  r.lambda_max = er.values[er.values.size() - 1];

  r.coarse_h = forms.gp.coarse.hx;
  r.tau = tau;
  r.tau_max = (1.0 - r.gamma_c) / r.lambda_max;
  r.c1 = r.coarse_h * std::sqrt(r.lambda_max);
  r.pass = tau <= r.tau_max;
  r.gamma_a = gamma_a_probe;

  if (!(std::isfinite(r.gamma_c) && r.gamma_c >= 0.0 && r.gamma_c < 1.0))
    throw std::runtime_error("stability_report: gamma_c outside [0,1)");
  if (!(std::isfinite(r.lambda_max) && r.lambda_max > 0.0))
    throw std::runtime_error("stability_report: degenerate lambda_max");
  return r;
}

std::string StabilityReport::to_json() const {
  nlohmann::json j;
  j["gamma_c"] = gamma_c;
  j["lambda_max"] = lambda_max;
  j["tau_max"] = tau_max;
  j["c1"] = c1;
  j["coarse_h"] = coarse_h;
  j["tau"] = tau;
  j["verdict"] = pass ? "PASS" : "FAIL";
  if (gamma_a) j["gamma_a"] = *gamma_a;
  return j.dump(2);
}

} // namespace poroms
