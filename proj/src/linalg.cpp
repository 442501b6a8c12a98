#include "poroms/linalg.hpp"

#include <stdexcept>

namespace poroms {

SpdFactor::SpdFactor(const SpMat& a) : n_(int(a.rows())) {
  if (a.rows() != a.cols()) throw std::invalid_argument("SpdFactor: matrix must be square");
  ldlt_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
  ldlt_->compute(a);
  if (ldlt_->info() != Eigen::Success)
    throw std::runtime_error("SpdFactor: factorization failed (matrix not SPD?)");
  if (n_ > 0 && ldlt_->vectorD().minCoeff() <= 0.0)
    throw std::runtime_error("SpdFactor: matrix is not positive definite");
}

VecX SpdFactor::solve(const VecX& b) const {
  if (b.size() != n_) throw std::invalid_argument("SpdFactor::solve: size mismatch");
  ++solves_;
  return ldlt_->solve(b);
}

MatX SpdFactor::solve(const MatX& b) const {
  if (b.rows() != n_) throw std::invalid_argument("SpdFactor::solve: size mismatch");
  solves_ += b.cols();
  return ldlt_->solve(b);
}

SaddleSolver::SaddleSolver(const SpMat& a, const SpMat& d, const SpMat& k, double tau)
    : nu_(int(a.rows())), np_(int(d.rows())) {
  if (a.rows() != a.cols() || k.rows() != k.cols())
    throw std::invalid_argument("SaddleSolver: diagonal blocks must be square");
  if (d.cols() != a.rows() || k.rows() != d.rows())
    throw std::invalid_argument("SaddleSolver: block dimensions inconsistent");
  if (!(tau > 0.0)) throw std::invalid_argument("SaddleSolver: tau must be positive");

  const int n = nu_ + np_;
  std::vector<Triplet> trips;
  trips.reserve(size_t(a.nonZeros() + 2 * d.nonZeros() + k.nonZeros()));
  for (int o = 0; o < a.outerSize(); ++o)
    for (SpMat::InnerIterator it(a, o); it; ++it)
      trips.emplace_back(int(it.row()), int(it.col()), it.value());
  for (int o = 0; o < d.outerSize(); ++o)
    for (SpMat::InnerIterator it(d, o); it; ++it) {
      trips.emplace_back(int(it.row()) + nu_, int(it.col()), it.value() / tau); // D/tau
      trips.emplace_back(int(it.col()), int(it.row()) + nu_, -it.value());      // -D^T
    }
  for (int o = 0; o < k.outerSize(); ++o)
    for (SpMat::InnerIterator it(k, o); it; ++it)
      trips.emplace_back(int(it.row()) + nu_, int(it.col()) + nu_, it.value());

  SpMat block(n, n);
  block.setFromTriplets(trips.begin(), trips.end());
  block.makeCompressed();

  lu_ = std::make_shared<Eigen::SparseLU<SpMat>>();
  lu_->compute(block);
  if (lu_->info() != Eigen::Success)
    throw std::runtime_error("SaddleSolver: block factorization failed (singular system?)");
}

std::pair<VecX, VecX> SaddleSolver::solve(const VecX& r_u, const VecX& r_p) const {
  if (r_u.size() != nu_ || r_p.size() != np_)
    throw std::invalid_argument("SaddleSolver::solve: rhs size mismatch");
  VecX rhs(nu_ + np_);
  rhs.head(nu_) = r_u;
  rhs.tail(np_) = r_p;
  VecX x = lu_->solve(rhs);
  if (lu_->info() != Eigen::Success) throw std::runtime_error("SaddleSolver::solve failed");
  return {x.head(nu_), x.tail(np_)};
}

EigResult gen_eig_sym(const MatX& a, const MatX& s, int k) {
  if (a.rows() != a.cols() || s.rows() != s.cols() || a.rows() != s.rows())
    throw std::invalid_argument("gen_eig_sym: dimension mismatch");
  if (k < 1 || k > a.rows()) throw std::invalid_argument("gen_eig_sym: bad eigenpair count");

  // Reject S that is singular on the working space before Eigen divides by it.
  Eigen::LLT<MatX> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gen_eig_sym: right-hand side matrix is not positive definite");

  Eigen::GeneralizedSelfAdjointEigenSolver<MatX> ges(a, s,
                                                     Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) throw std::runtime_error("gen_eig_sym: eigensolver failed");

  EigResult r;
  r.values = ges.eigenvalues().head(k);
  r.vectors = ges.eigenvectors().leftCols(k);
  return r;
}

double subspace_cos_angle(const MatX& g11, const MatX& g12, const MatX& g22) {
  Eigen::LLT<MatX> l11(g11), l22(g22);
  if (l11.info() != Eigen::Success || l22.info() != Eigen::Success)
    throw std::runtime_error("subspace_cos_angle: Gram matrix is not positive definite");

  // T = L11^-1 G12 L22^-T; largest singular value is the angle cosine.
  MatX t = l11.matrixL().solve(g12);
  t = l22.matrixL().solve(t.transpose()).transpose();
  Eigen::JacobiSVD<MatX> svd(t);
  double c = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  return std::min(1.0, std::max(0.0, c));
}

double relative_residual(const SpMat& a, const VecX& x, const VecX& b) {
  const double nb = b.norm();
  if (nb == 0.0) return (a * x).norm();
  return (a * x - b).norm() / nb;
}

} // namespace poroms
