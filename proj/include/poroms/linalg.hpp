#pragma once

#include <memory>
#include <utility>

#include "poroms/types.hpp"

namespace poroms {

/// Cached sparse factorization of a symmetric positive definite matrix.
/// One factorization serves any number of right-hand sides.
class SpdFactor {
 public:
  explicit SpdFactor(const SpMat& a);

  VecX solve(const VecX& b) const;
  MatX solve(const MatX& b) const;

  int size() const { return n_; }
  long reuse_count() const { return solves_; }

 private:
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> ldlt_;
  int n_ = 0;
  mutable long solves_ = 0;
};

/// Monolithic factorization of the coupled block system
///   [ A      -D^T          ] [x_u]   [r_u]
///   [ D/tau   K (=C/tau+B) ] [x_p] = [r_p]
/// used by every implicit time step. The unsymmetric block matrix is
/// factorized once; stepping only back-substitutes.
class SaddleSolver {
 public:
  SaddleSolver(const SpMat& a, const SpMat& d, const SpMat& k, double tau);

  std::pair<VecX, VecX> solve(const VecX& r_u, const VecX& r_p) const;

  int n_u() const { return nu_; }
  int n_p() const { return np_; }

 private:
  std::shared_ptr<Eigen::SparseLU<SpMat>> lu_;
  int nu_ = 0;
  int np_ = 0;
};

/// Eigenpairs of A v = lambda S v, ascending, S-orthonormal.
struct EigResult {
  VecX values;
  MatX vectors; // one column per eigenpair
};

/// k smallest eigenpairs of the symmetric generalized problem (dense).
/// S must be positive definite on the working space.
EigResult gen_eig_sym(const MatX& a, const MatX& s, int k);

/// Largest canonical-angle cosine between two subspaces given their Gram
/// matrices in a common inner product: sqrt(lmax(G11^-1 G12 G22^-1 G12^T)).
double subspace_cos_angle(const MatX& g11, const MatX& g12, const MatX& g22);

/// Relative residual ||A x - b|| / ||b|| (0 if b = 0).
double relative_residual(const SpMat& a, const VecX& x, const VecX& b);

} // namespace poroms
