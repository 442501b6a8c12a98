#pragma once

#include <memory>
#include <vector>

#include "poroms/coeff.hpp"
#include "poroms/grid.hpp"
#include "poroms/types.hpp"

namespace poroms {

/// Interior-node dof numbering with homogeneous Dirichlet elimination.
/// Pressure dof k lives at fine node p2node[k]; the node's displacement dofs
/// are (2k, 2k+1) = (x, y) components.
struct DofMap {
  std::vector<int> node2p; // fine node -> pressure dof, -1 on the boundary
  std::vector<int> p2node;
  int n_p = 0;
  int n_u = 0;

  static DofMap build(const StructuredGrid& fine);
};

/// Geometry and coefficient data of one fine triangle, precomputed once and
/// shared by global and element-local assembly so both integrate identically.
struct TriData {
  std::array<int, 3> nodes;
  double area;
  double grad[3][2];   // constant P1 basis gradients
  int coarse_elem;
  double lambda, mu;   // Lame values of the owning cell
  double kappa_nu;     // kappa / nu
  double tilde_sigma;  // (lambda+2mu) * sum_i |grad chi_i|^2 on this triangle
  double tilde_kappa;  // (kappa/nu)   * sum_i |grad chi_i|^2
};

/// All assembled fine-grid forms plus the per-triangle table they came from.
struct FormSet {
  DofMap dofs;
  SpMat A;  // elasticity a(u,v), n_u x n_u
  SpMat B;  // Darcy b(p,q), n_p x n_p
  SpMat C;  // (1/M) mass, n_p x n_p
  SpMat D;  // coupling d(u,q): row = pressure test dof, col = displacement dof
  SpMat S1; // tilde_sigma-weighted vector mass, n_u x n_u
  SpMat S2; // tilde_kappa-weighted mass, n_p x n_p
  SpMat MP; // plain mass, n_p x n_p

  double alpha = 0.0;
  double inv_m = 0.0; // 1/M
  std::shared_ptr<const std::vector<TriData>> tris;
  GridPair gp;
};

FormSet assemble_forms(const GridPair& gp, const CoefficientField& field,
                       const PhysicsConstants& pc, const std::vector<VecX>& hats);

/// Load vector (f(t), phi_q) by the 3-point edge-midpoint rule.
VecX assemble_load(const GridPair& gp, const DofMap& dofs, const SourceFn& f, double t);

/// integral of f(t)^2 over the domain by the same quadrature rule.
double source_l2_squared(const GridPair& gp, const SourceFn& f, double t);

/// Element-local forms of one coarse element: integrals over K_i only, on the
/// closed node patch of K_i (domain-boundary nodes excluded). Dense because
/// patches are small by construction.
struct LocalForms {
  std::vector<int> pnodes;  // fine node ids, sorted
  std::vector<int> pdofs;   // matching global pressure dofs
  MatX a;   // 2n x 2n, displacement dofs interleaved (x,y) per local node
  MatX s1;
  MatX b;   // n x n
  MatX s2;
  MatX c;
};

LocalForms assemble_element_local(const FormSet& forms, int coarse_elem);

namespace detail {
/// Element matrices of a single triangle, used by tests as well.
void tri_elastic(const TriData& td, double em[6][6]);
void tri_scalar_stiffness(const TriData& td, double w, double em[3][3]);
void tri_mass(const TriData& td, double w, double em[3][3]);
} // namespace detail

} // namespace poroms
