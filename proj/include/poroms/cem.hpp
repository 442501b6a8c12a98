#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poroms/assembly.hpp"
#include "poroms/linalg.hpp"

namespace poroms {

/// Which multiscale space a basis matrix spans.
enum class SpaceTag { V_H, Q_H1, Q_H2 };

struct ColMeta {
  int elem = -1;  // coarse element the column belongs to
  int local = -1; // local auxiliary index j
  int layers = 0; // oversampling layers (-1 for global construction)
};

/// Columns of fine-dof coefficients spanning V_H, Q_{H,1} or Q_{H,2}.
/// Entries outside a column's oversampled region are exact zeros.
struct MultiscaleSpace {
  SpaceTag tag = SpaceTag::Q_H1;
  MatX basis;
  std::vector<ColMeta> meta;
  std::vector<std::vector<int>> support; // dof set of each column

  int cols() const { return int(basis.cols()); }
};

/// Element-local spectral data: the J smallest eigenpairs of the Neumann-type
/// problems a_i v = lambda s1_i v and b_i q = zeta s2_i q on the closed node
/// patch of K_i, s-orthonormal within the element, plus the s2-orthonormal
/// complement of the pressure modes (the kernel of pi_2 on the patch).
struct ElementAux {
  LocalForms lf;
  MatX u_vecs; // 2n x J1
  VecX u_vals;
  MatX p_vecs; // n x J2
  VecX p_vals;
  MatX p_kernel; // n x (n - J2)
};

/// Global auxiliary space with its analysis/synthesis operators.
///
/// Auxiliary functions of distinct elements are treated as a direct sum with a
/// block-identity s-Gram. Because patches share edge nodes, the raw
/// element-local coefficients W^T v are not exactly biorthogonal to the
/// synthesized columns G; the dual correction (W^T G)^{-1} restores exact
/// biorthogonality, so pi = G (W^T G)^{-1} W^T is a projection to machine
/// precision and fixes every auxiliary column exactly.
struct AuxiliarySpace {
  int J1 = 2;
  int J2 = 2;
  std::vector<ElementAux> elems;

  SpMat Gp, Wp;  // n_p x (Ne*J2): synthesized columns / raw s2-analysis vectors
  MatX Minv_p;   // (Wp^T Gp)^{-1}
  MatX MMt_inv_p;
  SpMat Gu, Wu;  // n_u x (Ne*J1)
  MatX Minv_u;
  MatX MMt_inv_u;

  int n_elems() const { return int(elems.size()); }
};

AuxiliarySpace build_auxiliary(const FormSet& forms, int J1, int J2);

/// pi_1 (displacement) / pi_2 (pressure) applied to a fine vector; idempotent.
VecX project_pi_pressure(const AuxiliarySpace& aux, const VecX& v);
VecX project_pi_displacement(const AuxiliarySpace& aux, const VecX& v);

/// s2-orthonormal basis of Q(K_i) intersected with the kernel of pi_2,
/// in local patch coordinates.
const MatX& kernel_basis(const AuxiliarySpace& aux, int elem);

/// Localized constraint-energy-minimizing basis on K_{i,ell}, one SPD solve
/// per auxiliary function (penalized form, no saddle structure).
MultiscaleSpace build_cem_basis(const FormSet& forms, const AuxiliarySpace& aux, int layers,
                                SpaceTag which);

/// Same minimization posed on the whole domain; validation tool for decay
/// studies, refused above 64x64 fine grids.
MultiscaleSpace build_global_basis(const FormSet& forms, const AuxiliarySpace& aux,
                                   SpaceTag which);

/// Portable export: triplet CSV plus a JSON metadata sidecar. Import checks
/// the stored coefficient hash against the active field.
void export_basis(const MultiscaleSpace& space, const std::string& path_prefix, int coarse_n,
                  int ratio, int J, std::uint64_t coeff_hash);
MultiscaleSpace import_basis(const std::string& path_prefix, std::uint64_t expect_coeff_hash);

} // namespace poroms
