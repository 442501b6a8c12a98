#pragma once

#include <optional>
#include <string>

#include "poroms/cem.hpp"

namespace poroms {

/// Second-type auxiliary space: per element, the J_i smallest eigenpairs of
/// b_i xi = gamma c_i xi posed on the kernel of pi_2 within the patch,
/// c-orthonormal within the element.
struct Qh2Aux {
  int Ji = 2;
  struct Elem {
    MatX xi;    // patch x Ji, local coordinates
    VecX gamma; // ascending
  };
  std::vector<Elem> elems;
  SpMat G2;  // n_p x (Ne*Ji): synthesized columns
  SpMat CW2; // n_p x (Ne*Ji): element-local c-analysis vectors c_i * xi
};

Qh2Aux build_qh2_aux(const FormSet& forms, const AuxiliarySpace& aux, int Ji);

/// Q_{H,2} basis: per auxiliary function, the constrained minimization on the
/// zero-trace space of K_{i,ell} with multipliers in the restricted auxiliary
/// spans (s2-orthogonality to Q_aux1, c-moment matching against Q_aux2).
MultiscaleSpace build_qh2_basis(const FormSet& forms, const AuxiliarySpace& aux,
                                const Qh2Aux& q2aux, int layers);

/// CFL diagnostics of the explicit space.
struct StabilityReport {
  double gamma_c = 0.0;   // c-angle between Q_{H,1} and Q_{H,2}
  double lambda_max = 0.0; // largest eigenvalue of b vs c on Q_{H,2}
  double tau_max = 0.0;    // (1 - gamma_c) / lambda_max
  double c1 = 0.0;         // H * sqrt(lambda_max)
  double coarse_h = 0.0;
  double tau = 0.0;
  bool pass = false; // tau <= tau_max
  std::optional<double> gamma_a;

  std::string to_json() const;
};

StabilityReport stability_report(const FormSet& forms, const MultiscaleSpace& q1,
                                 const MultiscaleSpace& q2, double tau,
                                 std::optional<double> gamma_a_probe = std::nullopt);

} // namespace poroms
