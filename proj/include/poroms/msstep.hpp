#pragma once

#include <optional>
#include <vector>

#include "poroms/fine_ref.hpp"
#include "poroms/qh2.hpp"

namespace poroms {

/// Galerkin projections of every fine form onto the multiscale bases.
struct ReducedSystem {
  MatX a_r;                     // V_H x V_H
  MatX b11, b12, b22;           // pressure blocks (Q1, Q1xQ2, Q2)
  MatX c11, c12, c22;
  MatX d1, d2;                  // n1 x NV, n2 x NV
  MatX rv, r1, r2;              // prolongation matrices
  const FormSet* forms = nullptr;
  bool has_q2 = false;
  int nv = 0, n1 = 0, n2 = 0;
};

ReducedSystem reduce(const FormSet& forms, const MultiscaleSpace& v_h,
                     const MultiscaleSpace& q1, const MultiscaleSpace* q2 = nullptr);

/// Coefficient state of the splitting scheme. For the purely implicit coarse
/// schemes U2 stays zero and (P1, P2) hold the joint solution coordinates.
struct SplitState {
  VecX u1, u2, p1, p2;
  VecX du1, du2, dp1, dp2; // lagged differences, zero at n = 0
  int n = 0;
};

/// Initial coarse state: b-projection of p0 onto Q_{H,1} (+) Q_{H,2},
/// displacement from the elasticity equations at n = 0, differences zero.
SplitState initial_split_state(const ScalarFn& p0, const ReducedSystem& rs);

/// Backward-Euler coarse scheme over V_H x (Q_{H,1} (+) Q_{H,2}); f at t_{n+1}.
class ImplicitCoarseStepper {
 public:
  ImplicitCoarseStepper(const ReducedSystem& rs, double tau, bool use_q2);
  SplitState step(const SplitState& s, const VecX& fine_load_next) const;
  double tau() const { return tau_; }

 private:
  const ReducedSystem* rs_;
  double tau_;
  bool use_q2_;
  Eigen::PartialPivLU<MatX> lu_;
  int nv_, np_;
};

/// Two-stage partially explicit scheme; f at t_n. Both stage matrices are
/// time-independent and factorized once.
class SplitStepper {
 public:
  SplitStepper(const ReducedSystem& rs, double tau, const StabilityReport* report = nullptr);
  SplitState step(const SplitState& s, const VecX& fine_load_now) const;
  double tau() const { return tau_; }

 private:
  const ReducedSystem* rs_;
  double tau_;
  double tau_max_ = -1.0;
  Eigen::PartialPivLU<MatX> stage1_;
  Eigen::PartialPivLU<MatX> stage2_;
};

/// Fine-grid view of a coarse state: u = Rv (U1 + U2), p = R1 P1 + R2 P2.
std::pair<VecX, VecX> prolong(const ReducedSystem& rs, const SplitState& s);

struct CoarseTrajectory {
  std::vector<SplitState> states; // every step, including n = 0
  TimeGrid tg;
  std::string method;
};

CoarseTrajectory run_implicit(const ReducedSystem& rs, double tau, int steps, const ScalarFn& p0,
                              const SourceFn& f, bool use_q2);
CoarseTrajectory run_split(const ReducedSystem& rs, double tau, int steps, const ScalarFn& p0,
                           const SourceFn& f, const StabilityReport* report = nullptr);

Trajectory to_fine_trajectory(const ReducedSystem& rs, const CoarseTrajectory& ct,
                              int save_stride = 1);

/// Per-step Lyapunov quantity of the stability theorem and its source budget.
struct LyapunovTrace {
  VecX energy;              // E_n, one entry per state
  VecX budget;              // (2 tau^2/(1-gamma_c)) ||M^(1/2) f^n||^2 for steps n -> n+1
  std::vector<int> flagged; // steps where E_{n+1} > E_n + budget_n + 1e-12
};

LyapunovTrace lyapunov_trace(const std::vector<SplitState>& states, const ReducedSystem& rs,
                             double tau, double gamma_a, double gamma_c,
                             const SourceFn* f = nullptr);

/// Empirical strengthened Cauchy-Schwarz cosine of the a-form between lagged
/// stage differences over a trajectory; the theorem's gamma_a has no
/// subspace-pair definition when both parts share V_H.
double empirical_gamma_a(const std::vector<SplitState>& states, const ReducedSystem& rs);

} // namespace poroms
