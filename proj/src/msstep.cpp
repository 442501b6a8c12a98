#include "poroms/msstep.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace poroms {

namespace {

void check_basis_rank(const MatX& basis, const char* name) {
  if (basis.cols() == 0) throw std::invalid_argument(std::string(name) + ": empty basis");
  MatX gram = basis.transpose() * basis;
  Eigen::SelfAdjointEigenSolver<MatX> es(gram, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12)
    throw std::runtime_error(std::string(name) + ": rank-deficient basis, Gram condition " +
                             std::to_string(lmax / std::max(lmin, 0.0)));
}

VecX p0_nodal(const FormSet& forms, const ScalarFn& p0) {
  VecX v(forms.dofs.n_p);
  for (int k = 0; k < forms.dofs.n_p; ++k) {
    const int node = forms.dofs.p2node[size_t(k)];
    v[k] = p0(forms.gp.fine.node_x(node), forms.gp.fine.node_y(node));
  }
  return v;
}

} // namespace

ReducedSystem reduce(const FormSet& forms, const MultiscaleSpace& v_h,
                     const MultiscaleSpace& q1, const MultiscaleSpace* q2) {
  if (v_h.basis.rows() != forms.dofs.n_u || q1.basis.rows() != forms.dofs.n_p)
    throw std::invalid_argument("reduce: basis dimensions do not match the forms");
  check_basis_rank(v_h.basis, "reduce(V_H)");
  check_basis_rank(q1.basis, "reduce(Q_H1)");

  ReducedSystem rs;
  rs.forms = &forms;
  rs.rv = v_h.basis;
  rs.r1 = q1.basis;
  rs.nv = int(rs.rv.cols());
  rs.n1 = int(rs.r1.cols());

  rs.a_r = rs.rv.transpose() * (forms.A * rs.rv);
  rs.b11 = rs.r1.transpose() * (forms.B * rs.r1);
  rs.c11 = rs.r1.transpose() * (forms.C * rs.r1);
  rs.d1 = rs.r1.transpose() * (forms.D * rs.rv);

  if (q2 != nullptr) {
    if (q2->basis.rows() != forms.dofs.n_p)
      throw std::invalid_argument("reduce: Q_H2 dimensions do not match the forms");
    check_basis_rank(q2->basis, "reduce(Q_H2)");
    rs.has_q2 = true;
    rs.r2 = q2->basis;
    rs.n2 = int(rs.r2.cols());
    rs.b12 = rs.r1.transpose() * (forms.B * rs.r2);
    rs.b22 = rs.r2.transpose() * (forms.B * rs.r2);
    rs.c12 = rs.r1.transpose() * (forms.C * rs.r2);
    rs.c22 = rs.r2.transpose() * (forms.C * rs.r2);
    rs.d2 = rs.r2.transpose() * (forms.D * rs.rv);
  }
  return rs;
}

SplitState initial_split_state(const ScalarFn& p0, const ReducedSystem& rs) {
  const FormSet& forms = *rs.forms;
  VecX p0f = p0_nodal(forms, p0);
  VecX bp = forms.B * p0f;

  SplitState s;
  if (rs.has_q2) {
    const int n = rs.n1 + rs.n2;
    MatX gram(n, n);
    gram.topLeftCorner(rs.n1, rs.n1) = rs.b11;
    gram.topRightCorner(rs.n1, rs.n2) = rs.b12;
    gram.bottomLeftCorner(rs.n2, rs.n1) = rs.b12.transpose();
    gram.bottomRightCorner(rs.n2, rs.n2) = rs.b22;
    VecX rhs(n);
    rhs.head(rs.n1) = rs.r1.transpose() * bp;
    rhs.tail(rs.n2) = rs.r2.transpose() * bp;
    Eigen::LLT<MatX> llt(gram);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("initial_split_state: singular coupled b-Gram (collinear spaces)");
    VecX sol = llt.solve(rhs);
    s.p1 = sol.head(rs.n1);
    s.p2 = sol.tail(rs.n2);
  } else {
    Eigen::LLT<MatX> llt(rs.b11);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("initial_split_state: singular b-Gram");
    s.p1 = llt.solve(rs.r1.transpose() * bp);
    s.p2 = VecX::Zero(rs.n2);
  }

  Eigen::LLT<MatX> a_llt(rs.a_r);
  if (a_llt.info() != Eigen::Success)
    throw std::runtime_error("initial_split_state: elasticity block not positive definite");
  s.u1 = a_llt.solve(rs.d1.transpose() * s.p1);
  s.u2 = rs.has_q2 ? VecX(a_llt.solve(rs.d2.transpose() * s.p2)) : VecX::Zero(rs.nv);

  s.du1 = VecX::Zero(rs.nv);
  s.du2 = VecX::Zero(rs.nv);
  s.dp1 = VecX::Zero(rs.n1);
  s.dp2 = VecX::Zero(rs.n2);
  s.n = 0;
  return s;
}

ImplicitCoarseStepper::ImplicitCoarseStepper(const ReducedSystem& rs, double tau, bool use_q2)
    : rs_(&rs), tau_(tau), use_q2_(use_q2) {
  if (!(tau > 0.0)) throw std::invalid_argument("ImplicitCoarseStepper: tau must be positive");
  if (use_q2 && !rs.has_q2)
    throw std::invalid_argument("ImplicitCoarseStepper: reduced system has no Q_H2 blocks");

  nv_ = rs.nv;
  np_ = use_q2 ? rs.n1 + rs.n2 : rs.n1;
  MatX d(np_, nv_), c(np_, np_), b(np_, np_);
  if (use_q2) {
    d.topRows(rs.n1) = rs.d1;
    d.bottomRows(rs.n2) = rs.d2;
    c.topLeftCorner(rs.n1, rs.n1) = rs.c11;
    c.topRightCorner(rs.n1, rs.n2) = rs.c12;
    c.bottomLeftCorner(rs.n2, rs.n1) = rs.c12.transpose();
    c.bottomRightCorner(rs.n2, rs.n2) = rs.c22;
    b.topLeftCorner(rs.n1, rs.n1) = rs.b11;
    b.topRightCorner(rs.n1, rs.n2) = rs.b12;
    b.bottomLeftCorner(rs.n2, rs.n1) = rs.b12.transpose();
    b.bottomRightCorner(rs.n2, rs.n2) = rs.b22;
  } else {
    d = rs.d1;
    c = rs.c11;
    b = rs.b11;
  }

  MatX sys(nv_ + np_, nv_ + np_);
  sys.topLeftCorner(nv_, nv_) = rs.a_r;
  sys.topRightCorner(nv_, np_) = -d.transpose();
  sys.bottomLeftCorner(np_, nv_) = d / tau;
  sys.bottomRightCorner(np_, np_) = c / tau + b;
  lu_.compute(sys);
}

SplitState ImplicitCoarseStepper::step(const SplitState& s, const VecX& fine_load_next) const {
  const ReducedSystem& rs = *rs_;
  VecX p(np_), f(np_);
  if (use_q2_) {
    p.head(rs.n1) = s.p1;
    p.tail(rs.n2) = s.p2;
    f.head(rs.n1) = rs.r1.transpose() * fine_load_next;
    f.tail(rs.n2) = rs.r2.transpose() * fine_load_next;
  } else {
    p = s.p1;
    f = rs.r1.transpose() * fine_load_next;
  }

  // r_p = F + (1/tau) D u + (1/tau) C p
  VecX dp_u, cp(np_);
  if (use_q2_) {
    dp_u.resize(np_);
    dp_u.head(rs.n1) = rs.d1 * s.u1;
    dp_u.tail(rs.n2) = rs.d2 * s.u1;
    cp.head(rs.n1) = rs.c11 * p.head(rs.n1) + rs.c12 * p.tail(rs.n2);
    cp.tail(rs.n2) = rs.c12.transpose() * p.head(rs.n1) + rs.c22 * p.tail(rs.n2);
  } else {
    dp_u = rs.d1 * s.u1;
    cp = rs.c11 * p;
  }

  VecX rhs(nv_ + np_);
  rhs.head(nv_).setZero();
  rhs.tail(np_) = f + dp_u / tau_ + cp / tau_;
  VecX sol = lu_.solve(rhs);
  if (!sol.allFinite())
    throw std::runtime_error("implicit coarse step diverged at step " + std::to_string(s.n + 1));

  SplitState out;
  out.u1 = sol.head(nv_);
  out.u2 = VecX::Zero(rs.nv);
  out.p1 = sol.segment(nv_, rs.n1);
  out.p2 = use_q2_ ? VecX(sol.tail(rs.n2)) : VecX::Zero(rs.n2);
  out.du1 = out.u1 - s.u1;
  out.du2 = VecX::Zero(rs.nv);
  out.dp1 = out.p1 - s.p1;
  out.dp2 = out.p2 - s.p2;
  out.n = s.n + 1;
  return out;
}

SplitStepper::SplitStepper(const ReducedSystem& rs, double tau, const StabilityReport* report)
    : rs_(&rs), tau_(tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("SplitStepper: tau must be positive");
  if (!rs.has_q2) throw std::invalid_argument("SplitStepper: Q_H2 blocks are required");
  if (report != nullptr) {
    tau_max_ = report->tau_max;
    if (!report->pass)
      std::cerr << "poroms: warning: split stepper with tau = " << tau
                << " above the stability bound tau_max = " << report->tau_max << "\n";
  }

  MatX m1(rs.nv + rs.n1, rs.nv + rs.n1);
  m1.topLeftCorner(rs.nv, rs.nv) = rs.a_r;
  m1.topRightCorner(rs.nv, rs.n1) = -rs.d1.transpose();
  m1.bottomLeftCorner(rs.n1, rs.nv) = rs.d1 / tau;
  m1.bottomRightCorner(rs.n1, rs.n1) = rs.c11 / tau + rs.b11;
  stage1_.compute(m1);

  MatX m2(rs.nv + rs.n2, rs.nv + rs.n2);
  m2.topLeftCorner(rs.nv, rs.nv) = rs.a_r;
  m2.topRightCorner(rs.nv, rs.n2) = -rs.d2.transpose();
  m2.bottomLeftCorner(rs.n2, rs.nv) = rs.d2 / tau;
  m2.bottomRightCorner(rs.n2, rs.n2) = rs.c22 / tau; // no b-block: explicit part
  stage2_.compute(m2);
}

SplitState SplitStepper::step(const SplitState& s, const VecX& fine_load_now) const {
  const ReducedSystem& rs = *rs_;
  VecX f1 = rs.r1.transpose() * fine_load_now;
  VecX f2 = rs.r2.transpose() * fine_load_now;

  VecX rhs1(rs.nv + rs.n1);
  rhs1.head(rs.nv).setZero();
  rhs1.tail(rs.n1) = f1 + (rs.d1 * s.u1) / tau_ + (rs.c11 * s.p1) / tau_ -
                     (rs.d1 * s.du2) / tau_ - (rs.c12 * s.dp2) / tau_ - rs.b12 * s.p2;
  VecX sol1 = stage1_.solve(rhs1);

  VecX u1_new = sol1.head(rs.nv);
  VecX p1_new = sol1.tail(rs.n1);

  VecX rhs2(rs.nv + rs.n2);
  rhs2.head(rs.nv).setZero();
  rhs2.tail(rs.n2) = f2 + (rs.d2 * s.u2) / tau_ + (rs.c22 * s.p2) / tau_ -
                     (rs.d2 * s.du1) / tau_ - (rs.c12.transpose() * s.dp1) / tau_ -
                     rs.b12.transpose() * p1_new - rs.b22 * s.p2;
  VecX sol2 = stage2_.solve(rhs2);

  if (!sol1.allFinite() || !sol2.allFinite()) {
    std::string msg = "split stepper: non-finite state at step " + std::to_string(s.n + 1);
    if (tau_max_ > 0.0)
      msg += " (tau = " + std::to_string(tau_) + ", stability bound tau_max = " +
             std::to_string(tau_max_) + ")";
    throw std::runtime_error(msg);
  }

  SplitState out;
  out.u1 = u1_new;
  out.p1 = p1_new;
  out.u2 = sol2.head(rs.nv);
  out.p2 = sol2.tail(rs.n2);
  out.du1 = out.u1 - s.u1;
  out.du2 = out.u2 - s.u2;
  out.dp1 = out.p1 - s.p1;
  out.dp2 = out.p2 - s.p2;
  out.n = s.n + 1;
  return out;
}

std::pair<VecX, VecX> prolong(const ReducedSystem& rs, const SplitState& s) {
  VecX u = rs.rv * (s.u1 + s.u2);
  VecX p = rs.r1 * s.p1;
  if (rs.has_q2 && s.p2.size() == rs.n2 && rs.n2 > 0) p += rs.r2 * s.p2;
  return {u, p};
}

CoarseTrajectory run_implicit(const ReducedSystem& rs, double tau, int steps, const ScalarFn& p0,
                              const SourceFn& f, bool use_q2) {
  ImplicitCoarseStepper stepper(rs, tau, use_q2);
  CoarseTrajectory ct;
  ct.tg = TimeGrid(tau, steps);
  ct.method = use_q2 ? "cem_q2" : "cem";
  ct.states.push_back(initial_split_state(p0, rs));
  for (int n = 0; n < steps; ++n) {
    VecX load = assemble_load(rs.forms->gp, rs.forms->dofs, f, tau * (n + 1));
    ct.states.push_back(stepper.step(ct.states.back(), load));
  }
  return ct;
}

CoarseTrajectory run_split(const ReducedSystem& rs, double tau, int steps, const ScalarFn& p0,
                           const SourceFn& f, const StabilityReport* report) {
  SplitStepper stepper(rs, tau, report);
  CoarseTrajectory ct;
  ct.tg = TimeGrid(tau, steps);
  ct.method = "split";
  ct.states.push_back(initial_split_state(p0, rs));
  for (int n = 0; n < steps; ++n) {
    VecX load = assemble_load(rs.forms->gp, rs.forms->dofs, f, tau * n);
    ct.states.push_back(stepper.step(ct.states.back(), load));
  }
  return ct;
}

Trajectory to_fine_trajectory(const ReducedSystem& rs, const CoarseTrajectory& ct,
                              int save_stride) {
  if (save_stride < 1) throw std::invalid_argument("to_fine_trajectory: bad stride");
  Trajectory traj;
  traj.tg = ct.tg;
  traj.method = ct.method;
  const int last = int(ct.states.size()) - 1;
  for (int n = 0; n <= last; ++n) {
    if (n != 0 && n != last && n % save_stride != 0) continue;
    auto [u, p] = prolong(rs, ct.states[size_t(n)]);
    traj.u.push_back(u);
    traj.p.push_back(p);
    traj.step_index.push_back(n);
  }
  return traj;
}

LyapunovTrace lyapunov_trace(const std::vector<SplitState>& states, const ReducedSystem& rs,
                             double tau, double gamma_a, double gamma_c, const SourceFn* f) {
  LyapunovTrace tr;
  const int n = int(states.size());
  tr.energy = VecX::Zero(n);
  tr.budget = VecX::Zero(std::max(0, n - 1));

  for (int k = 0; k < n; ++k) {
    const SplitState& s = states[size_t(k)];
    double e = 0.0;
    e += gamma_c * (s.dp1.dot(rs.c11 * s.dp1));
    e += gamma_a * (s.du1.dot(rs.a_r * s.du1));
    if (rs.has_q2) {
      e += gamma_c * (s.dp2.dot(rs.c22 * s.dp2));
      e += gamma_a * (s.du2.dot(rs.a_r * s.du2));
    }
    double bnorm = s.p1.dot(rs.b11 * s.p1);
    if (rs.has_q2) bnorm += 2.0 * s.p1.dot(rs.b12 * s.p2) + s.p2.dot(rs.b22 * s.p2);
    e += tau * bnorm;
    tr.energy[k] = e;
  }

  if (f != nullptr) {
    const double m = 1.0 / rs.forms->inv_m;
    for (int k = 0; k + 1 < n; ++k)
      tr.budget[k] = 2.0 * tau * tau / (1.0 - gamma_c) *
                     m * source_l2_squared(rs.forms->gp, *f, tau * k);
  }
  for (int k = 0; k + 1 < n; ++k)
    if (tr.energy[k + 1] > tr.energy[k] + tr.budget[k] + 1e-12) tr.flagged.push_back(k + 1);
  return tr;
}

double empirical_gamma_a(const std::vector<SplitState>& states, const ReducedSystem& rs) {
  double g = 0.0;
  for (size_t k = 1; k + 1 < states.size(); ++k) {
    const SplitState& prev = states[k];
    const SplitState& next = states[k + 1];
    auto cosine = [&rs](const VecX& x, const VecX& y) {
      const double nx = x.dot(rs.a_r * x), ny = y.dot(rs.a_r * y);
      if (nx <= 0.0 || ny <= 0.0) return 0.0;
      return std::abs(x.dot(rs.a_r * y)) / std::sqrt(nx * ny);
    };
    g = std::max(g, cosine(next.du1, prev.du2));
    g = std::max(g, cosine(next.du2, prev.du1));
  }
  return std::min(g, 1.0);
}

} // namespace poroms
