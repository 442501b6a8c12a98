#include <doctest.h>

#include "oracles.hpp"
#include "poroms/msstep.hpp"

using namespace poroms;

namespace {

struct Setup {
  FormSet fs;
  AuxiliarySpace aux;
  MultiscaleSpace vh, q1, q2;

  Setup(int coarse_n, int ratio, double contrast, std::uint64_t seed = 7, int layers = 1) {
    PhysicsConstants pc;
    GridPair gp = build_grid_pair(coarse_n, ratio);
    CoefficientField field = contrast == 1.0
                                 ? constant_field(gp, 1.0, 1.0, pc)
                                 : generate_streak_field(gp, 1.0, contrast, seed, pc);
    fs = assemble_forms(gp, field, pc, coarse_hat_functions(gp));
    aux = build_auxiliary(fs, 2, 2);
    vh = build_cem_basis(fs, aux, layers, SpaceTag::V_H);
    q1 = build_cem_basis(fs, aux, layers, SpaceTag::Q_H1);
    Qh2Aux q2aux = build_qh2_aux(fs, aux, 2);
    q2 = build_qh2_basis(fs, aux, q2aux, layers);
  }
};

ScalarFn bump() {
  return [](double x, double y) { return 100.0 * x * (1 - x) * y * (1 - y); };
}

} // namespace

TEST_CASE("reduce: congruence identities and block layout") {
  Setup s(2, 4, 15.0, 3);

  SUBCASE("no Q2 leaves the coupling blocks empty") {
    ReducedSystem rs = reduce(s.fs, s.vh, s.q1);
    CHECK(!rs.has_q2);
    CHECK(rs.n2 == 0);
    CHECK(rs.b12.size() == 0);
  }
  SUBCASE("identity prolongation reproduces the fine forms") {
    MultiscaleSpace vfull, qfull;
    vfull.tag = SpaceTag::V_H;
    vfull.basis = MatX::Identity(s.fs.dofs.n_u, s.fs.dofs.n_u);
    qfull.tag = SpaceTag::Q_H1;
    qfull.basis = MatX::Identity(s.fs.dofs.n_p, s.fs.dofs.n_p);
    ReducedSystem rs = reduce(s.fs, vfull, qfull);
    CHECK((rs.a_r - MatX(s.fs.A)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((rs.b11 - MatX(s.fs.B)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((rs.d1 - MatX(s.fs.D)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("congruence identity on random reduced vectors") {
    ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);
    for (unsigned k = 0; k < 5; ++k) {
      VecX x = oracles::random_vec(rs.n1, 40 + k);
      const double lhs = x.dot(rs.b11 * x);
      VecX xf = rs.r1 * x;
      const double rhs = xf.dot(s.fs.B * xf);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
  SUBCASE("symmetric blocks are symmetric") {
    ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);
    CHECK((rs.a_r - rs.a_r.transpose()).cwiseAbs().maxCoeff() <=
          1e-12 * rs.a_r.cwiseAbs().maxCoeff());
    CHECK((rs.b22 - rs.b22.transpose()).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, rs.b22.cwiseAbs().maxCoeff()));
  }
  SUBCASE("rank-deficient basis rejected") {
    MultiscaleSpace bad = s.q1;
    bad.basis.col(1) = bad.basis.col(0); // duplicate column
    CHECK_THROWS(reduce(s.fs, s.vh, bad));
  }
}

TEST_CASE("initial split state") {
  Setup s(2, 4, 15.0, 3);
  ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);

  SUBCASE("zero initial pressure gives the zero state") {
    SplitState st = initial_split_state([](double, double) { return 0.0; }, rs);
    CHECK(st.p1.norm() == 0.0);
    CHECK(st.p2.norm() == 0.0);
    CHECK(st.u1.norm() == 0.0);
    CHECK(st.u2.norm() == 0.0);
  }
  SUBCASE("representable pressure is reproduced exactly") {
    // p0 = prolongation of known coordinates
    VecX c1 = oracles::random_vec(rs.n1, 61);
    VecX c2 = oracles::random_vec(rs.n2, 62);
    VecX pf = rs.r1 * c1 + rs.r2 * c2;
    // wrap as a nodal interpolant function
    const FormSet& fs = s.fs;
    auto fn = [&fs, &pf](double x, double y) {
      const StructuredGrid& g = fs.gp.fine;
      const int ix = int(std::lround(x / g.hx));
      const int iy = int(std::lround(y / g.hy));
      const int pd = fs.dofs.node2p[size_t(g.node_id(ix, iy))];
      return pd >= 0 ? pf[pd] : 0.0;
    };
    SplitState st = initial_split_state(fn, rs);
    VecX back = rs.r1 * st.p1 + rs.r2 * st.p2;
    CHECK((back - pf).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + pf.cwiseAbs().maxCoeff()));
  }
  SUBCASE("matches the dense normal-equation oracle") {
    SplitState st = initial_split_state(bump(), rs);
    VecX p0f(s.fs.dofs.n_p);
    for (int k = 0; k < s.fs.dofs.n_p; ++k) {
      const int node = s.fs.dofs.p2node[size_t(k)];
      p0f[k] = bump()(s.fs.gp.fine.node_x(node), s.fs.gp.fine.node_y(node));
    }
    const int n = rs.n1 + rs.n2;
    MatX gram(n, n);
    gram.topLeftCorner(rs.n1, rs.n1) = rs.b11;
    gram.topRightCorner(rs.n1, rs.n2) = rs.b12;
    gram.bottomLeftCorner(rs.n2, rs.n1) = rs.b12.transpose();
    gram.bottomRightCorner(rs.n2, rs.n2) = rs.b22;
    VecX rhs(n);
    rhs.head(rs.n1) = rs.r1.transpose() * (s.fs.B * p0f);
    rhs.tail(rs.n2) = rs.r2.transpose() * (s.fs.B * p0f);
    VecX ref = oracles::gauss_solve(gram, rhs);
    CHECK((st.p1 - ref.head(rs.n1)).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + ref.cwiseAbs().maxCoeff()));
    CHECK((st.p2 - ref.tail(rs.n2)).cwiseAbs().maxCoeff() <= 1e-9 * (1.0 + ref.cwiseAbs().maxCoeff()));
    // elasticity consistency of the split initial displacement
    CHECK((rs.a_r * st.u1 - rs.d1.transpose() * st.p1).norm() <= 1e-9 * (1.0 + st.p1.norm()));
    CHECK((rs.a_r * st.u2 - rs.d2.transpose() * st.p2).norm() <= 1e-9 * (1.0 + st.p2.norm()));
  }
}

TEST_CASE("implicit coarse stepper") {
  Setup s(2, 4, 15.0, 3);

  SUBCASE("zero data stays zero") {
    ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);
    CoarseTrajectory ct = run_implicit(rs, 1e-3, 3, [](double, double) { return 0.0; },
                                       [](double, double, double) { return 0.0; }, true);
    for (const SplitState& st : ct.states) {
      CHECK(st.p1.norm() == 0.0);
      CHECK(st.u1.norm() == 0.0);
    }
  }
  SUBCASE("full fine space as the coarse basis reproduces the fine solver") {
    MultiscaleSpace vfull, qfull;
    vfull.tag = SpaceTag::V_H;
    vfull.basis = MatX::Identity(s.fs.dofs.n_u, s.fs.dofs.n_u);
    qfull.tag = SpaceTag::Q_H1;
    qfull.basis = MatX::Identity(s.fs.dofs.n_p, s.fs.dofs.n_p);
    ReducedSystem rs = reduce(s.fs, vfull, qfull);
    const double tau = 1e-3;
    auto f = [](double x, double y, double) { return std::cos(x) + y; };
    CoarseTrajectory ct = run_implicit(rs, tau, 3, bump(), f, false);
    FineSolver fine(s.fs, tau);
    Trajectory ref = fine.run(bump(), f, 3);
    for (size_t n = 0; n < ref.p.size(); ++n) {
      auto [u, p] = prolong(rs, ct.states[n]);
      // same scheme, same space; initial projections differ (b vs L2) only in
      // the nullspace-free part, so compare from step 1 with matched starts
      if (n == 0) continue;
      (void)u;
      (void)p;
    }
    // matched comparison: drive both from the same initial coordinates
    SplitState st;
    st.p1 = ref.p[0];
    st.u1 = SpdFactor(s.fs.A).solve(VecX(s.fs.D.transpose() * ref.p[0]));
    st.u2 = VecX::Zero(rs.nv);
    st.p2 = VecX::Zero(0);
    st.du1 = VecX::Zero(rs.nv);
    st.du2 = VecX::Zero(rs.nv);
    st.dp1 = VecX::Zero(rs.n1);
    st.dp2 = VecX::Zero(0);
    ImplicitCoarseStepper stepper(rs, tau, false);
    for (int n = 0; n < 3; ++n) {
      VecX load = assemble_load(s.fs.gp, s.fs.dofs, f, tau * (n + 1));
      st = stepper.step(st, load);
      CHECK((st.p1 - ref.p[size_t(n + 1)]).cwiseAbs().maxCoeff() <=
            1e-9 * (1.0 + ref.p[size_t(n + 1)].cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("one step matches the dense reduced block oracle") {
    ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);
    const double tau = 1e-3;
    ImplicitCoarseStepper stepper(rs, tau, true);
    SplitState st = initial_split_state(bump(), rs);
    VecX load = assemble_load(s.fs.gp, s.fs.dofs,
                              [](double x, double, double) { return 1.0 + x; }, tau);
    SplitState next = stepper.step(st, load);

    const int nv = rs.nv, np = rs.n1 + rs.n2;
    MatX sys = MatX::Zero(nv + np, nv + np);
    MatX d(np, nv), c(np, np), b(np, np);
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
    sys.topLeftCorner(nv, nv) = rs.a_r;
    sys.topRightCorner(nv, np) = -d.transpose();
    sys.bottomLeftCorner(np, nv) = d / tau;
    sys.bottomRightCorner(np, np) = c / tau + b;
    VecX pcat(np);
    pcat.head(rs.n1) = st.p1;
    pcat.tail(rs.n2) = st.p2;
    VecX fcat(np);
    fcat.head(rs.n1) = rs.r1.transpose() * load;
    fcat.tail(rs.n2) = rs.r2.transpose() * load;
    VecX rhs(nv + np);
    rhs.head(nv).setZero();
    rhs.tail(np) = fcat + d * st.u1 / tau + c * pcat / tau;
    VecX ref = oracles::gauss_solve(sys, rhs);
    CHECK((next.u1 - ref.head(nv)).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + ref.cwiseAbs().maxCoeff()));
    CHECK((next.p1 - ref.segment(nv, rs.n1)).cwiseAbs().maxCoeff() <=
          1e-10 * (1.0 + ref.cwiseAbs().maxCoeff()));
    CHECK((next.p2 - ref.tail(rs.n2)).cwiseAbs().maxCoeff() <=
          1e-10 * (1.0 + ref.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("split stepper equals the dense scheme transcription for 10 steps") {
  Setup s(2, 4, 30.0, 29);
  ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);
  const double tau = 1e-3;
  SplitStepper stepper(rs, tau);
  oracles::SplitSchemeOracle oracle(s.fs, rs.rv, rs.r1, rs.r2, tau);

  // seeded nonzero start with zero lagged differences
  SplitState st = initial_split_state(bump(), rs);
  oracles::SplitSchemeOracle::State ost;
  ost.u1 = st.u1;
  ost.u2 = st.u2;
  ost.p1 = st.p1;
  ost.p2 = st.p2;
  ost.u1p = st.u1;
  ost.u2p = st.u2;
  ost.p1p = st.p1;
  ost.p2p = st.p2;

  auto f = [](double x, double y, double t) { return std::sin(x + y) * (1.0 + t); };
  for (int n = 0; n < 10; ++n) {
    VecX load = assemble_load(s.fs.gp, s.fs.dofs, f, tau * n);
    st = stepper.step(st, load);
    ost = oracle.step(ost, rs.r1.transpose() * load, rs.r2.transpose() * load);
    const double scale = 1.0 + ost.p1.cwiseAbs().maxCoeff();
    CHECK((st.u1 - ost.u1).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((st.u2 - ost.u2).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((st.p1 - ost.p1).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((st.p2 - ost.p2).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  }
}

TEST_CASE("split scheme degenerate configurations") {
  Setup s(2, 4, 10.0, 31);

  SUBCASE("zero data stays zero") {
    ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);
    CoarseTrajectory ct = run_split(rs, 1e-3, 3, [](double, double) { return 0.0; },
                                    [](double, double, double) { return 0.0; });
    for (const SplitState& st : ct.states) {
      CHECK(st.p1.norm() == 0.0);
      CHECK(st.p2.norm() == 0.0);
    }
  }
  SUBCASE("decoupled stage 2 reduces to a c-mass update") {
    // hand-built reduced system with B12 = 0, C12 = 0, D2 = 0 and one dof each
    ReducedSystem rs;
    FormSet& fs = s.fs;
    rs.forms = &fs;
    rs.has_q2 = true;
    rs.nv = 1;
    rs.n1 = 1;
    rs.n2 = 1;
    rs.a_r = MatX::Identity(1, 1);
    rs.b11 = 2.0 * MatX::Identity(1, 1);
    rs.b12 = MatX::Zero(1, 1);
    rs.b22 = 3.0 * MatX::Identity(1, 1);
    rs.c11 = MatX::Identity(1, 1);
    rs.c12 = MatX::Zero(1, 1);
    rs.c22 = 4.0 * MatX::Identity(1, 1);
    rs.d1 = MatX::Zero(1, 1);
    rs.d2 = MatX::Zero(1, 1);
    rs.rv = MatX::Zero(fs.dofs.n_u, 1);
    rs.r1 = MatX::Zero(fs.dofs.n_p, 1);
    rs.r2 = MatX::Zero(fs.dofs.n_p, 1);

    const double tau = 0.1;
    SplitStepper stepper(rs, tau);
    SplitState st;
    st.u1 = VecX::Zero(1);
    st.u2 = VecX::Zero(1);
    st.p1 = VecX::Zero(1);
    st.p2 = VecX::Ones(1);
    st.du1 = VecX::Zero(1);
    st.du2 = VecX::Zero(1);
    st.dp1 = VecX::Zero(1);
    st.dp2 = VecX::Zero(1);
    SplitState next = stepper.step(st, VecX::Zero(fs.dofs.n_p));
    // stage 2 hand-solved: (c22/tau) p2' = (c22/tau) p2 - b22 p2
    const double expect = 1.0 - tau * 3.0 / 4.0;
    CHECK(next.p2[0] == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("with empty Q2 and constant source the split scheme equals the implicit one") {
    // the f-evaluation-time difference (t_n vs t_{n+1}) vanishes for constant f
    ReducedSystem rs = reduce(s.fs, s.vh, s.q1);
    ReducedSystem rs_split = rs;
    rs_split.has_q2 = true;
    rs_split.n2 = 0;
    rs_split.r2 = MatX::Zero(s.fs.dofs.n_p, 0);
    rs_split.b12 = MatX::Zero(rs.n1, 0);
    rs_split.b22 = MatX::Zero(0, 0);
    rs_split.c12 = MatX::Zero(rs.n1, 0);
    rs_split.c22 = MatX::Zero(0, 0);
    rs_split.d2 = MatX::Zero(0, rs.nv);

    const double tau = 1e-3;
    auto f = [](double, double, double) { return 1.0; };
    ImplicitCoarseStepper imp(rs, tau, false);
    SplitStepper spl(rs_split, tau);
    SplitState si = initial_split_state(bump(), rs);
    SplitState ss = initial_split_state(bump(), rs_split);
    VecX load = assemble_load(s.fs.gp, s.fs.dofs, f, 0.0);
    for (int n = 0; n < 5; ++n) {
      si = imp.step(si, load);
      ss = spl.step(ss, load);
      CHECK((si.p1 - ss.p1).cwiseAbs().maxCoeff() <=
            1e-10 * (1.0 + si.p1.cwiseAbs().maxCoeff()));
      CHECK((si.u1 - ss.u1).cwiseAbs().maxCoeff() <=
            1e-10 * (1.0 + si.u1.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("lyapunov trace") {
  Setup s(2, 4, 10.0, 37);
  ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);

  SUBCASE("zero trajectory gives zero energies") {
    CoarseTrajectory ct = run_split(rs, 1e-3, 3, [](double, double) { return 0.0; },
                                    [](double, double, double) { return 0.0; });
    LyapunovTrace tr = lyapunov_trace(ct.states, rs, 1e-3, 1.0, 0.5);
    CHECK(tr.energy.cwiseAbs().maxCoeff() == 0.0);
    CHECK(tr.flagged.empty());
  }
  SUBCASE("stable run stays monotone, violating run is flagged") {
    MultiscaleSpace q1full = s.q1;
    StabilityReport rep = stability_report(s.fs, s.q1, s.q2, 1e-3);
    (void)q1full;

    const double tau_ok = 0.5 * rep.tau_max;
    ReducedSystem rs2 = reduce(s.fs, s.vh, s.q1, &s.q2);
    CoarseTrajectory ct = run_split(rs2, tau_ok, 100, bump(),
                                    [](double, double, double) { return 0.0; });
    LyapunovTrace tr = lyapunov_trace(ct.states, rs2, tau_ok, 1.0, rep.gamma_c);
    CHECK(tr.flagged.empty());

    // deliberate CFL violation: growth or NaN guard
    const double tau_bad = 100.0 * rep.tau_max;
    bool blew_up = false;
    try {
      CoarseTrajectory bad = run_split(rs2, tau_bad, 100, bump(),
                                       [](double, double, double) { return 0.0; });
      LyapunovTrace trb = lyapunov_trace(bad.states, rs2, tau_bad, 1.0, rep.gamma_c);
      const double grow = bad.states.back().p2.norm() /
                          std::max(1e-300, bad.states.front().p2.norm());
      blew_up = !trb.flagged.empty() && grow > 1e3;
    } catch (const std::exception&) {
      blew_up = true; // NaN guard fired
    }
    CHECK(blew_up);
  }
}

TEST_CASE("prolonged trajectories respect the save stride") {
  Setup s(2, 4, 5.0, 41);
  ReducedSystem rs = reduce(s.fs, s.vh, s.q1, &s.q2);
  CoarseTrajectory ct = run_split(rs, 1e-3, 10, bump(),
                                  [](double, double, double) { return 1.0; });
  Trajectory t = to_fine_trajectory(rs, ct, 4);
  CHECK(t.step_index == std::vector<int>{0, 4, 8, 10});
}
