#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <numbers>

#include "oracles.hpp"
#include "poroms/fine_ref.hpp"

using namespace poroms;

namespace {

FormSet seeded_forms(int coarse_n, int ratio, const PhysicsConstants& pc, double contrast = 10.0,
                     std::uint64_t seed = 7) {
  GridPair gp = build_grid_pair(coarse_n, ratio);
  CoefficientField field = contrast == 1.0 ? constant_field(gp, 1.0, 1.0, pc)
                                           : generate_streak_field(gp, 1.0, contrast, seed, pc);
  return assemble_forms(gp, field, pc, coarse_hat_functions(gp));
}

} // namespace

TEST_CASE("initial pressure projection") {
  PhysicsConstants pc;
  FormSet fs = seeded_forms(2, 4, pc, 1.0);
  FineSolver solver(fs, 1e-3);

  SUBCASE("zero initial condition") {
    VecX p = solver.initial_pressure([](double, double) { return 0.0; });
    CHECK(p.norm() == 0.0);
  }
  SUBCASE("projection is the identity on fine P1 functions") {
    VecX coeffs = oracles::random_vec(fs.dofs.n_p, 3);
    auto interp = [&fs, &coeffs](double x, double y) {
      const StructuredGrid& g = fs.gp.fine;
      int cx = std::min(int(x / g.hx), g.nx - 1);
      int cy = std::min(int(y / g.hy), g.ny - 1);
      const double s = x / g.hx - cx, t = y / g.hy - cy;
      double l[3];
      std::array<int, 3> nodes;
      if (t <= s) {
        nodes = {g.node_id(cx, cy), g.node_id(cx + 1, cy), g.node_id(cx + 1, cy + 1)};
        l[0] = 1.0 - s;
        l[1] = s - t;
        l[2] = t;
      } else {
        nodes = {g.node_id(cx, cy), g.node_id(cx + 1, cy + 1), g.node_id(cx, cy + 1)};
        l[0] = 1.0 - t;
        l[1] = s;
        l[2] = t - s;
      }
      double v = 0.0;
      for (int k = 0; k < 3; ++k) {
        const int pd = fs.dofs.node2p[size_t(nodes[k])];
        if (pd >= 0) v += l[k] * coeffs[pd];
      }
      return v;
    };
    VecX p = solver.initial_pressure(interp);
    CHECK((p - coeffs).cwiseAbs().maxCoeff() <= 1e-10 * coeffs.cwiseAbs().maxCoeff());
  }
  SUBCASE("matches dense normal-equation oracle on the bump") {
    auto p0 = [](double x, double y) { return 100.0 * x * (1 - x) * y * (1 - y); };
    VecX p = solver.initial_pressure(p0);
    VecX rhs = assemble_load(fs.gp, fs.dofs,
                             [&p0](double x, double y, double) { return p0(x, y); }, 0.0);
    VecX ref = oracles::gauss_solve(MatX(fs.MP), rhs);
    CHECK((p - ref).norm() <= 1e-10 * ref.norm());
  }
}

TEST_CASE("initial displacement") {
  PhysicsConstants pc;
  FormSet fs = seeded_forms(2, 4, pc);
  FineSolver solver(fs, 1e-3);

  SUBCASE("zero pressure gives zero displacement") {
    VecX u = solver.initial_displacement(VecX::Zero(fs.dofs.n_p));
    CHECK(u.norm() == 0.0);
  }
  SUBCASE("alpha = 0 decouples") {
    PhysicsConstants pc0 = pc;
    pc0.alpha = 0.0;
    FormSet fs0 = seeded_forms(2, 4, pc0);
    FineSolver s0(fs0, 1e-3);
    VecX u = s0.initial_displacement(oracles::random_vec(fs0.dofs.n_p, 5));
    CHECK(u.norm() == 0.0);
  }
  SUBCASE("residual contract") {
    VecX p0 = oracles::random_vec(fs.dofs.n_p, 6);
    VecX u = solver.initial_displacement(p0);
    VecX rhs = fs.D.transpose() * p0;
    CHECK(relative_residual(fs.A, u, rhs) <= 1e-10);
  }
}

TEST_CASE("fine step") {
  PhysicsConstants pc;

  SUBCASE("zero source and state stay zero") {
    FormSet fs = seeded_forms(2, 4, pc);
    FineSolver solver(fs, 1e-3);
    Trajectory t = solver.run([](double, double) { return 0.0; },
                              [](double, double, double) { return 0.0; }, 4);
    for (const VecX& p : t.p) CHECK(p.norm() == 0.0);
    for (const VecX& u : t.u) CHECK(u.norm() == 0.0);
  }

  SUBCASE("alpha = 0 reduces to the implicit heat equation") {
    PhysicsConstants pc0;
    pc0.alpha = 0.0;
    FormSet fs = seeded_forms(2, 4, pc0, 1.0);
    const double tau = 1e-2;
    FineSolver solver(fs, tau);
    auto p0 = [](double x, double y) { return 100.0 * x * (1 - x) * y * (1 - y); };
    auto f = [](double x, double y, double) { return std::sin(3.0 * x) + y; };
    Trajectory t = solver.run(p0, f, 5);

    oracles::HeatOracle heat(fs.gp.fine);
    REQUIRE(heat.n == fs.dofs.n_p);
    VecX p = t.p[0]; // same projected start
    for (int n = 0; n < 5; ++n) {
      VecX load = assemble_load(fs.gp, fs.dofs, f, tau * (n + 1));
      p = heat.step(p, load, tau);
      CHECK((p - t.p[size_t(n + 1)]).norm() <= 1e-10 * (1.0 + p.norm()));
    }
  }

  SUBCASE("one step matches the dense monolithic block oracle") {
    FormSet fs = seeded_forms(2, 4, pc, 100.0, 17);
    const double tau = 1e-3;
    FineSolver solver(fs, tau);
    VecX u = oracles::random_vec(fs.dofs.n_u, 8);
    VecX p = oracles::random_vec(fs.dofs.n_p, 9);
    VecX load = oracles::random_vec(fs.dofs.n_p, 10);
    auto [un, pn] = solver.step(u, p, load);

    const int nu = fs.dofs.n_u, np = fs.dofs.n_p;
    MatX block = MatX::Zero(nu + np, nu + np);
    block.topLeftCorner(nu, nu) = MatX(fs.A);
    block.topRightCorner(nu, np) = -MatX(fs.D).transpose();
    block.bottomLeftCorner(np, nu) = MatX(fs.D) / tau;
    block.bottomRightCorner(np, np) = MatX(fs.C) / tau + MatX(fs.B);
    VecX rhs(nu + np);
    rhs.head(nu).setZero();
    rhs.tail(np) = load + fs.D * u / tau + fs.C * p / tau;
    VecX ref = oracles::gauss_solve(block, rhs);
    CHECK((un - ref.head(nu)).norm() <= 1e-10 * (1.0 + ref.norm()));
    CHECK((pn - ref.tail(np)).norm() <= 1e-10 * (1.0 + ref.norm()));
  }
}

TEST_CASE("implicit scheme dissipates the discrete energy with zero source") {
  PhysicsConstants pc;
  FormSet fs = seeded_forms(2, 4, pc, 1e3, 21);
  const double tau = 5e-3;
  FineSolver solver(fs, tau);
  auto p0 = [](double x, double y) { return 100.0 * x * (1 - x) * y * (1 - y); };
  Trajectory t = solver.run(p0, [](double, double, double) { return 0.0; }, 20);

  double prev = -1.0;
  double b_accum = 0.0;
  for (size_t n = 0; n < t.p.size(); ++n) {
    if (n > 0) b_accum += 2.0 * tau * t.p[n].dot(fs.B * t.p[n]);
    const double e = t.p[n].dot(fs.C * t.p[n]) + t.u[n].dot(fs.A * t.u[n]) + b_accum;
    if (n > 0) CHECK(e <= prev + 1e-12 * (1.0 + prev));
    prev = e;
  }

  // a(u, v) - d(v, p) = 0 holds at every step
  for (size_t n = 0; n < t.p.size(); ++n) {
    VecX res = fs.A * t.u[n] - fs.D.transpose() * t.p[n];
    CHECK(res.norm() <= 1e-9 * (1.0 + (fs.A * t.u[n]).norm()));
  }
}

TEST_CASE("manufactured heat solution converges at order two in space") {
  // alpha = 0, kappa = M = nu = 1: exact p = sin(pi x) sin(pi y) e^{-t}
  const double pi = std::numbers::pi;
  auto exact = [pi](double x, double y, double t) {
    return std::sin(pi * x) * std::sin(pi * y) * std::exp(-t);
  };
  auto source = [&exact, pi](double x, double y, double t) {
    return (2.0 * pi * pi - 1.0) * exact(x, y, t);
  };
  PhysicsConstants pc;
  pc.alpha = 0.0;

  double err[2];
  int idx = 0;
  for (int n : {16, 32}) {
    GridPair gp = build_grid_pair(2, n / 2);
    CoefficientField field = constant_field(gp, 1.0, 1.0, pc);
    FormSet fs = assemble_forms(gp, field, pc, coarse_hat_functions(gp));
    const double h = 1.0 / n;
    const double tau = 2.0 * h * h; // tau proportional to h^2
    const int steps = int(std::lround(0.125 / tau));
    FineSolver solver(fs, tau);
    Trajectory t = solver.run([&exact](double x, double y) { return exact(x, y, 0.0); }, source,
                              steps, steps);
    const double tend = tau * steps;
    VecX pex(fs.dofs.n_p);
    for (int k = 0; k < fs.dofs.n_p; ++k) {
      const int node = fs.dofs.p2node[size_t(k)];
      pex[k] = exact(gp.fine.node_x(node), gp.fine.node_y(node), tend);
    }
    VecX dp = t.p.back() - pex;
    err[idx++] = std::sqrt(dp.dot(fs.MP * dp));
  }
  const double order = std::log2(err[0] / err[1]);
  CHECK(order >= 1.8);
}

TEST_CASE("snapshot export covers the full grid") {
  PhysicsConstants pc;
  FormSet fs = seeded_forms(2, 2, pc, 1.0);
  FineSolver solver(fs, 1e-3);
  Trajectory t = solver.run([](double x, double y) { return x * y; },
                            [](double, double, double) { return 1.0; }, 2);
  const std::string path = "snap_test.csv";
  write_snapshot_csv(path, fs, t.u.back(), t.p.back());
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line == "p,u1,u2");
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == fs.gp.fine.node_count());
  std::remove(path.c_str());
}
