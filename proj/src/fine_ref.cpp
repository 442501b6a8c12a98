#include "poroms/fine_ref.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace poroms {

TimeGrid::TimeGrid(double tau_, int steps_) : tau(tau_), steps(steps_) {
  if (!(tau > 0.0)) throw std::invalid_argument("TimeGrid: tau must be positive");
  if (steps < 1) throw std::invalid_argument("TimeGrid: step count must be >= 1");
}

namespace {
SpMat scaled_sum(const SpMat& c, double wc, const SpMat& b, double wb) {
  SpMat k = wc * c + wb * b;
  k.makeCompressed();
  return k;
}
} // namespace

FineSolver::FineSolver(const FormSet& forms, double tau)
    : forms_(&forms),
      tau_(tau),
      stepper_(forms.A, forms.D, scaled_sum(forms.C, 1.0 / tau, forms.B, 1.0), tau),
      mass_(forms.MP),
      elastic_(forms.A) {}

VecX FineSolver::initial_pressure(const ScalarFn& p0) const {
  VecX rhs = assemble_load(forms_->gp, forms_->dofs,
                           [&p0](double x, double y, double) { return p0(x, y); }, 0.0);
  return mass_.solve(rhs);
}

VecX FineSolver::initial_displacement(const VecX& p0) const {
  if (p0.size() != forms_->dofs.n_p)
    throw std::invalid_argument("initial_displacement: pressure size mismatch");
  VecX rhs = forms_->D.transpose() * p0;
  return elastic_.solve(rhs);
}

std::pair<VecX, VecX> FineSolver::step(const VecX& u, const VecX& p, const VecX& load_next) const {
  VecX r_p = load_next + (forms_->D * u) / tau_ + (forms_->C * p) / tau_;
  return stepper_.solve(VecX::Zero(forms_->dofs.n_u), r_p);
}

Trajectory FineSolver::run(const ScalarFn& p0, const SourceFn& f, int steps,
                           int save_stride) const {
  if (save_stride < 1) throw std::invalid_argument("run: save_stride must be >= 1");
  Trajectory traj;
  traj.tg = TimeGrid(tau_, steps);
  traj.method = "fine";

  VecX p = initial_pressure(p0);
  VecX u = initial_displacement(p);
  traj.u.push_back(u);
  traj.p.push_back(p);
  traj.step_index.push_back(0);

  for (int n = 0; n < steps; ++n) {
    VecX load = assemble_load(forms_->gp, forms_->dofs, f, tau_ * (n + 1));
    std::pair<VecX, VecX> next;
    try {
      next = step(u, p, load);
    } catch (const std::exception& e) {
      throw std::runtime_error("fine solver failed at step " + std::to_string(n + 1) + ": " +
                               e.what());
    }
    u = next.first;
    p = next.second;
    if ((n + 1) % save_stride == 0 || n + 1 == steps) {
      traj.u.push_back(u);
      traj.p.push_back(p);
      traj.step_index.push_back(n + 1);
    }
  }
  return traj;
}

void write_snapshot_csv(const std::string& path, const FormSet& forms, const VecX& u,
                        const VecX& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_snapshot_csv: cannot open " + path);
  out << "p,u1,u2\n";
  const StructuredGrid& g = forms.gp.fine;
  char buf[96];
  for (int iy = g.ny; iy >= 0; --iy)
    for (int ix = 0; ix <= g.nx; ++ix) {
      const int node = g.node_id(ix, iy);
      const int pd = forms.dofs.node2p[size_t(node)];
      double pv = 0.0, u1 = 0.0, u2 = 0.0;
      if (pd >= 0) {
        pv = p[pd];
        u1 = u[2 * pd];
        u2 = u[2 * pd + 1];
      }
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", pv, u1, u2);
      out << buf;
    }
}

} // namespace poroms
