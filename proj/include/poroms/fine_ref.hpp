#pragma once

#include <string>
#include <vector>

#include "poroms/assembly.hpp"
#include "poroms/linalg.hpp"

namespace poroms {

struct TimeGrid {
  double tau = 0.0;
  int steps = 0;

  TimeGrid() = default;
  TimeGrid(double tau_, int steps_);
  double total() const { return tau * steps; }
  double at(int n) const { return tau * n; }
};

struct Trajectory {
  std::vector<VecX> u; // fine displacement dofs, t_0..t_N (saved steps)
  std::vector<VecX> p; // fine pressure dofs
  std::vector<int> step_index;
  TimeGrid tg;
  std::string method;
};

/// Fully implicit backward-Euler fine solver: the benchmark trajectory.
/// The coupled block matrix is factorized once and reused for every step.
class FineSolver {
 public:
  FineSolver(const FormSet& forms, double tau);

  /// L2 projection of p0 onto the fine pressure space: MP x = (p0, phi).
  VecX initial_pressure(const ScalarFn& p0) const;
  /// Consistent u0 from a(u0, v) = d(v, p0).
  VecX initial_displacement(const VecX& p0) const;

  /// One backward-Euler step; load_next = (f(t_{n+1}), phi).
  std::pair<VecX, VecX> step(const VecX& u, const VecX& p, const VecX& load_next) const;

  Trajectory run(const ScalarFn& p0, const SourceFn& f, int steps, int save_stride = 1) const;

  double tau() const { return tau_; }

 private:
  const FormSet* forms_;
  double tau_;
  SaddleSolver stepper_;
  SpdFactor mass_;
  SpdFactor elastic_;
};

/// Snapshot CSV: one line per fine node (boundary included), fields p,u1,u2,
/// rows ordered top-to-bottom, left-to-right. Boundary nodes carry zeros.
void write_snapshot_csv(const std::string& path, const FormSet& forms, const VecX& u,
                        const VecX& p);

} // namespace poroms
