#include "poroms/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace poroms {

namespace {

double quad_norm(const SpMat& m, const VecX& v) { return std::sqrt(std::max(0.0, v.dot(m * v))); }

void check_alignment(const Trajectory& ms, const Trajectory& fine) {
  if (ms.step_index != fine.step_index)
    throw std::invalid_argument("error metrics: trajectories saved at different steps");
  if (std::abs(ms.tg.tau - fine.tg.tau) > 1e-15 * std::max(1.0, fine.tg.tau))
    throw std::invalid_argument("error metrics: time step mismatch");
}

} // namespace

ErrorSeries pressure_errors(const Trajectory& ms, const Trajectory& fine, const FormSet& forms) {
  check_alignment(ms, fine);
  ErrorSeries es;
  es.method = ms.method;
  for (size_t k = 0; k < fine.p.size(); ++k) {
    const double den_l2 = quad_norm(forms.MP, fine.p[k]);
    const double den_en = quad_norm(forms.B, fine.p[k]);
    if (den_l2 == 0.0 || den_en == 0.0) {
      std::cerr << "poroms: note: zero reference norm at step " << fine.step_index[k]
                << ", skipped\n";
      continue;
    }
    VecX dp = ms.p[k] - fine.p[k];
    es.step.push_back(fine.step_index[k]);
    es.time.push_back(fine.tg.at(fine.step_index[k]));
    es.e_l2.push_back(quad_norm(forms.MP, dp) / den_l2);
    es.e_energy.push_back(quad_norm(forms.B, dp) / den_en);
  }
  return es;
}

ErrorSeries displacement_errors(const Trajectory& ms, const Trajectory& fine,
                                const FormSet& forms) {
  check_alignment(ms, fine);
  auto split_norm = [&forms](const VecX& u) {
    VecX ux(forms.dofs.n_p), uy(forms.dofs.n_p);
    for (int i = 0; i < forms.dofs.n_p; ++i) {
      ux[i] = u[2 * i];
      uy[i] = u[2 * i + 1];
    }
    return std::sqrt(ux.dot(forms.MP * ux) + uy.dot(forms.MP * uy));
  };

  ErrorSeries es;
  es.method = ms.method + "_u";
  for (size_t k = 0; k < fine.u.size(); ++k) {
    const double den_l2 = split_norm(fine.u[k]);
    const double den_en = quad_norm(forms.A, fine.u[k]);
    if (den_l2 == 0.0 || den_en == 0.0) continue;
    VecX du = ms.u[k] - fine.u[k];
    es.step.push_back(fine.step_index[k]);
    es.time.push_back(fine.tg.at(fine.step_index[k]));
    es.e_l2.push_back(split_norm(du) / den_l2);
    es.e_energy.push_back(quad_norm(forms.A, du) / den_en);
  }
  return es;
}

void write_error_csv(const std::string& path, const std::vector<ErrorSeries>& series) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_error_csv: cannot open " + path);
  out << "n,t,method,e_L2,e_energy\n";
  char buf[128];
  for (const ErrorSeries& es : series)
    for (size_t k = 0; k < es.step.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%s,%.17g,%.17g\n", es.step[k], es.time[k],
                    es.method.c_str(), es.e_l2[k], es.e_energy[k]);
      out << buf;
    }
}

} // namespace poroms
