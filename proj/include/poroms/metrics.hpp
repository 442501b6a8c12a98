#pragma once

#include <string>
#include <vector>

#include "poroms/fine_ref.hpp"

namespace poroms {

/// Relative pressure errors against the fine reference at each saved step.
struct ErrorSeries {
  std::string method;
  std::vector<int> step;
  std::vector<double> time;
  std::vector<double> e_l2;     // MP-norm ratio
  std::vector<double> e_energy; // B-norm ratio
};

/// e_L2^n = |p_ms - p_h|_MP / |p_h|_MP, e_energy^n with the Darcy form B.
/// Steps with a vanishing denominator are reported on stderr and skipped.
ErrorSeries pressure_errors(const Trajectory& ms, const Trajectory& fine, const FormSet& forms);

/// Same ratios for the displacement (A-energy and componentwise MP), kept as
/// a diagnostic only.
ErrorSeries displacement_errors(const Trajectory& ms, const Trajectory& fine,
                                const FormSet& forms);

/// One CSV per experiment: columns n,t,method,e_L2,e_energy.
void write_error_csv(const std::string& path, const std::vector<ErrorSeries>& series);

} // namespace poroms
