#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "poroms/grid.hpp"
#include "poroms/types.hpp"

namespace poroms {

/// Scalar physics constants of the Biot model.
struct PhysicsConstants {
  double alpha = 0.9;        // Biot-Willis coupling, in [0,1]
  double biot_modulus = 1.0; // M > 0
  double viscosity = 1.0;    // nu > 0
  double poisson = 0.2;      // nu_p in (-1, 1/2)

  void validate() const;
};

/// lambda = nu_p*E / ((1-2nu_p)(1+nu_p)), mu = E / (2(1+nu_p)).
std::pair<double, double> lame_from_young(double young, double poisson);

/// Per-fine-cell material data. Both triangles of a cell share the value, so
/// all form integrals are exact with cell-constant coefficients.
struct CoefficientField {
  VecX young;  // E > 0, one entry per fine cell
  VecX perm;   // kappa > 0
  VecX lambda; // derived Lame
  VecX mu;

  double contrast() const { return young.maxCoeff() / young.minCoeff(); }
  /// FNV-1a over the raw bytes of E and kappa; stable across runs.
  std::uint64_t content_hash() const;
};

CoefficientField constant_field(const GridPair& gp, double young, double kappa,
                                const PhysicsConstants& pc);

/// High-contrast medium: background value everywhere except on a seeded set of
/// axis-aligned and L-shaped streaks (1-2 fine cells thick, a few coarse cells
/// long) carrying background*contrast. kappa = E, matching the experiments.
CoefficientField generate_streak_field(const GridPair& gp, double background, double contrast,
                                       std::uint64_t seed, const PhysicsConstants& pc);

/// Read E from a CSV raster: fine.ny rows of fine.nx positive values, first
/// row is the top of the domain. Sets kappa = E.
CoefficientField load_raster(const std::string& path, const GridPair& gp,
                             const PhysicsConstants& pc);

} // namespace poroms
