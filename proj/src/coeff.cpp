#include "poroms/coeff.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace poroms {

void PhysicsConstants::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0,1]");
  if (!(biot_modulus > 0.0) || !std::isfinite(biot_modulus))
    throw std::invalid_argument("biot_modulus must be positive");
  if (!(viscosity > 0.0) || !std::isfinite(viscosity))
    throw std::invalid_argument("viscosity must be positive");
  if (!(poisson > -1.0 && poisson < 0.5)) throw std::invalid_argument("poisson must lie in (-1, 1/2)");
}

std::pair<double, double> lame_from_young(double young, double poisson) {
  if (!(young > 0.0)) throw std::invalid_argument("lame_from_young: E must be positive");
  if (!(poisson > -1.0 && poisson < 0.5))
    throw std::invalid_argument("lame_from_young: poisson must lie in (-1, 1/2)");
  const double lambda = poisson * young / ((1.0 - 2.0 * poisson) * (1.0 + poisson));
  const double mu = young / (2.0 * (1.0 + poisson));
  return {lambda, mu};
}

std::uint64_t CoefficientField::content_hash() const {
  std::uint64_t h = 1469598103934665603ull; // FNV offset basis
  auto mix = [&h](const VecX& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::uint64_t bits;
      const double x = v[i];
      std::memcpy(&bits, &x, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
    }
  };
  mix(young);
  mix(perm);
  return h;
}

namespace {

CoefficientField finalize(VecX young, VecX perm, const PhysicsConstants& pc) {
  CoefficientField f;
  f.young = std::move(young);
  f.perm = std::move(perm);
  f.lambda.resize(f.young.size());
  f.mu.resize(f.young.size());
  for (Eigen::Index c = 0; c < f.young.size(); ++c) {
    if (!(f.young[c] > 0.0) || !std::isfinite(f.young[c]))
      throw std::invalid_argument("coefficient field: E must be positive and finite");
    if (!(f.perm[c] > 0.0) || !std::isfinite(f.perm[c]))
      throw std::invalid_argument("coefficient field: kappa must be positive and finite");
    auto [lam, mu] = lame_from_young(f.young[c], pc.poisson);
    f.lambda[c] = lam;
    f.mu[c] = mu;
  }
  return f;
}

// Deterministic integer in [lo, hi] from the raw engine stream. Avoids
// std::uniform_int_distribution, whose output is implementation-defined.
int pick(std::mt19937_64& rng, int lo, int hi) {
  return lo + int(rng() % std::uint64_t(hi - lo + 1));
}

} // namespace

CoefficientField constant_field(const GridPair& gp, double young, double kappa,
                                const PhysicsConstants& pc) {
  const int n = gp.fine.cell_count();
  return finalize(VecX::Constant(n, young), VecX::Constant(n, kappa), pc);
}

CoefficientField generate_streak_field(const GridPair& gp, double background, double contrast,
                                       std::uint64_t seed, const PhysicsConstants& pc) {
  if (!(background > 0.0)) throw std::invalid_argument("generate_streak_field: background must be positive");
  if (!(contrast >= 1.0)) throw std::invalid_argument("generate_streak_field: contrast must be >= 1");

  const int nx = gp.fine.nx, ny = gp.fine.ny;
  const int r = gp.ratio;
  VecX young = VecX::Constant(gp.fine.cell_count(), background);
  const double high = background * contrast;

  std::mt19937_64 rng(seed);
  auto paint = [&](int x0, int y0, int len, int thick, bool horizontal) {
    for (int a = 0; a < len; ++a)
      for (int b = 0; b < thick; ++b) {
        const int x = horizontal ? x0 + a : x0 + b;
        const int y = horizontal ? y0 + b : y0 + a;
        if (x >= 0 && x < nx && y >= 0 && y < ny) young[y * nx + x] = high;
      }
  };

  const int n_streaks = std::max(6, gp.coarse.nx);
  for (int s = 0; s < n_streaks; ++s) {
    const int kind = pick(rng, 0, 2); // 0 horizontal, 1 vertical, 2 L-shaped
    const int span = pick(rng, 2, std::min(5, gp.coarse.nx)) * r; // fine cells
    const int thick = pick(rng, 1, 2);
    const int x0 = pick(rng, 0, std::max(0, nx - 2));
    const int y0 = pick(rng, 0, std::max(0, ny - 2));
    if (kind == 0) {
      paint(x0, y0, span, thick, true);
    } else if (kind == 1) {
      paint(x0, y0, span, thick, false);
    } else {
      paint(x0, y0, span, thick, true);
      paint(x0, y0, span, thick, false);
    }
  }
  return finalize(young, young, pc);
}

CoefficientField load_raster(const std::string& path, const GridPair& gp,
                             const PhysicsConstants& pc) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_raster: cannot open " + path);
  const int nx = gp.fine.nx, ny = gp.fine.ny;
  VecX young(gp.fine.cell_count());

  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= ny) throw std::runtime_error("load_raster: more rows than fine cells");
    std::stringstream ss(line);
    std::string tok;
    int col = 0;
    while (std::getline(ss, tok, ',')) {
      if (col >= nx) throw std::runtime_error("load_raster: more columns than fine cells");
      double v;
      try {
        size_t pos = 0;
        v = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw std::runtime_error("load_raster: non-numeric entry '" + tok + "'");
      }
      if (!(v > 0.0)) throw std::runtime_error("load_raster: non-positive entry");
      const int iy = ny - 1 - row; // row 0 of the file is the top of the domain
      young[iy * nx + col] = v;
      ++col;
    }
    if (col != nx) throw std::runtime_error("load_raster: row width mismatch");
    ++row;
  }
  if (row != ny) throw std::runtime_error("load_raster: row count mismatch");
  return finalize(young, young, pc);
}

} // namespace poroms
