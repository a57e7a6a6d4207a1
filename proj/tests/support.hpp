#pragma once

#include "qabc/fixtures.hpp"
#include "qabc/metrics.hpp"

#include <random>

namespace qabc::test {

// Shifts and couplings uniform in [-scale, scale] Hz.
inline SpinParams random_params(int n, Rng& rng, Real scale = 50.0, Real gamma = 2.0) {
  std::uniform_real_distribution<Real> u(-scale, scale);
  SpinParams p;
  p.n_spins = n;
  p.gamma = gamma;
  p.shifts.resize(n);
  for (int i = 0; i < n; ++i) p.shifts[i] = u(rng);
  p.couplings = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) p.couplings(i, j) = p.couplings(j, i) = 0.2 * u(rng);
  return p;
}

inline SpinParams uniform_shift(int n, Real h, const MatrixXd& couplings, Real gamma = 2.0) {
  SpinParams p;
  p.n_spins = n;
  p.shifts = VectorXd::Constant(n, h);
  p.couplings = couplings;
  p.gamma = gamma;
  return p;
}

inline MatrixXd random_couplings(int n, Rng& rng, Real scale = 10.0) {
  std::uniform_real_distribution<Real> u(-scale, scale);
  MatrixXd j = MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) j(a, b) = j(b, a) = u(rng);
  return j;
}

// A normalized spectrum made of unit-mass Lorentzians on a plain rad/s grid.
inline NormalizedSpectrum lorentzians(const UniformGrid& grid, const std::vector<Real>& centers, Real gamma) {
  NormalizedSpectrum s;
  s.grid = grid;
  s.provenance.standardized = false;
  s.values = VectorXd::Zero(grid.size);
  for (Eigen::Index k = 0; k < grid.size; ++k)
    for (Real c : centers) {
      const Real d = grid[k] - c;
      s.values[k] += 2.0 * gamma / (gamma * gamma + d * d) / static_cast<Real>(centers.size());
    }
  return s;
}

// Piecewise-constant bump spectra, normalized to unit mass.
inline NormalizedSpectrum boxes(const UniformGrid& grid, Rng& rng, int pieces = 6) {
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  NormalizedSpectrum s;
  s.grid = grid;
  s.provenance.standardized = false;
  s.values.resize(grid.size);
  const Eigen::Index width = std::max<Eigen::Index>(1, grid.size / pieces);
  for (Eigen::Index k = 0; k < grid.size; ++k) s.values[k] = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const Real h = u(rng) < 0.3 ? 0.0 : u(rng);
    for (Eigen::Index k = p * width; k < std::min(grid.size, (p + 1) * width); ++k) s.values[k] = h;
  }
  s.values[grid.size / 2] += 1.0;
  s.values /= trapezoid(s.values, grid.step) / kTwoPi;
  return s;
}

}  // namespace qabc::test
