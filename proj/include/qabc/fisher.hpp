#pragma once

// Fisher information of the mass-normalized spectrum family A(w|theta), by
// central finite differences in theta (Hz). Layout of theta: shifts, then
// couplings J_ij (i < j) row-major.

#include "qabc/metrics.hpp"

#include <optional>

namespace qabc {

struct FisherOptions {
  Real shift_step = 1e-3;     // Hz
  Real coupling_step = 1e-3;  // Hz
  /// Evaluation grid; defaults to the base parameters' default grid.
  std::optional<UniformGrid> grid;
  GridOptions grid_options;
  /// h |A''| / |A'| (L1 norms) above this flags the step as too large.
  Real curvature_threshold = 0.05;
};

struct FisherMatrix {
  MatrixXd values;           // d x d
  VectorXd steps;            // finite-difference step per parameter, Hz
  std::vector<int> flagged;  // parameters failing the curvature check
  std::vector<std::string> warnings;
};

/// I_ij = int dw/2pi A d_i log A d_j log A on the mass-normalized spectrum.
FisherMatrix fim(const SpinParams& params, const FisherOptions& opts = {});

/// Eigenvalues, descending.
VectorXd sloppiness_spectrum(const FisherMatrix& fisher);

struct JeffreysDensity {
  Real density = 0.0;  // sqrt(max(det I, 0)); 0 when rank deficient
  int rank = 0;
  int dimension = 0;
};

/// Rank counts eigenvalues above rel_tol * max eigenvalue.
JeffreysDensity jeffreys_density(const FisherMatrix& fisher, Real rel_tol = 1e-10);

struct GradientBound {
  Real gradient = 0.0;      // d D_H^2 / d theta_k
  Real sqrt_fisher = 0.0;   // sqrt(I_kk)
};

/// Per-parameter |d D_H^2/d theta| against sqrt(I_theta theta). Cauchy-Schwarz
/// gives |d D_H^2| <= sqrt(I)/2. `target` must be mass-normalized; model
/// spectra are evaluated on its grid.
std::vector<GradientBound> hellinger_gradient_bound(const SpinParams& params,
                                                    const NormalizedSpectrum& target,
                                                    const FisherOptions& opts = {});

}  // namespace qabc
