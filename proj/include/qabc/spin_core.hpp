#pragma once

// Isotropic Heisenberg model for liquid-state proton NMR: Hamiltonian
// construction, exact diagonalization, response function and spectrum.
//
// Units: SpinParams carries Hz (shifts, couplings) and s^-1 (gamma). Everything
// downstream of build_hamiltonian is angular (rad/s).

#include "qabc/common.hpp"

#include <bit>
#include <optional>

namespace qabc {

inline constexpr int kDefaultMaxSpins = 14;

struct SpinParams {
  int n_spins = 0;
  VectorXd shifts;     // h_i, Hz
  MatrixXd couplings;  // J_ij, Hz; symmetric, zero diagonal
  Real gamma = 1.0;    // decoherence rate, s^-1

  /// Throws ValidationError naming the offending field.
  void validate() const;

  /// Parameter vector: shifts, then couplings J_ij for i < j in row-major order.
  VectorXd theta() const;
  static SpinParams from_theta(const VectorXd& theta, int n_spins, Real gamma);

  bool operator==(const SpinParams& o) const {
    return n_spins == o.n_spins && shifts == o.shifts && couplings == o.couplings &&
           gamma == o.gamma;
  }
};

/// Length of the parameter vector for n spins: n + n(n-1)/2.
constexpr int theta_dimension(int n_spins) { return n_spins + n_spins * (n_spins - 1) / 2; }

/// Total z-magnetization of computational basis state `index`. Bit k set means
/// spin k points down.
inline Real magnetization(std::uint64_t index, int n_spins) {
  return 0.5 * n_spins - static_cast<Real>(std::popcount(index));
}

/// Diagonal of S^z_tot in the computational basis.
VectorXd sz_total_diagonal(int n_spins);

/// H = sum_{i<j} 2 pi J_ij S_i.S_j + sum_i 2 pi h_i S^x_i in the z basis, rad/s.
/// The isotropic model is real symmetric in this basis; Scalar may be complex
/// for callers that want to mix in complex operators.
template <typename Scalar = Real>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> build_hamiltonian(
    const SpinParams& params, int max_spins = kDefaultMaxSpins) {
  params.validate();
  if (params.n_spins > max_spins)
    throw ValidationError("Hilbert space 2^" + std::to_string(params.n_spins) +
                          " exceeds the configured cap of 2^" + std::to_string(max_spins));
  const int n = params.n_spins;
  const std::uint64_t dim = std::uint64_t{1} << n;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim, dim);
  for (std::uint64_t s = 0; s < dim; ++s) {
    for (int i = 0; i < n; ++i) {
      const bool down_i = (s >> i) & 1;
      h(s ^ (std::uint64_t{1} << i), s) += Scalar(0.5 * to_angular(params.shifts[i]));
      for (int j = i + 1; j < n; ++j) {
        const Real coupling = to_angular(params.couplings(i, j));
        if (coupling == 0.0) continue;
        const bool down_j = (s >> j) & 1;
        h(s, s) += Scalar(coupling * (down_i == down_j ? 0.25 : -0.25));
        if (down_i != down_j) {
          const std::uint64_t flipped = s ^ (std::uint64_t{1} << i) ^ (std::uint64_t{1} << j);
          h(flipped, s) += Scalar(0.5 * coupling);
        }
      }
    }
  }
  return h;
}

struct EigenSystem {
  int n_spins = 0;
  VectorXd energies;      // ascending, rad/s
  MatrixXd basis;         // columns are eigenvectors (real orthogonal)
  MatrixXd sz_eigenbasis; // <a|S^z_tot|b>
};

/// Dense symmetric eigensolve. Throws NumericalError if the solver fails or
/// the residual exceeds 1e-9 ||H||.
EigenSystem diagonalize(const MatrixXd& hamiltonian);

inline EigenSystem solve(const SpinParams& params, int max_spins = kDefaultMaxSpins) {
  return diagonalize(build_hamiltonian(params, max_spins));
}

/// All transitions b <- a with weight |<a|S^z_tot|b>|^2 / 2^N at angular
/// frequency E_b - E_a. Exactly coincident frequencies are merged; negligible
/// weights are dropped. Sorted by frequency.
struct TransitionList {
  int n_spins = 0;
  VectorXd frequency;
  VectorXd weight;

  /// max |frequency|.
  Real bandwidth() const;
  /// sqrt(sum w f^2 / sum w), rad/s; the rms transition frequency.
  Real stick_width() const;
};

TransitionList transitions(const EigenSystem& eig);

struct ResponseSeries {
  UniformGrid times;      // s, starting at 0
  VectorXcd values;
  std::optional<VectorXd> variance;
};

/// S(t) = 2^-N sum_ab |<a|S^z|b>|^2 exp(i (E_a - E_b) t).
Complex response_at(const TransitionList& tl, Real t);
ResponseSeries response_exact(const TransitionList& tl, const UniformGrid& times);
inline ResponseSeries response_exact(const EigenSystem& eig, const UniformGrid& times) {
  return response_exact(transitions(eig), times);
}

struct SpectralDensity {
  UniformGrid omega;     // rad/s
  VectorXd values;       // A(omega) >= 0
  int n_spins = 0;       // 0 when unknown
  std::vector<std::string> warnings;

  Real grid_step() const { return omega.step; }
  /// int (d omega / 2 pi) A by the trapezoidal rule.
  Real mass() const { return trapezoid(values, omega.step) / kTwoPi; }
};

struct GridOptions {
  Real margin = 64.0;        // in units of gamma beyond the extreme transitions
  Real step_fraction = 0.2;  // step = step_fraction * gamma
};

/// Grid covering [min f - margin gamma, max f + margin gamma]. A margin of 64
/// gamma keeps at least 99% of each Lorentzian's mass on the grid.
UniformGrid default_omega_grid(const TransitionList& tl, Real gamma, GridOptions opts = {});

/// Closed-form Lorentzian sum
///   A(w) = sum_ab w_ab 2 gamma / (gamma^2 + (w - f_ab)^2),
/// the full-line transform of S(t) e^{-gamma |t|}, so that the spectral mass
/// int dw/2pi A equals S(0) = N/4. Warns when the grid captures < 99% of it.
SpectralDensity spectrum_exact(const TransitionList& tl, Real gamma, const UniformGrid& omega);
inline SpectralDensity spectrum_exact(const EigenSystem& eig, Real gamma, const UniformGrid& omega) {
  return spectrum_exact(transitions(eig), gamma, omega);
}
/// Spectrum of `params` on its default grid.
SpectralDensity simulate_spectrum(const SpinParams& params, GridOptions opts = {});

/// Inverse participation ratio (int A dw)^2 / int A^2 dw, i.e. int p / int p^2
/// for the unit-mass density p. One Lorentzian of width gamma gives 2 pi gamma.
Real ipr(const SpectralDensity& spec);

}  // namespace qabc
