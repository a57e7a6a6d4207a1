#pragma once

// Shot-level emulation of the quench-and-measure protocol: prepare a z-product
// state j ~ Q0, evolve under U(t), measure i in the z basis. The "device" is an
// exact state-vector propagation; a measurement is a categorical draw from
// |<z_i|U(t)|z_j>|^2.

#include "qabc/parallel.hpp"
#include "qabc/spin_core.hpp"

#include <optional>

namespace qabc {

struct SamplingScheme {
  enum class Kind { Uniform, Thermal, Importance, AbsMagnetization };

  Kind kind = Kind::Uniform;
  Real beta = 0.0;  // thermal only; rho ~ exp(beta S^z_tot)

  static SamplingScheme uniform() { return {Kind::Uniform, 0.0}; }
  static SamplingScheme thermal(Real beta) { return {Kind::Thermal, beta}; }
  /// Q0(j) = (4/N) m_j^2 / 2^N; zero estimand variance at t = 0.
  static SamplingScheme importance() { return {Kind::Importance, 0.0}; }
  /// Q0(j) ~ |m_j|, the late-time optimum. Kept for variance comparisons.
  static SamplingScheme abs_magnetization() { return {Kind::AbsMagnetization, 0.0}; }

  void validate() const;
  std::string name() const;
  static SamplingScheme parse(const std::string& name, Real beta = 0.1);
};

/// Probability Q0(j) of preparing basis state j.
Real initial_probability(const SamplingScheme& scheme, std::uint64_t j, int n_spins);

/// Per-shot estimand r(i, j). Its expectation is S(t) for uniform, importance
/// and |m| sampling; for thermal sampling r = m_i / beta, which is biased at
/// O(beta^2).
Real estimand(const SamplingScheme& scheme, std::uint64_t i, std::uint64_t j, int n_spins);

/// P_t(i|j) = |<z_i|U(t)|z_j>|^2, stored as P(i, j). Doubly stochastic and
/// symmetric.
MatrixXd transition_matrix(const EigenSystem& eig, Real t);

std::uint64_t sample_initial(const SamplingScheme& scheme, int n_spins, Rng& rng);

struct ShotRecord {
  std::uint64_t initial_state = 0;
  std::uint64_t final_state = 0;
  Real initial_magnetization = 0.0;
  Real final_magnetization = 0.0;
  Real time = 0.0;
  Real value = 0.0;  // estimand r
};

/// Draws `shots` individual records at time t. Intended for inspection and
/// tests; run_shots accumulates without materializing records.
std::vector<ShotRecord> draw_shots(const EigenSystem& eig, const SamplingScheme& scheme, Real t,
                                   std::int64_t shots, std::uint64_t seed);

struct ResponseEstimate {
  UniformGrid times;
  VectorXd mean;                    // S-hat(t_k)
  std::vector<std::int64_t> shots;  // M_k
  VectorXd variance;                // unbiased sample variance of r at t_k
  std::vector<std::string> warnings;
};

enum class ShotAllocation { Uniform, EarlyWeighted };

/// Shots per time point. Uniform gives every point `shots_per_time`; early
/// weighting keeps the same total but distributes it ~ exp(-gamma t), at least
/// one shot per point.
std::vector<std::int64_t> allocate_shots(const UniformGrid& times, std::int64_t shots_per_time,
                                         ShotAllocation policy = ShotAllocation::Uniform,
                                         Real gamma = 0.0);

struct ShotOptions {
  std::uint64_t seed = 0;
  /// Target precision used for the thermal bias guidance beta <= sqrt(eps)/N.
  Real target_precision = 1e-2;
  /// Shots per independent rng stream; fixes the merge order.
  std::int64_t block_size = 8192;
};

ResponseEstimate run_shots(const EigenSystem& eig, const SamplingScheme& scheme,
                           const UniformGrid& times, const std::vector<std::int64_t>& shots,
                           const ShotOptions& opts = {});

struct EstimandMoments {
  Real mean = 0.0;
  Real variance = 0.0;
};

/// Exact mean and variance of the estimand by enumerating all (i, j).
EstimandMoments estimand_moments(const EigenSystem& eig, const SamplingScheme& scheme, Real t);
inline Real variance_oracle(const EigenSystem& eig, const SamplingScheme& scheme, Real t) {
  return estimand_moments(eig, scheme, t).variance;
}

/// dt = pi / (4 w_max) with w_max the largest transition frequency, out to
/// T = t_max_gamma / gamma.
UniformGrid default_time_grid(const TransitionList& tl, Real gamma, Real t_max_gamma = 8.0);

struct TransformOptions {
  /// Known transition bandwidth; enables the Nyquist check.
  std::optional<Real> bandwidth;
};

/// A(w) = 2 sum_k c_k dt e^{-gamma t_k} cos(w t_k) S(t_k) - dt^2 gamma S(0) / 6,
/// the trapezoidal half-line transform (c = 1/2 at the ends) with its leading
/// end correction, in the same normalization as spectrum_exact.
SpectralDensity spectrum_from_estimate(const UniformGrid& times, const VectorXd& response,
                                       Real gamma, const UniformGrid& omega,
                                       const TransformOptions& opts = {});
inline SpectralDensity spectrum_from_estimate(const ResponseEstimate& est, Real gamma,
                                              const UniformGrid& omega,
                                              const TransformOptions& opts = {}) {
  return spectrum_from_estimate(est.times, est.mean, gamma, omega, opts);
}

struct ShotSpectrumOptions {
  SamplingScheme scheme = SamplingScheme::importance();
  std::int64_t shots_per_time = 1000;
  Real t_max_gamma = 8.0;
  ShotAllocation allocation = ShotAllocation::Uniform;
  std::uint64_t seed = 0;
};

/// Full shot-mode pipeline: default time grid, run_shots, transform onto `omega`.
SpectralDensity sampled_spectrum(const SpinParams& params, const UniformGrid& omega,
                                 const ShotSpectrumOptions& opts);

}  // namespace qabc
