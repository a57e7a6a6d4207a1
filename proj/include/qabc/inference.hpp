#pragma once

// Iterative reweighting of a sampled prior by spectral overlap,
//   P_{i+1}(theta) = int dw/2pi T(w) A(w|theta) / A_i(w) P_i(theta),
// with A_i the sample-mean spectrum, followed by Gaussian moment matching and
// fresh draws. Spectra are mass-normalized on the target's grid (rad/s).

#include "qabc/metrics.hpp"
#include "qabc/sampler.hpp"

namespace qabc {

struct AtomicPrior {
  std::vector<VectorXd> atoms;  // theta vectors, equal weight
  int n_spins = 0;
  Real gamma = 1.0;  // shared linewidth, s^-1
  std::string source;

  void validate() const;
};

enum class SimulatorMode { Exact, Shots };

struct SimulatorOptions {
  SimulatorMode mode = SimulatorMode::Exact;
  std::int64_t shots_per_time = 1000;
  SamplingScheme scheme = SamplingScheme::importance();
  Real t_max_gamma = 8.0;
};

/// Mass-normalized spectrum of theta on `grid`. Shot-mode spectra are clipped
/// to non-negative values first.
NormalizedSpectrum model_spectrum(const VectorXd& theta, int n_spins, Real gamma, const UniformGrid& grid,
                                  const SimulatorOptions& sim = {}, std::uint64_t seed = 0);

struct InferenceOptions {
  int samples = 64;
  Real jitter = 1e-8;  // times trace(cov) / d
  Real max_shift = 1e4;     // |h| bound, Hz
  Real max_coupling = 100;  // |J| bound, Hz
  Real marginal_floor = 1e-12;
  SimulatorOptions simulator;
  std::uint64_t seed = 0;
};

struct PosteriorState {
  int iteration = 0;
  std::vector<VectorXd> samples;
  VectorXd weights;  // of `samples`, mean one
  VectorXd mean;
  MatrixXd covariance;
  Real ess = 0.0;
  std::vector<Real> tv_trace;
  int floor_hits = 0;  // marginal values raised to the floor
  int rejected = 0;    // draws outside the sanity bounds
  std::vector<std::string> warnings;
};

struct WeightResult {
  Real weight = 0.0;
  int floor_hits = 0;
};

/// w = int dw/2pi T A / A_marginal, with A_marginal floored at `floor`.
WeightResult bayes_weight(const NormalizedSpectrum& model, const NormalizedSpectrum& target,
                          const NormalizedSpectrum& marginal, Real floor = 1e-12);

/// Unweighted sample moments of the prior atoms; iteration 0.
PosteriorState initial_state(const AtomicPrior& prior);

/// One reweight / moment-match / redraw step.
PosteriorState update(const PosteriorState& state, const AtomicPrior& prior, const NormalizedSpectrum& target,
                      const InferenceOptions& opts);

/// Weighted moments (weights need not be normalized); covariance uses the
/// reliability-weight correction and adds jitter * trace / d on the diagonal.
void moment_match(PosteriorState& state, Real jitter, Real fallback_trace);

struct ConvergenceRecord {
  int iteration = 0;
  Real tv = 0.0;
  Real ess = 0.0;
  int floor_hits = 0;
  int rejected = 0;

  bool operator==(const ConvergenceRecord&) const = default;
};

struct ConvergenceReport {
  std::vector<ConvergenceRecord> records;
  std::string mode;  // exact | shots
  std::int64_t shots_per_time = 0;
  Real noise_floor = 0.0;  // 0 in exact mode
  Real noise_floor_error = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ConvergenceReport&) const = default;
};

struct InferenceResult {
  PosteriorState state;
  ConvergenceReport report;
};

/// Runs `iterations` updates from the prior. TV per iteration compares the
/// active simulator's spectrum at the posterior mean with the target.
InferenceResult run_inference(const AtomicPrior& prior, const NormalizedSpectrum& target, int iterations,
                              const InferenceOptions& opts = {}, int floor_repeats = 8);

struct NoiseFloor {
  Real mean = 0.0;
  Real standard_error = 0.0;
};

/// Mean TV between the exact spectrum of theta and independent shot-mode
/// spectra at the given budget (reconstruction of the dashed line in the
/// convergence plot). Exact mode returns 0.
NoiseFloor shot_noise_floor(const VectorXd& theta, int n_spins, Real gamma, const UniformGrid& grid,
                            const SimulatorOptions& sim, int repeats, std::uint64_t seed);

/// theta* plus Gaussian decoys theta* + N(0, diag(shift_sd^2, coupling_sd^2)),
/// with theta* at position `truth_index`.
AtomicPrior decoy_prior(const SpinParams& truth, int atoms, Real shift_sd, Real coupling_sd, std::uint64_t seed,
                        int truth_index = 0);

}  // namespace qabc
