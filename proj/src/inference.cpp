#include "qabc/inference.hpp"

#include "qabc/parallel.hpp"

#include <sstream>

namespace qabc {

void AtomicPrior::validate() const {
  require(atoms.size() >= 2, "atomic prior needs at least two atoms");
  require(gamma > 0.0, "prior gamma must be positive");
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    require(atoms[k].size() == theta_dimension(n_spins), "atom " + std::to_string(k) + " has the wrong length");
    require(atoms[k].allFinite(), "atom " + std::to_string(k) + " is not finite");
  }
}

NormalizedSpectrum model_spectrum(const VectorXd& theta, int n_spins, Real gamma, const UniformGrid& grid,
                                  const SimulatorOptions& sim, std::uint64_t seed) {
  const SpinParams p = SpinParams::from_theta(theta, n_spins, gamma);
  if (sim.mode == SimulatorMode::Exact) return normalize_mass(spectrum_exact(transitions(solve(p)), gamma, grid));
  ShotSpectrumOptions so;
  so.scheme = sim.scheme;
  so.shots_per_time = sim.shots_per_time;
  so.t_max_gamma = sim.t_max_gamma;
  so.seed = seed;
  SpectralDensity s = clip_negative(sampled_spectrum(p, grid, so));
  if (!(s.mass() > 0.0)) throw NumericalError("shot-mode spectrum has no positive mass");
  return normalize_mass(s);
}

WeightResult bayes_weight(const NormalizedSpectrum& model, const NormalizedSpectrum& target,
                          const NormalizedSpectrum& marginal, Real floor) {
  require(model.grid == target.grid && marginal.grid == target.grid, "weight inputs on different grids");
  WeightResult out;
  VectorXd integrand(target.values.size());
  for (Eigen::Index k = 0; k < integrand.size(); ++k) {
    Real m = marginal.values[k];
    if (m < floor) {
      m = floor;
      ++out.floor_hits;
    }
    integrand[k] = target.values[k] * model.values[k] / m;
  }
  out.weight = trapezoid(integrand, target.grid.step) / kTwoPi;
  return out;
}

void moment_match(PosteriorState& state, Real jitter, Real fallback_trace) {
  const auto n = state.samples.size();
  require(n >= 1 && state.weights.size() == static_cast<Eigen::Index>(n), "samples and weights differ in length");
  const auto d = state.samples[0].size();
  const Real v1 = state.weights.sum();
  const Real v2 = state.weights.squaredNorm();
  require(v1 > 0.0, "all weights are zero");
  state.mean = VectorXd::Zero(d);
  for (std::size_t k = 0; k < n; ++k) state.mean += state.weights[static_cast<Eigen::Index>(k)] * state.samples[k];
  state.mean /= v1;
  MatrixXd cov = MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < n; ++k) {
    const VectorXd r = state.samples[k] - state.mean;
    cov.noalias() += state.weights[static_cast<Eigen::Index>(k)] * r * r.transpose();
  }
  const Real denom = v1 - v2 / v1;
  cov /= denom > 1e-12 * v1 ? denom : v1;
  Real trace = cov.trace();
  if (!(trace > 0.0)) trace = fallback_trace;
  cov.diagonal().array() += jitter * trace / static_cast<Real>(d);
  state.covariance = 0.5 * (cov + cov.transpose());
  state.ess = v1 * v1 / v2;
}

PosteriorState initial_state(const AtomicPrior& prior) {
  prior.validate();
  PosteriorState s;
  s.samples = prior.atoms;
  s.weights = VectorXd::Ones(static_cast<Eigen::Index>(prior.atoms.size()));
  moment_match(s, 1e-8, 1.0);
  return s;
}

namespace {

bool within_bounds(const VectorXd& theta, int n_spins, const InferenceOptions& opts) {
  if (!theta.allFinite()) return false;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const Real bound = k < n_spins ? opts.max_shift : opts.max_coupling;
    if (std::abs(theta[k]) > bound) return false;
  }
  return true;
}

}  // namespace

PosteriorState update(const PosteriorState& state, const AtomicPrior& prior, const NormalizedSpectrum& target,
                      const InferenceOptions& opts) {
  const auto n = state.samples.size();
  require(n >= 2, "update needs at least two samples");
  require(opts.samples >= 2, "samples per iteration must be >= 2");
  require(target.grid.size >= 2 && !target.provenance.standardized, "target must be mass-normalized");
  const int iteration = state.iteration + 1;

  std::vector<NormalizedSpectrum> spectra(n);
  parallel_for(n, [&](std::size_t k) {
    spectra[k] = model_spectrum(state.samples[k], prior.n_spins, prior.gamma, target.grid, opts.simulator,
                                stream_seed(opts.seed, static_cast<std::uint64_t>(iteration), k));
  });
  NormalizedSpectrum marginal = spectra[0];
  for (std::size_t k = 1; k < n; ++k) marginal.values += spectra[k].values;
  marginal.values /= static_cast<Real>(n);

  PosteriorState next;
  next.iteration = iteration;
  next.tv_trace = state.tv_trace;
  next.samples = state.samples;
  next.weights.resize(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const WeightResult w = bayes_weight(spectra[k], target, marginal, opts.marginal_floor);
    if (!std::isfinite(w.weight) || w.weight < 0.0) throw NumericalError("non-finite Bayes weight");
    next.weights[static_cast<Eigen::Index>(k)] = w.weight;
    next.floor_hits += w.floor_hits;
  }
  const Real total = next.weights.sum();
  if (!(total > 0.0)) throw NumericalError("all Bayes weights vanish; target outside the prior's support");
  next.weights *= static_cast<Real>(n) / total;

  moment_match(next, opts.jitter, state.covariance.trace());
  if (next.ess < 2.0) {
    next.covariance *= 4.0;
    std::ostringstream msg;
    msg << "iteration " << iteration << ": effective sample size " << next.ess << " < 2, covariance inflated x4";
    next.warnings.push_back(msg.str());
  }

  // Fresh draws from N(mean, cov) through its symmetric square root.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(next.covariance);
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigensolver failed");
  const MatrixXd root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Rng rng(stream_seed(opts.seed, static_cast<std::uint64_t>(iteration), 0xd1a5ULL));
  std::normal_distribution<Real> normal;
  std::vector<VectorXd> drawn;
  const auto d = next.mean.size();
  while (static_cast<int>(drawn.size()) < opts.samples) {
    VectorXd z(d);
    for (Eigen::Index k = 0; k < d; ++k) z[k] = normal(rng);
    VectorXd theta = next.mean + root * z;
    if (within_bounds(theta, prior.n_spins, opts)) {
      drawn.push_back(std::move(theta));
    } else if (++next.rejected > 1000 * opts.samples) {
      throw NumericalError("posterior Gaussian lies outside the sanity bounds");
    }
  }
  next.samples = std::move(drawn);
  return next;
}

NoiseFloor shot_noise_floor(const VectorXd& theta, int n_spins, Real gamma, const UniformGrid& grid,
                            const SimulatorOptions& sim, int repeats, std::uint64_t seed) {
  require(repeats >= 2, "noise floor needs at least two repeats");
  if (sim.mode == SimulatorMode::Exact) return {};
  const NormalizedSpectrum exact = model_spectrum(theta, n_spins, gamma, grid);
  VectorXd tv(repeats);
  parallel_for(static_cast<std::size_t>(repeats), [&](std::size_t r) {
    tv[static_cast<Eigen::Index>(r)] =
        total_variation(exact, model_spectrum(theta, n_spins, gamma, grid, sim, stream_seed(seed, 0xf100, r)));
  });
  NoiseFloor out;
  out.mean = tv.mean();
  out.standard_error = std::sqrt((tv.array() - out.mean).square().sum() / (repeats - 1) / repeats);
  return out;
}

InferenceResult run_inference(const AtomicPrior& prior, const NormalizedSpectrum& target, int iterations,
                              const InferenceOptions& opts, int floor_repeats) {
  require(iterations >= 0, "iterations must be >= 0");
  InferenceResult out;
  out.state = initial_state(prior);
  out.report.mode = opts.simulator.mode == SimulatorMode::Exact ? "exact" : "shots";
  out.report.shots_per_time = opts.simulator.mode == SimulatorMode::Exact ? 0 : opts.simulator.shots_per_time;
  out.report.seed = opts.seed;
  for (int it = 0; it < iterations; ++it) {
    PosteriorState next = update(out.state, prior, target, opts);
    for (auto& w : next.warnings) out.state.warnings.push_back(w);
    next.warnings = out.state.warnings;
    const NormalizedSpectrum at_mean = model_spectrum(next.mean, prior.n_spins, prior.gamma, target.grid,
                                                      opts.simulator,
                                                      stream_seed(opts.seed, static_cast<std::uint64_t>(next.iteration), 0x7e57ULL));
    const Real tv = total_variation(at_mean, target);
    next.tv_trace.push_back(tv);
    out.report.records.push_back({next.iteration, tv, next.ess, next.floor_hits, next.rejected});
    out.state = std::move(next);
  }
  if (opts.simulator.mode == SimulatorMode::Shots && iterations > 0) {
    const NoiseFloor f = shot_noise_floor(out.state.mean, prior.n_spins, prior.gamma, target.grid, opts.simulator,
                                          floor_repeats, stream_seed(opts.seed, 0xf1002ULL));
    out.report.noise_floor = f.mean;
    out.report.noise_floor_error = f.standard_error;
  }
  return out;
}

AtomicPrior decoy_prior(const SpinParams& truth, int atoms, Real shift_sd, Real coupling_sd, std::uint64_t seed,
                        int truth_index) {
  require(atoms >= 2, "prior needs at least two atoms");
  require(truth_index >= 0 && truth_index < atoms, "truth index out of range");
  truth.validate();
  AtomicPrior prior;
  prior.n_spins = truth.n_spins;
  prior.gamma = truth.gamma;
  prior.source = "decoys";
  const VectorXd center = truth.theta();
  Rng rng(stream_seed(seed, 0xdec0ULL));
  std::normal_distribution<Real> normal;
  for (int a = 0; a < atoms; ++a) {
    VectorXd theta = center;
    if (a != truth_index)
      for (Eigen::Index k = 0; k < theta.size(); ++k)
        theta[k] += (k < truth.n_spins ? shift_sd : coupling_sd) * normal(rng);
    prior.atoms.push_back(std::move(theta));
  }
  return prior;
}

}  // namespace qabc
