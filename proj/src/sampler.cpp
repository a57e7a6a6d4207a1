#include "qabc/sampler.hpp"

#include <numeric>
#include <sstream>

namespace qabc {

namespace {

Real binomial(int n, int k) {
  Real c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * static_cast<Real>(n - k + i) / static_cast<Real>(i);
  return c;
}

/// Mean |m| over all basis states.
Real mean_abs_magnetization(int n) {
  Real acc = 0.0;
  for (int k = 0; k <= n; ++k) acc += std::abs(0.5 * n - k) * binomial(n, k);
  return acc / std::ldexp(1.0, n);
}

/// Draws initial states per scheme: uniform bitstrings, independent
/// per-spin Bernoulli for thermal, or a magnetization sector followed by a
/// uniform bitstring inside it for the m^2 and |m| schemes.
class InitialSampler {
 public:
  InitialSampler(const SamplingScheme& scheme, int n) : scheme_(scheme), n_(n) {
    scheme.validate();
    require(n >= 1 && n <= 62, "n_spins out of range for sampling");
    if (scheme.kind == SamplingScheme::Kind::Thermal)
      p_down_ = 1.0 / (1.0 + std::exp(scheme.beta));
    if (scheme.kind == SamplingScheme::Kind::Importance ||
        scheme.kind == SamplingScheme::Kind::AbsMagnetization) {
      std::vector<Real> w(static_cast<std::size_t>(n + 1));
      for (int k = 0; k <= n; ++k) {
        const Real m = 0.5 * n - k;
        const Real per_state = scheme.kind == SamplingScheme::Kind::Importance ? m * m : std::abs(m);
        w[static_cast<std::size_t>(k)] = per_state * binomial(n, k);
      }
      sectors_ = std::discrete_distribution<int>(w.begin(), w.end());
    }
  }

  std::uint64_t operator()(Rng& rng) {
    switch (scheme_.kind) {
      case SamplingScheme::Kind::Uniform:
        return std::uniform_int_distribution<std::uint64_t>(0, (std::uint64_t{1} << n_) - 1)(rng);
      case SamplingScheme::Kind::Thermal: {
        std::bernoulli_distribution down(p_down_);
        std::uint64_t s = 0;
        for (int i = 0; i < n_; ++i)
          if (down(rng)) s |= std::uint64_t{1} << i;
        return s;
      }
      default: {
        const int k = sectors_(rng);
        std::vector<int> pos(static_cast<std::size_t>(n_));
        std::iota(pos.begin(), pos.end(), 0);
        std::uint64_t s = 0;
        for (int a = 0; a < k; ++a) {
          const int b = std::uniform_int_distribution<int>(a, n_ - 1)(rng);
          std::swap(pos[static_cast<std::size_t>(a)], pos[static_cast<std::size_t>(b)]);
          s |= std::uint64_t{1} << pos[static_cast<std::size_t>(a)];
        }
        return s;
      }
    }
  }

 private:
  SamplingScheme scheme_;
  int n_;
  Real p_down_ = 0.5;
  std::discrete_distribution<int> sectors_;
};

/// Column-wise cumulative sums of P_t, for categorical measurement draws.
class MeasurementTable {
 public:
  explicit MeasurementTable(const MatrixXd& p) : cdf_(p.rows(), p.cols()) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      Real acc = 0.0;
      for (Eigen::Index i = 0; i < p.rows(); ++i) cdf_(i, j) = (acc += p(i, j));
    }
  }
  std::uint64_t draw(std::uint64_t j, Rng& rng) const {
    const auto col = static_cast<Eigen::Index>(j);
    const Real* begin = cdf_.col(col).data();
    const Real* end = begin + cdf_.rows();
    const Real u = std::uniform_real_distribution<Real>(0.0, end[-1])(rng);
    const Real* it = std::upper_bound(begin, end, u);
    return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - begin, cdf_.rows() - 1));
  }

 private:
  MatrixXd cdf_;
};

/// Shifted-data accumulator, mergeable in a fixed order (Chan et al.).
struct RunningStats {
  std::int64_t n = 0;
  Real mean = 0.0;
  Real m2 = 0.0;

  void push(Real x) {
    ++n;
    const Real d = x - mean;
    mean += d / static_cast<Real>(n);
    m2 += d * (x - mean);
  }
  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const Real total = static_cast<Real>(n + o.n);
    const Real d = o.mean - mean;
    mean += d * static_cast<Real>(o.n) / total;
    m2 += o.m2 + d * d * static_cast<Real>(n) * static_cast<Real>(o.n) / total;
    n += o.n;
  }
  Real variance() const { return n > 1 ? std::max(0.0, m2 / static_cast<Real>(n - 1)) : 0.0; }
};

}  // namespace

void SamplingScheme::validate() const {
  if (kind == Kind::Thermal) require(beta > 0.0 && std::isfinite(beta), "thermal sampling needs beta > 0");
}

std::string SamplingScheme::name() const {
  switch (kind) {
    case Kind::Uniform: return "uniform";
    case Kind::Thermal: return "thermal";
    case Kind::Importance: return "importance";
    case Kind::AbsMagnetization: return "abs-magnetization";
  }
  return "?";
}

SamplingScheme SamplingScheme::parse(const std::string& name, Real beta) {
  if (name == "uniform") return uniform();
  if (name == "thermal") return thermal(beta);
  if (name == "importance") return importance();
  if (name == "abs-magnetization") return abs_magnetization();
  throw ValidationError("unknown sampling scheme '" + name + "'");
}

Real initial_probability(const SamplingScheme& scheme, std::uint64_t j, int n) {
  const Real m = magnetization(j, n);
  const Real uniform = std::ldexp(1.0, -n);
  switch (scheme.kind) {
    case SamplingScheme::Kind::Uniform: return uniform;
    case SamplingScheme::Kind::Thermal:
      return std::exp(scheme.beta * m) / std::pow(2.0 * std::cosh(0.5 * scheme.beta), n);
    case SamplingScheme::Kind::Importance: return 4.0 / n * m * m * uniform;
    case SamplingScheme::Kind::AbsMagnetization:
      return std::abs(m) * uniform / mean_abs_magnetization(n);
  }
  return 0.0;
}

Real estimand(const SamplingScheme& scheme, std::uint64_t i, std::uint64_t j, int n) {
  const Real mi = magnetization(i, n);
  const Real mj = magnetization(j, n);
  switch (scheme.kind) {
    case SamplingScheme::Kind::Uniform: return mi * mj;
    case SamplingScheme::Kind::Thermal: return mi / scheme.beta;
    // m_i m_j P0/Q0 = (N/4) m_i / m_j; sectors with m_j = 0 are never drawn.
    case SamplingScheme::Kind::Importance: return mj == 0.0 ? 0.0 : 0.25 * n * mi / mj;
    case SamplingScheme::Kind::AbsMagnetization:
      return mj == 0.0 ? 0.0 : mean_abs_magnetization(n) * mi * (mj > 0 ? 1.0 : -1.0);
  }
  return 0.0;
}

MatrixXd transition_matrix(const EigenSystem& eig, Real t) {
  require(t >= 0.0, "transition_matrix: t must be >= 0");
  const VectorXcd phases = (-Complex(0.0, 1.0) * t * eig.energies.cast<Complex>()).array().exp();
  const MatrixXcd u = eig.basis.cast<Complex>() * phases.asDiagonal() * eig.basis.transpose().cast<Complex>();
  return u.cwiseAbs2();
}

std::uint64_t sample_initial(const SamplingScheme& scheme, int n_spins, Rng& rng) {
  return InitialSampler(scheme, n_spins)(rng);
}

std::vector<ShotRecord> draw_shots(const EigenSystem& eig, const SamplingScheme& scheme, Real t,
                                   std::int64_t shots, std::uint64_t seed) {
  require(shots >= 1, "shots must be >= 1");
  InitialSampler initial(scheme, eig.n_spins);
  const MeasurementTable table(transition_matrix(eig, t));
  Rng rng(seed);
  std::vector<ShotRecord> out;
  out.reserve(static_cast<std::size_t>(shots));
  for (std::int64_t s = 0; s < shots; ++s) {
    ShotRecord r;
    r.initial_state = initial(rng);
    r.final_state = table.draw(r.initial_state, rng);
    r.initial_magnetization = magnetization(r.initial_state, eig.n_spins);
    r.final_magnetization = magnetization(r.final_state, eig.n_spins);
    r.time = t;
    r.value = estimand(scheme, r.final_state, r.initial_state, eig.n_spins);
    out.push_back(r);
  }
  return out;
}

std::vector<std::int64_t> allocate_shots(const UniformGrid& times, std::int64_t shots_per_time,
                                         ShotAllocation policy, Real gamma) {
  require(shots_per_time >= 1, "shots_per_time must be >= 1");
  const auto k = static_cast<std::size_t>(times.size);
  std::vector<std::int64_t> shots(k, shots_per_time);
  if (policy == ShotAllocation::EarlyWeighted) {
    require(gamma > 0.0, "early-weighted allocation needs gamma > 0");
    std::vector<Real> w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = std::exp(-gamma * times[static_cast<Eigen::Index>(i)]);
    const Real total = std::accumulate(w.begin(), w.end(), 0.0);
    const Real budget = static_cast<Real>(shots_per_time) * static_cast<Real>(k);
    for (std::size_t i = 0; i < k; ++i)
      shots[i] = std::max<std::int64_t>(1, std::llround(budget * w[i] / total));
  }
  return shots;
}

ResponseEstimate run_shots(const EigenSystem& eig, const SamplingScheme& scheme,
                           const UniformGrid& times, const std::vector<std::int64_t>& shots,
                           const ShotOptions& opts) {
  scheme.validate();
  require(times.size >= 1 && times.start >= 0.0, "times must be a grid with t >= 0");
  require(static_cast<Eigen::Index>(shots.size()) == times.size, "one shot count per time point");
  for (auto m : shots) require(m >= 1, "every time point needs at least one shot");
  require(opts.block_size >= 1, "block_size must be >= 1");
  const int n = eig.n_spins;

  ResponseEstimate est;
  est.times = times;
  est.shots = shots;
  est.mean = VectorXd::Zero(times.size);
  est.variance = VectorXd::Zero(times.size);

  // Magnetizations per basis state, and the estimand table r(i, j).
  const std::uint64_t dim = std::uint64_t{1} << n;
  MatrixXd r(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t j = 0; j < dim; ++j)
    for (std::uint64_t i = 0; i < dim; ++i)
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = estimand(scheme, i, j, n);

  parallel_for(static_cast<std::size_t>(times.size), [&](std::size_t k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const MeasurementTable table(transition_matrix(eig, times[kk]));
    InitialSampler initial(scheme, n);
    RunningStats total;
    const std::int64_t m = shots[k];
    for (std::int64_t b = 0, done = 0; done < m; ++b) {
      Rng rng(stream_seed(opts.seed, k, static_cast<std::uint64_t>(b)));
      const std::int64_t len = std::min(opts.block_size, m - done);
      RunningStats block;
      for (std::int64_t s = 0; s < len; ++s) {
        const std::uint64_t j = initial(rng);
        const std::uint64_t i = table.draw(j, rng);
        block.push(r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
      total.merge(block);
      done += len;
    }
    est.mean[kk] = total.mean;
    est.variance[kk] = total.variance();
  });

  if (scheme.kind == SamplingScheme::Kind::Thermal) {
    const Real guidance = std::sqrt(opts.target_precision) / n;
    if (scheme.beta > guidance) {
      std::ostringstream msg;
      msg << "thermal estimator bias: beta = " << scheme.beta << " exceeds sqrt(eps)/N = " << guidance
          << "; expect O(beta^2 N^2) bias";
      est.warnings.push_back(msg.str());
    }
  }
  return est;
}

EstimandMoments estimand_moments(const EigenSystem& eig, const SamplingScheme& scheme, Real t) {
  scheme.validate();
  const int n = eig.n_spins;
  require(n <= 12, "enumeration oracle limited to N <= 12");
  const MatrixXd p = transition_matrix(eig, t);
  const std::uint64_t dim = std::uint64_t{1} << n;
  Real s1 = 0.0, s2 = 0.0;
  for (std::uint64_t j = 0; j < dim; ++j) {
    const Real q = initial_probability(scheme, j, n);
    if (q == 0.0) continue;
    for (std::uint64_t i = 0; i < dim; ++i) {
      const Real w = p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * q;
      const Real x = estimand(scheme, i, j, n);
      s1 += w * x;
      s2 += w * x * x;
    }
  }
  return {s1, std::max(0.0, s2 - s1 * s1)};
}

UniformGrid default_time_grid(const TransitionList& tl, Real gamma, Real t_max_gamma) {
  require(gamma > 0.0, "gamma must be positive");
  const Real total = t_max_gamma / gamma;
  const Real w_max = tl.bandwidth();
  // Degenerate spectra (no finite frequencies) still get a resolvable grid.
  const Real dt = w_max > 0.0 ? std::min(std::numbers::pi / (4.0 * w_max), total / 16.0) : total / 16.0;
  return make_grid(0.0, total, dt);
}

SpectralDensity spectrum_from_estimate(const UniformGrid& times, const VectorXd& response,
                                       Real gamma, const UniformGrid& omega,
                                       const TransformOptions& opts) {
  require(gamma > 0.0, "gamma must be positive");
  require(times.size >= 2 && response.size() == times.size, "response must match the time grid");
  require(times.start == 0.0, "the half-line transform needs samples starting at t = 0");
  SpectralDensity spec;
  spec.omega = omega;
  spec.values = VectorXd::Zero(omega.size);
  const Real dt = times.step;
  if (opts.bandwidth && dt > std::numbers::pi / *opts.bandwidth) {
    std::ostringstream msg;
    msg << "aliasing: dt = " << dt << " s exceeds pi / w_max = " << std::numbers::pi / *opts.bandwidth;
    spec.warnings.push_back(msg.str());
  }
  VectorXd weighted(times.size);
  for (Eigen::Index k = 0; k < times.size; ++k) {
    const Real end_weight = (k == 0 || k == times.size - 1) ? 0.5 : 1.0;
    weighted[k] = 2.0 * end_weight * dt * std::exp(-gamma * times[k]) * response[k];
  }
  // First Euler-Maclaurin end correction at t = 0, using S'(0) = 0.
  const Real end_correction = -dt * dt * gamma * response[0] / 6.0;
  for (Eigen::Index i = 0; i < omega.size; ++i) {
    const Real w = omega[i];
    Real acc = end_correction;
    for (Eigen::Index k = 0; k < times.size; ++k) acc += weighted[k] * std::cos(w * times[k]);
    spec.values[i] = acc;
  }
  return spec;
}

SpectralDensity sampled_spectrum(const SpinParams& params, const UniformGrid& omega,
                                 const ShotSpectrumOptions& opts) {
  const EigenSystem eig = solve(params);
  const TransitionList tl = transitions(eig);
  const UniformGrid times = default_time_grid(tl, params.gamma, opts.t_max_gamma);
  ShotOptions shot_opts;
  shot_opts.seed = opts.seed;
  const ResponseEstimate est =
      run_shots(eig, opts.scheme, times, allocate_shots(times, opts.shots_per_time, opts.allocation, params.gamma),
                shot_opts);
  TransformOptions topts;
  topts.bandwidth = tl.bandwidth();
  SpectralDensity spec = spectrum_from_estimate(est, params.gamma, omega, topts);
  spec.n_spins = params.n_spins;
  for (auto& w : est.warnings) spec.warnings.push_back(w);
  return spec;
}

}  // namespace qabc
