#pragma once

// Spectra as probability densities: normalization and distances.
//
// All integrals use the measure d(omega)/2pi and the trapezoidal rule on a
// shared uniform grid, so a normalized density p satisfies int dw/2pi p = 1.

#include "qabc/spin_core.hpp"

#include <optional>

namespace qabc {

struct NormalizedSpectrum {
  struct Provenance {
    Real center = 0.0;     // first moment of the input, rad/s
    Real bandwidth = 1.0;  // standard deviation of the input, rad/s
    Real mass = 0.0;       // int dw/2pi A of the input
    std::optional<Real> sum_rule_ratio;  // mass / (N/4), when N is known
    bool standardized = true;
  };

  UniformGrid grid;  // standardized units, or rad/s when !standardized
  VectorXd values;
  Provenance provenance;

  /// View as a plain density on the same grid (n_spins unknown).
  SpectralDensity as_density() const;
};

/// 2048 points over [-10, 10] standardized units.
UniformGrid standard_grid();

/// Divide by mass, shift by the first moment, scale by the standard deviation,
/// and resample onto `grid` by linear interpolation. The shift and scale are
/// refined until the resampled density has zero mean and unit variance on
/// `grid` to rounding, which makes the operation idempotent.
NormalizedSpectrum normalize(const SpectralDensity& spec, const UniformGrid& grid = standard_grid());

/// Mass normalization only, on the input grid. Used wherever absolute
/// frequencies matter (Fisher information, inference).
NormalizedSpectrum normalize_mass(const SpectralDensity& spec);

/// Copy with negative values set to zero (sampled spectra carry noise lobes).
SpectralDensity clip_negative(SpectralDensity spec);

enum class Metric { Hellinger, Euclidean, JensenShannon, TotalVariation };

std::string metric_name(Metric m);
Metric parse_metric(const std::string& name);

namespace detail {
void check_nonnegative(const Eigen::Ref<const VectorXd>& v, const char* what);
}

/// Bhattacharyya coefficient int dw/2pi sqrt(p q).
template <typename P, typename Q>
Real bhattacharyya(const Eigen::DenseBase<P>& p, const Eigen::DenseBase<Q>& q, Real step) {
  return trapezoid((p.derived().array() * q.derived().array()).sqrt(), step) / kTwoPi;
}

/// sqrt(1/2 int dw/2pi (sqrt p - sqrt q)^2).
template <typename P, typename Q>
Real hellinger(const Eigen::DenseBase<P>& p, const Eigen::DenseBase<Q>& q, Real step) {
  const Real d2 = 0.5 * trapezoid((p.derived().array().sqrt() - q.derived().array().sqrt()).square(), step) / kTwoPi;
  return std::sqrt(std::max(0.0, d2));
}

/// sqrt(int dw/2pi (p - q)^2).
template <typename P, typename Q>
Real euclidean(const Eigen::DenseBase<P>& p, const Eigen::DenseBase<Q>& q, Real step) {
  return std::sqrt(trapezoid((p.derived().array() - q.derived().array()).square(), step) / kTwoPi);
}

/// 1/2 int dw/2pi |p - q|.
template <typename P, typename Q>
Real total_variation(const Eigen::DenseBase<P>& p, const Eigen::DenseBase<Q>& q, Real step) {
  return 0.5 * trapezoid((p.derived().array() - q.derived().array()).abs(), step) / kTwoPi;
}

/// D_JS^2 = 1/2 int dw/2pi [p log p + q log q - (p+q) log((p+q)/2)], 0 log 0 = 0.
template <typename P, typename Q>
Real jensen_shannon_divergence(const Eigen::DenseBase<P>& p, const Eigen::DenseBase<Q>& q, Real step) {
  const auto xlogx = [](Real x) { return x > 0.0 ? x * std::log(x) : 0.0; };
  ArrayXd f(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const Real a = p.derived()(k), b = q.derived()(k);
    f[k] = xlogx(a) + xlogx(b) - (a + b > 0.0 ? (a + b) * std::log(0.5 * (a + b)) : 0.0);
  }
  return std::max(0.0, 0.5 * trapezoid(f, step) / kTwoPi);
}

// Checked overloads: shared grid, no negative values.
Real bhattacharyya(const NormalizedSpectrum& p, const NormalizedSpectrum& q);
Real hellinger(const NormalizedSpectrum& p, const NormalizedSpectrum& q);
Real euclidean(const NormalizedSpectrum& p, const NormalizedSpectrum& q);
Real total_variation(const NormalizedSpectrum& p, const NormalizedSpectrum& q);
Real jensen_shannon_divergence(const NormalizedSpectrum& p, const NormalizedSpectrum& q);
/// sqrt of the divergence; the form used in distance matrices.
Real jensen_shannon(const NormalizedSpectrum& p, const NormalizedSpectrum& q);

Real distance(const NormalizedSpectrum& p, const NormalizedSpectrum& q, Metric metric);

}  // namespace qabc
