#include "qabc/metrics.hpp"

namespace qabc {

namespace {

struct Moments {
  Real mass, mean, variance;
};

Moments moments(const VectorXd& v, const UniformGrid& g) {
  const VectorXd x = g.points();
  const Real m0 = trapezoid(v, g.step);
  const Real m1 = trapezoid(v.cwiseProduct(x), g.step) / m0;
  const Real m2 = trapezoid(v.cwiseProduct((x.array() - m1).square().matrix()), g.step) / m0;
  return {m0 / kTwoPi, m1, m2};
}

/// Linear interpolation of (g, v) at `at`; zero outside the grid.
Real interpolate(const VectorXd& v, const UniformGrid& g, Real at) {
  const Real pos = (at - g.start) / g.step;
  if (pos < 0.0 || pos > static_cast<Real>(g.size - 1)) return 0.0;
  const auto k = std::min(static_cast<Eigen::Index>(pos), g.size - 2);
  const Real frac = pos - static_cast<Real>(k);
  return (1.0 - frac) * v[k] + frac * v[k + 1];
}

void check_shared(const NormalizedSpectrum& p, const NormalizedSpectrum& q) {
  require(p.grid == q.grid && p.values.size() == q.values.size(),
          "distance between spectra on different grids");
  detail::check_nonnegative(p.values, "first spectrum");
  detail::check_nonnegative(q.values, "second spectrum");
}

}  // namespace

namespace detail {
void check_nonnegative(const Eigen::Ref<const VectorXd>& v, const char* what) {
  require(v.size() > 0 && v.allFinite(), std::string(what) + " has non-finite values");
  require(v.minCoeff() >= 0.0, std::string(what) + " has negative values");
}
}  // namespace detail

SpectralDensity NormalizedSpectrum::as_density() const {
  SpectralDensity s;
  s.omega = grid;
  s.values = values;
  return s;
}

UniformGrid standard_grid() { return UniformGrid{-10.0, 20.0 / 2047.0, 2048}; }

NormalizedSpectrum normalize(const SpectralDensity& spec, const UniformGrid& grid) {
  require(spec.values.size() == spec.omega.size && spec.omega.size >= 2, "spectrum and grid size differ");
  detail::check_nonnegative(spec.values, "spectrum");
  const Moments src = moments(spec.values, spec.omega);
  require(src.mass > 0.0, "cannot normalize a spectrum with zero mass");
  Real center = src.mean;
  Real width = std::sqrt(src.variance);
  require(width >= 2.0 * spec.omega.step,
          "spectrum narrower than two grid steps; bandwidth undefined");

  NormalizedSpectrum out;
  out.grid = grid;
  out.values.resize(grid.size);
  const Real scale = 1.0 / (src.mass * kTwoPi);
  for (int iter = 0; iter < 60; ++iter) {
    for (Eigen::Index k = 0; k < grid.size; ++k)
      out.values[k] = width * scale * interpolate(spec.values, spec.omega, center + width * grid[k]) * kTwoPi;
    const Moments m = moments(out.values, grid);
    require(m.mass > 0.0, "spectrum has no mass inside the standardized window");
    const Real shift = m.mean;
    const Real stretch = std::sqrt(m.variance);
    center += width * shift;
    width *= stretch;
    if (std::abs(shift) < 1e-15 && std::abs(stretch - 1.0) < 1e-15) break;
  }
  for (Eigen::Index k = 0; k < grid.size; ++k)
    out.values[k] = width * scale * interpolate(spec.values, spec.omega, center + width * grid[k]) * kTwoPi;
  out.values /= trapezoid(out.values, grid.step) / kTwoPi;

  out.provenance.center = center;
  out.provenance.bandwidth = width;
  out.provenance.mass = src.mass;
  if (spec.n_spins > 0) out.provenance.sum_rule_ratio = src.mass / (0.25 * spec.n_spins);
  return out;
}

NormalizedSpectrum normalize_mass(const SpectralDensity& spec) {
  require(spec.values.size() == spec.omega.size && spec.omega.size >= 2, "spectrum and grid size differ");
  detail::check_nonnegative(spec.values, "spectrum");
  const Real mass = spec.mass();
  require(mass > 0.0, "cannot normalize a spectrum with zero mass");
  NormalizedSpectrum out;
  out.grid = spec.omega;
  out.values = spec.values / mass;
  out.provenance.center = 0.0;
  out.provenance.bandwidth = 1.0;
  out.provenance.mass = mass;
  out.provenance.standardized = false;
  if (spec.n_spins > 0) out.provenance.sum_rule_ratio = mass / (0.25 * spec.n_spins);
  return out;
}

SpectralDensity clip_negative(SpectralDensity spec) {
  spec.values = spec.values.cwiseMax(0.0);
  return spec;
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::Hellinger: return "hellinger";
    case Metric::Euclidean: return "euclidean";
    case Metric::JensenShannon: return "jensen-shannon";
    case Metric::TotalVariation: return "total-variation";
  }
  return "?";
}

Metric parse_metric(const std::string& name) {
  if (name == "hellinger") return Metric::Hellinger;
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "jensen-shannon" || name == "js") return Metric::JensenShannon;
  if (name == "total-variation" || name == "tv") return Metric::TotalVariation;
  throw ValidationError("unknown metric '" + name + "'");
}

Real bhattacharyya(const NormalizedSpectrum& p, const NormalizedSpectrum& q) {
  check_shared(p, q);
  return bhattacharyya(p.values, q.values, p.grid.step);
}
Real hellinger(const NormalizedSpectrum& p, const NormalizedSpectrum& q) {
  check_shared(p, q);
  return hellinger(p.values, q.values, p.grid.step);
}
Real euclidean(const NormalizedSpectrum& p, const NormalizedSpectrum& q) {
  check_shared(p, q);
  return euclidean(p.values, q.values, p.grid.step);
}
Real total_variation(const NormalizedSpectrum& p, const NormalizedSpectrum& q) {
  check_shared(p, q);
  return total_variation(p.values, q.values, p.grid.step);
}
Real jensen_shannon_divergence(const NormalizedSpectrum& p, const NormalizedSpectrum& q) {
  check_shared(p, q);
  return jensen_shannon_divergence(p.values, q.values, p.grid.step);
}
Real jensen_shannon(const NormalizedSpectrum& p, const NormalizedSpectrum& q) {
  return std::sqrt(jensen_shannon_divergence(p, q));
}

Real distance(const NormalizedSpectrum& p, const NormalizedSpectrum& q, Metric metric) {
  switch (metric) {
    case Metric::Hellinger: return hellinger(p, q);
    case Metric::Euclidean: return euclidean(p, q);
    case Metric::JensenShannon: return jensen_shannon(p, q);
    case Metric::TotalVariation: return total_variation(p, q);
  }
  return 0.0;
}

}  // namespace qabc
