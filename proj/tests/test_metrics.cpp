#include "doctest.h"
#include "support.hpp"

#include "qabc/metrics.hpp"

using namespace qabc;

namespace {

// A(w) -> A((w - w0) / c) / c on the stretched grid: same mass, moved and widened.
SpectralDensity shifted_scaled(SpectralDensity s, Real shift_hz, Real scale) {
  s.omega.start = scale * s.omega.start + kTwoPi * shift_hz;
  s.omega.step *= scale;
  s.values /= scale;
  return s;
}

// int dw/2pi sqrt(L1 L2) for unit-mass Lorentzians at -d/2 and +d/2, by
// Simpson's rule after w = gamma tan(u).
Real bhattacharyya_oracle(Real gamma, Real d) {
  const int n = 400000;
  const Real a = -std::numbers::pi / 2, b = std::numbers::pi / 2, h = (b - a) / n;
  const auto f = [&](Real u) {
    if (std::abs(std::abs(u) - std::numbers::pi / 2) < 1e-15) return 0.0;
    const Real w = gamma * std::tan(u);
    const Real l1 = 2 * gamma / (gamma * gamma + (w + d / 2) * (w + d / 2));
    const Real l2 = 2 * gamma / (gamma * gamma + (w - d / 2) * (w - d / 2));
    return std::sqrt(l1 * l2) * gamma / std::pow(std::cos(u), 2);
  };
  Real s = f(a) + f(b);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0 / kTwoPi;
}

}  // namespace

TEST_CASE("normalization is invariant to shift and scale") {
  Rng rng(4);
  const SpinParams p = test::random_params(4, rng, 40.0, 3.0);
  const SpectralDensity s = simulate_spectrum(p);
  const NormalizedSpectrum a = normalize(s);
  const NormalizedSpectrum b = normalize(shifted_scaled(s, 100.0, 3.0));
  CHECK(shifted_scaled(s, 100.0, 3.0).mass() == doctest::Approx(s.mass()).epsilon(1e-12));
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-6 * a.values.maxCoeff());
  CHECK(b.provenance.bandwidth == doctest::Approx(3.0 * a.provenance.bandwidth).epsilon(1e-6));
  CHECK(b.provenance.center == doctest::Approx(3.0 * a.provenance.center + kTwoPi * 100.0).epsilon(1e-6));
}

TEST_CASE("normalization is idempotent") {
  Rng rng(5);
  const NormalizedSpectrum a = normalize(simulate_spectrum(test::random_params(4, rng, 40.0, 3.0)));
  const NormalizedSpectrum b = normalize(a.as_density());
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(b.provenance.center == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(b.provenance.bandwidth == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("normalized moments and provenance") {
  Rng rng(6);
  const SpectralDensity s = simulate_spectrum(test::random_params(4, rng, 40.0, 3.0), GridOptions{4000.0, 0.2});
  const NormalizedSpectrum n = normalize(s);
  const VectorXd x = n.grid.points();
  CHECK(trapezoid(n.values, n.grid.step) / kTwoPi == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(trapezoid(n.values.cwiseProduct(x), n.grid.step) / kTwoPi) < 1e-9);
  CHECK(trapezoid(n.values.cwiseProduct(x.cwiseAbs2()), n.grid.step) / kTwoPi == doctest::Approx(1.0).epsilon(1e-6));
  REQUIRE(n.provenance.sum_rule_ratio.has_value());
  CHECK(*n.provenance.sum_rule_ratio == doctest::Approx(1.0).epsilon(1e-3));
  const NormalizedSpectrum m = normalize_mass(s);
  CHECK_FALSE(m.provenance.standardized);
  CHECK(m.grid == s.omega);
  CHECK(m.provenance.mass == doctest::Approx(s.mass()).epsilon(1e-15));
}

TEST_CASE("normalization rejects bad input") {
  SpectralDensity s;
  s.omega = UniformGrid{0.0, 1.0, 10};
  s.values = VectorXd::Zero(10);
  CHECK_THROWS_AS(normalize(s), ValidationError);
  s.values[3] = -1.0;
  CHECK_THROWS_AS(normalize_mass(s), ValidationError);
  CHECK(clip_negative(s).values.minCoeff() == 0.0);
}

TEST_CASE("distances of identical spectra vanish") {
  Rng rng(7);
  const NormalizedSpectrum a = normalize(simulate_spectrum(test::random_params(4, rng)));
  for (Metric m : {Metric::Hellinger, Metric::Euclidean, Metric::JensenShannon, Metric::TotalVariation})
    CHECK(distance(a, a, m) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(bhattacharyya(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("disjoint supports") {
  const UniformGrid g{0.0, 0.01, 1001};
  NormalizedSpectrum p, q;
  p.grid = q.grid = g;
  p.values = q.values = VectorXd::Zero(g.size);
  p.values.segment(10, 300).setOnes();
  q.values.segment(600, 300).setOnes();
  p.values /= trapezoid(p.values, g.step) / kTwoPi;
  q.values /= trapezoid(q.values, g.step) / kTwoPi;
  CHECK(hellinger(p, q) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(total_variation(p, q) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(jensen_shannon_divergence(p, q) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("Hellinger of two Lorentzians against quadrature") {
  const Real gamma = 1.0;
  const UniformGrid g = make_grid(-2e4, 2e4, 0.02);
  const NormalizedSpectrum p = test::lorentzians(g, {-gamma}, gamma);
  const NormalizedSpectrum q = test::lorentzians(g, {gamma}, gamma);
  const Real bc = bhattacharyya_oracle(gamma, 2 * gamma);
  CHECK(bc > 0.5);
  CHECK(bc < 1.0);
  CHECK(hellinger(p, q) == doctest::Approx(std::sqrt(1.0 - bc)).epsilon(1e-3));
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(8);
  const UniformGrid g{0.0, 0.05, 240};
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = test::boxes(g, rng), b = test::boxes(g, rng), c = test::boxes(g, rng);
    for (Metric m : {Metric::Hellinger, Metric::TotalVariation, Metric::JensenShannon, Metric::Euclidean}) {
      CHECK(distance(a, b, m) == doctest::Approx(distance(b, a, m)).epsilon(1e-14));
      CHECK(distance(a, c, m) <= distance(a, b, m) + distance(b, c, m) + 1e-12);
    }
    CHECK(hellinger(a, b) <= 1.0 + 1e-12);
    CHECK(jensen_shannon_divergence(a, b) <= std::log(2.0) + 1e-12);
    CHECK(std::pow(hellinger(a, b), 2) == doctest::Approx(1.0 - bhattacharyya(a, b)).epsilon(1e-9));
    CHECK(total_variation(a, b) <= 1.0 + 1e-12);
    // Le Cam: H^2 <= TV <= sqrt(2) H.
    CHECK(std::pow(hellinger(a, b), 2) <= total_variation(a, b) + 1e-12);
    CHECK(total_variation(a, b) <= std::sqrt(2.0) * hellinger(a, b) + 1e-12);
  }
}

TEST_CASE("metric names") {
  for (Metric m : {Metric::Hellinger, Metric::Euclidean, Metric::JensenShannon, Metric::TotalVariation})
    CHECK(parse_metric(metric_name(m)) == m);
  CHECK_THROWS_AS(parse_metric("cosine"), ValidationError);
}

TEST_CASE("distances require a shared grid") {
  const UniformGrid g{0.0, 0.05, 240};
  Rng rng(1);
  auto a = test::boxes(g, rng);
  auto b = a;
  b.grid.step = 0.06;
  CHECK_THROWS_AS(hellinger(a, b), ValidationError);
}
