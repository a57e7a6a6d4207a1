#include "doctest.h"
#include "support.hpp"

#include "qabc/fisher.hpp"
#include "qabc/fixtures.hpp"

using namespace qabc;

TEST_CASE("single spin location information") {
  // Well-separated pair of unit-mass Lorentzians in omega: each is a Cauchy
  // location family with information 1 / (2 gamma^2) per rad/s, (2 pi)^2 times that per Hz.
  SpinParams p;
  p.n_spins = 1;
  p.shifts = VectorXd::Constant(1, 50.0);
  p.couplings = MatrixXd::Zero(1, 1);
  p.gamma = 2.0;
  FisherOptions o;
  o.grid_options.margin = 2000.0;
  const FisherMatrix f = fim(p, o);
  CHECK(f.values(0, 0) == doctest::Approx(kTwoPi * kTwoPi / (2.0 * 4.0)).epsilon(2e-3));
  CHECK(f.flagged.empty());
}

TEST_CASE("uniform shift leaves couplings unidentifiable") {
  Rng rng(5);
  const SpinParams p = with_relative_gamma(test::uniform_shift(4, 30.0, test::random_couplings(4, rng)), 0.1);
  const FisherMatrix f = fim(p);
  CHECK(f.values.bottomRows(6).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(f.values.rightCols(6).cwiseAbs().maxCoeff() < 1e-6);
  const JeffreysDensity j = jeffreys_density(f);
  CHECK(j.density == 0.0);
  CHECK(j.rank < j.dimension);
}

TEST_CASE("FIM is symmetric positive semidefinite") {
  Rng rng(8);
  const FisherMatrix f = fim(archetype_instance(3, rng, 0.1));
  CHECK((f.values - f.values.transpose()).norm() == 0.0);
  CHECK(sloppiness_spectrum(f).minCoeff() > -1e-12 * sloppiness_spectrum(f)[0]);
  const VectorXd ev = sloppiness_spectrum(f);
  for (Eigen::Index k = 1; k < ev.size(); ++k) CHECK(ev[k] <= ev[k - 1]);
}

TEST_CASE("Jeffreys density of a diagonal toy") {
  FisherMatrix f;
  f.values = Eigen::Vector2d(1e-4, 1e-6).asDiagonal();
  const JeffreysDensity j = jeffreys_density(f);
  CHECK(j.density == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(j.rank == 2);
  f.values(1, 1) = 0.0;
  CHECK(jeffreys_density(f).density == 0.0);
}

TEST_CASE("archetypes are sloppy, random systems are not") {
  Rng rng(stream_seed(3, 1));
  for (int a = 0; a < 4; ++a) {
    const VectorXd ev = sloppiness_spectrum(fim(archetype_instance(a, rng, 0.1)));
    CHECK(ev[0] >= 1e-7);
    CHECK(ev[0] <= 1e-3);
    CHECK(ev[0] >= 1e2 * std::max(ev[4], 0.0));
  }
  Rng r2(stream_seed(3, 2));
  const FisherMatrix random = fim(random_normal_instance(4, r2, 0.1));
  CHECK(sloppiness_spectrum(random)[0] > 1e-2);
  Rng r3(stream_seed(3, 3));
  const Real physical = jeffreys_density(fim(archetype_instance(3, r3, 0.1))).density;
  CHECK(jeffreys_density(random).density > 1e6 * physical);
}

TEST_CASE("curvature flag on a coarse step") {
  SpinParams p;
  p.n_spins = 1;
  p.shifts = VectorXd::Constant(1, 50.0);
  p.couplings = MatrixXd::Zero(1, 1);
  p.gamma = 2.0;
  FisherOptions o;
  o.shift_step = 0.5;
  const FisherMatrix f = fim(p, o);
  CHECK(f.flagged == std::vector<int>{0});
  CHECK(f.warnings.size() == 1);
}

TEST_CASE("Hellinger gradient bound") {
  Rng rng(stream_seed(9, 0));
  for (int trial = 0; trial < 4; ++trial) {
    const SpinParams p = archetype_instance(trial, rng, 0.1);
    const UniformGrid g = default_omega_grid(transitions(solve(p)), p.gamma);
    SpinParams q = p;
    q.shifts[0] += 3.0 * p.gamma / kTwoPi;
    const NormalizedSpectrum target = normalize_mass(spectrum_exact(transitions(solve(q)), p.gamma, g));
    for (const auto& b : hellinger_gradient_bound(p, target))
      CHECK(std::abs(b.gradient) <= b.sqrt_fisher + 1e-8 + 1e-2 * b.sqrt_fisher);
    const NormalizedSpectrum self = normalize_mass(spectrum_exact(transitions(solve(p)), p.gamma, g));
    for (const auto& b : hellinger_gradient_bound(p, self)) CHECK(std::abs(b.gradient) < 1e-6 * (b.sqrt_fisher + 1e-12) + 1e-12);
  }
}

TEST_CASE("halving the step barely moves the FIM") {
  Rng rng(stream_seed(10, 0));
  for (int a = 0; a < 4; ++a) {
    const SpinParams p = archetype_instance(a, rng, 0.1);
    const FisherMatrix f = fim(p);
    FisherOptions half;
    half.shift_step = 0.5 * f.steps[0];
    half.coupling_step = 0.5 * f.steps[f.steps.size() - 1];
    const FisherMatrix g = fim(p, half);
    // Relative to the row and column scale; null directions sit at rounding level.
    for (Eigen::Index i = 0; i < f.values.rows(); ++i)
      for (Eigen::Index j = 0; j < f.values.cols(); ++j) {
        const Real scale = std::sqrt(f.values(i, i) * f.values(j, j));
        CHECK(std::abs(g.values(i, j) - f.values(i, j)) < 0.05 * scale + 1e-8 * f.values.diagonal().maxCoeff());
      }
  }
}

TEST_CASE("uniform shift null vectors") {
  Rng rng(11);
  const SpinParams p = with_relative_gamma(test::uniform_shift(4, 30.0, test::random_couplings(4, rng)), 0.1);
  const FisherMatrix f = fim(p);
  for (int k = 4; k < 10; ++k) {
    VectorXd v = VectorXd::Zero(10);
    v[k] = 1.0;
    CHECK(v.dot(f.values * v) < 1e-6);
  }
}
