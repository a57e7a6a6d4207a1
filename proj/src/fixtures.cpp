#include "qabc/fixtures.hpp"

#include <set>

namespace qabc {

namespace {

Real uniform(Rng& rng, Real lo, Real hi) { return std::uniform_real_distribution<Real>(lo, hi)(rng); }

void couple(SpinParams& p, int i, int j, Real value) {
  p.couplings(i, j) = value;
  p.couplings(j, i) = value;
}

SpinParams blank(int n) {
  SpinParams p;
  p.n_spins = n;
  p.shifts = VectorXd::Zero(n);
  p.couplings = MatrixXd::Zero(n, n);
  return p;
}

constexpr const char* kArchetypeNames[] = {"methyl-methine", "methine-pairs", "methylene-pairs", "inequivalent"};

}  // namespace

void validate_dataset(const Dataset& data) {
  std::set<std::string> names;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& r = data[k];
    require(!r.name.empty(), "record " + std::to_string(k) + ": empty name");
    require(names.insert(r.name).second, "record " + std::to_string(k) + ": duplicate name '" + r.name + "'");
    try {
      r.params.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("record '" + r.name + "': " + e.what());
    }
  }
}

SpinParams with_relative_gamma(SpinParams p, Real kappa) {
  require(kappa > 0.0, "kappa must be positive");
  p.gamma = 1.0;
  const Real width = transitions(solve(p)).stick_width();
  require(width > 0.0, "stick width is zero; relative linewidth undefined");
  p.gamma = kappa * width;
  return p;
}

SpinParams archetype_instance(int archetype, Rng& rng, Real kappa) {
  SpinParams p = blank(4);
  const Real delta = uniform(rng, 300.0, 500.0);
  switch (archetype) {
    case 0: {
      for (int i = 0; i < 3; ++i) p.shifts[i] = -0.25 * delta;
      p.shifts[3] = 0.75 * delta;
      const Real j = uniform(rng, 6.5, 7.5);
      for (int i = 0; i < 3; ++i) couple(p, i, 3, j);
      break;
    }
    case 1: {
      p.shifts << -0.5 * delta, -0.5 * delta, 0.5 * delta, 0.5 * delta;
      const Real vicinal = uniform(rng, 12.0, 14.0);
      const Real cross = uniform(rng, 0.5, 1.5);
      const Real within = uniform(rng, 1.0, 2.0);
      couple(p, 0, 2, vicinal);
      couple(p, 1, 3, vicinal);
      couple(p, 0, 3, cross);
      couple(p, 1, 2, cross);
      couple(p, 0, 1, within);
      couple(p, 2, 3, within);
      break;
    }
    case 2: {
      p.shifts << -0.5 * delta, -0.5 * delta, 0.5 * delta, 0.5 * delta;
      const Real vicinal = uniform(rng, 6.5, 7.5);
      const Real geminal = uniform(rng, -14.0, -12.0);
      for (int i = 0; i < 2; ++i)
        for (int j = 2; j < 4; ++j) couple(p, i, j, vicinal);
      couple(p, 0, 1, geminal);
      couple(p, 2, 3, geminal);
      break;
    }
    case 3: {
      for (int i = 0; i < 4; ++i) p.shifts[i] = (0.5 * i - 0.75 + uniform(rng, -0.05, 0.05)) * delta;
      p.shifts.array() -= p.shifts.mean();
      for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) couple(p, i, j, uniform(rng, 2.0, 9.0));
      break;
    }
    default: throw ValidationError("archetype must be in 0..3");
  }
  return with_relative_gamma(p, kappa);
}

SpinParams random_normal_instance(int n_spins, Rng& rng, Real kappa) {
  std::normal_distribution<Real> normal;
  SpinParams p = blank(n_spins);
  for (int i = 0; i < n_spins; ++i) p.shifts[i] = normal(rng);
  for (int i = 0; i < n_spins; ++i)
    for (int j = i + 1; j < n_spins; ++j) couple(p, i, j, normal(rng));
  return with_relative_gamma(p, kappa);
}

Dataset generate_fixtures(const FixtureOptions& opts) {
  Dataset out;
  for (int a = 0; a < 4; ++a) {
    require(opts.counts[a] >= 1, "fixture counts must be >= 1");
    Rng rng(stream_seed(opts.seed, static_cast<std::uint64_t>(a)));
    for (int k = 0; k < opts.counts[a]; ++k) {
      MoleculeRecord r;
      r.name = std::string(kArchetypeNames[a]) + "-" + std::to_string(k);
      r.label = a;
      r.params = archetype_instance(a, rng, opts.kappa);
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace qabc
