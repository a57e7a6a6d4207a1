#pragma once

// Synthetic 4-spin molecule dataset built from four structural archetypes:
//   1  methyl-methine (CH3-CH): three equivalent shifts plus one, 3:1 intensity
//   2  two pairs of neighboring methine protons: two shift pairs, large
//      cross-pair coupling between partners
//   3  two neighboring methylene groups (CH2-CH2, A2B2): every cross-group
//      coupling equal, so each group shows a triplet
//   4  four inequivalent protons with dense couplings
// Shifts are centered (mean zero) since a common offset only translates each
// magnetization branch.

#include "qabc/parallel.hpp"
#include "qabc/spin_core.hpp"

#include <array>
#include <optional>

namespace qabc {

struct MoleculeRecord {
  std::string name;
  std::optional<std::string> external_id;
  std::optional<int> label;  // archetype / cluster, 0-based
  SpinParams params;

  bool operator==(const MoleculeRecord&) const = default;
};

using Dataset = std::vector<MoleculeRecord>;

/// Names unique, payloads valid.
void validate_dataset(const Dataset& data);

struct FixtureOptions {
  std::uint64_t seed = 0;
  std::array<int, 4> counts{18, 16, 17, 18};
  /// Linewidth relative to the stick width: gamma = kappa * rms transition frequency.
  Real kappa = 0.01;
};

Dataset generate_fixtures(const FixtureOptions& opts = {});

/// One archetype instance (archetype in 0..3). Draws from `rng`.
SpinParams archetype_instance(int archetype, Rng& rng, Real kappa);

/// gamma = kappa * stick width of the current parameters.
SpinParams with_relative_gamma(SpinParams p, Real kappa);

/// Shifts and couplings drawn entry-wise from N(0, 1) Hz, gamma relative.
SpinParams random_normal_instance(int n_spins, Rng& rng, Real kappa);

}  // namespace qabc
