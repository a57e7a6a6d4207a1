#pragma once

// File formats.
//
// Molecules, datasets, run configs and manifests are JSON. Frequencies are in
// Hz, gamma in s^-1.
//
// Spectra, responses, matrices and convergence reports are whitespace
// delimited text with '#' header lines. Reals are printed with %.17g, so a
// save/load round trip is bit-exact. Spectrum files carry the angular grid
// (omega0_rad_s, domega_rad_s) in the header and a freq_hz column for humans.

#include "qabc/clustering.hpp"
#include "qabc/fisher.hpp"
#include "qabc/fixtures.hpp"
#include "qabc/inference.hpp"

#include "json.hpp"

#include <filesystem>

namespace qabc {

using Json = nlohmann::ordered_json;

// JSON encoding. Parsers throw ValidationError with a field path.
Json to_json(const SpinParams& p);
SpinParams spin_params_from_json(const Json& j, const std::string& path = "molecule");
Json to_json(const MoleculeRecord& r);
MoleculeRecord molecule_from_json(const Json& j, const std::string& path = "molecule");
Json to_json(const Dataset& d);
Dataset dataset_from_json(const Json& j);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& data);
/// A file holding either one molecule object or a dataset; `name` selects
/// from a dataset (first record if empty).
MoleculeRecord load_molecule(const std::filesystem::path& path, const std::string& name = "");

void save_spectrum(const std::filesystem::path& path, const SpectralDensity& spec);
SpectralDensity load_spectrum(const std::filesystem::path& path);
std::string format_spectrum(const SpectralDensity& spec);
SpectralDensity parse_spectrum(const std::string& text, const std::string& source = "spectrum");

void save_report(const std::filesystem::path& path, const ConvergenceReport& report);
ConvergenceReport load_report(const std::filesystem::path& path);
std::string format_report(const ConvergenceReport& report);
ConvergenceReport parse_report(const std::string& text, const std::string& source = "report");

std::string format_response(const ResponseSeries& r);
std::string format_estimate(const ResponseEstimate& e, const std::optional<ResponseSeries>& exact = std::nullopt);
std::string format_matrix(const MatrixXd& m, const std::string& header);

/// %.17g
std::string format_real(Real x);

/// Write to a temporary sibling, then rename over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

struct RunConfig {
  std::uint64_t seed = 0;

  SimulatorMode mode = SimulatorMode::Exact;
  std::int64_t shots_per_time = 1000;
  ShotAllocation allocation = ShotAllocation::Uniform;
  SamplingScheme scheme = SamplingScheme::importance();
  Real t_max_gamma = 8.0;

  GridOptions grid;
  Metric metric = Metric::Hellinger;

  TsneOptions tsne;  // tsne.seed follows `seed`
  std::optional<Real> eps;
  int min_pts = 4;

  int samples = 64;
  int iterations = 20;
  Real jitter = 1e-8;
  Real max_shift = 1e4;
  Real max_coupling = 100.0;
  int floor_repeats = 8;

  Real shift_step = 1e-3;
  Real coupling_step = 1e-3;

  Real kappa = 0.01;
  std::array<int, 4> counts{18, 16, 17, 18};

  /// Throws ValidationError naming the field.
  void validate() const;

  SimulatorOptions simulator() const;
  InferenceOptions inference() const;
  FisherOptions fisher() const;
  FixtureOptions fixtures() const;
};

Json to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);

std::string mode_name(SimulatorMode m);
SimulatorMode parse_mode(const std::string& name);
std::string allocation_name(ShotAllocation a);
ShotAllocation parse_allocation(const std::string& name);

}  // namespace qabc
