// qabc command-line driver. Every run writes a JSON manifest holding the
// argument list and the resolved RunConfig; `qabc replay <manifest>` re-runs it.

#include "qabc/io.hpp"
#include "qabc/parallel.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>

using namespace qabc;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string manifest_path;
  std::optional<std::string> mode, scheme, allocation, metric;
  std::optional<Real> beta;
  std::optional<std::int64_t> shots;
};

void add_common(CLI::App* cmd, Common& c, bool simulator_flags = true) {
  cmd->fallthrough();
  cmd->add_option("--config", c.config_path, "RunConfig JSON file");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("--manifest", c.manifest_path, "Manifest path (default: <out>.manifest.json)");
  if (!simulator_flags) return;
  cmd->add_option("--mode", c.mode, "exact | shots");
  cmd->add_option("--shots", c.shots, "Shots per time point");
  cmd->add_option("--scheme", c.scheme, "uniform | thermal | importance | abs-magnetization");
  cmd->add_option("--beta", c.beta, "Inverse temperature for thermal sampling");
  cmd->add_option("--allocation", c.allocation, "uniform | early-weighted");
  cmd->add_option("--metric", c.metric, "hellinger | euclidean | jensen-shannon | total-variation");
}

RunConfig resolve(const Common& c, const std::optional<RunConfig>& forced) {
  if (forced) return *forced;
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_run_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.mode) cfg.mode = parse_mode(*c.mode);
  if (c.shots) cfg.shots_per_time = *c.shots;
  if (c.scheme) cfg.scheme = SamplingScheme::parse(*c.scheme, c.beta.value_or(cfg.scheme.beta > 0 ? cfg.scheme.beta : 0.1));
  else if (c.beta) cfg.scheme.beta = *c.beta;
  if (c.allocation) cfg.allocation = parse_allocation(*c.allocation);
  if (c.metric) cfg.metric = parse_metric(*c.metric);
  cfg.tsne.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void write_manifest(const Common& c, const std::string& command, const std::vector<std::string>& argv,
                    const RunConfig& cfg, const std::vector<std::string>& outputs) {
  Json m;
  m["tool"] = "qabc";
  m["command"] = command;
  m["argv"] = argv;
  m["seed"] = cfg.seed;
  m["config"] = to_json(cfg);
  m["outputs"] = outputs;
  const fs::path path = c.manifest_path.empty() ? fs::path(outputs.front() + ".manifest.json") : fs::path(c.manifest_path);
  write_atomic(path, m.dump(2) + "\n");
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Exact spectrum on the default grid, read from QABC_CACHE_DIR when present.
SpectralDensity exact_spectrum(const SpinParams& p, const GridOptions& grid) {
  const char* dir = std::getenv("QABC_CACHE_DIR");
  std::string key;
  if (dir && *dir) {
    const Json j = {{"params", to_json(p)}, {"margin", grid.margin}, {"step_fraction", grid.step_fraction}};
    std::ostringstream name;
    name << std::hex << fnv1a(j.dump()) << ".spectrum";
    key = (fs::path(dir) / name.str()).string();
    if (fs::exists(key)) return load_spectrum(key);
  }
  SpectralDensity s = simulate_spectrum(p, grid);
  if (!key.empty()) save_spectrum(key, s);
  return s;
}

SpectralDensity molecule_spectrum(const SpinParams& p, const RunConfig& cfg, std::uint64_t stream) {
  if (cfg.mode == SimulatorMode::Exact) return exact_spectrum(p, cfg.grid);
  const UniformGrid grid = default_omega_grid(transitions(solve(p)), p.gamma, cfg.grid);
  ShotSpectrumOptions so;
  so.scheme = cfg.scheme;
  so.shots_per_time = cfg.shots_per_time;
  so.t_max_gamma = cfg.t_max_gamma;
  so.allocation = cfg.allocation;
  so.seed = stream_seed(cfg.seed, stream);
  return clip_negative(sampled_spectrum(p, grid, so));
}

std::vector<NormalizedSpectrum> dataset_spectra(const Dataset& data, const RunConfig& cfg) {
  std::vector<NormalizedSpectrum> out(data.size());
  parallel_for(data.size(), [&](std::size_t k) { out[k] = normalize(molecule_spectrum(data[k].params, cfg, k)); });
  return out;
}

std::string names_header(const Dataset& data) {
  std::string s = "names:";
  for (const auto& r : data) s += " " + r.name;
  return s;
}

int run(const std::vector<std::string>& argv, const std::optional<RunConfig>& forced);

int replay(const std::string& path) {
  const Json m = Json::parse(read_text(path));
  if (!m.contains("argv") || !m.contains("config")) throw ValidationError(path + ": not a qabc manifest");
  const auto argv = m["argv"].get<std::vector<std::string>>();
  return run(argv, run_config_from_json(m["config"]));
}

int run(const std::vector<std::string>& argv, const std::optional<RunConfig>& forced) {
  CLI::App app{"Quantum-sampled NMR spectra: simulation, sampling, clustering, Fisher information, inference"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  bool error_json = false;
  app.add_flag("--error-json", error_json, "Print errors as JSON on stdout");

  Common c;
  std::string out, molecule, name, dataset, response_out, report_out, target, target_spectrum, manifest_in;
  int n_spins = 4, points = 9, decoys = 0, label = -1;
  Real gamma = 0.0, decoy_shift_sd = 20.0, decoy_coupling_sd = 2.0, time_span_gamma = 2.0;
  bool nearest = false;

  auto* fixtures = app.add_subcommand("fixtures", "Generate the 4-archetype synthetic dataset");
  add_common(fixtures, c, false);
  fixtures->add_option("--out", out, "Dataset JSON")->required();

  auto* simulate = app.add_subcommand("simulate", "Spectrum (and response) of one molecule");
  add_common(simulate, c);
  simulate->add_option("--molecule", molecule, "Molecule or dataset JSON")->required();
  simulate->add_option("--name", name, "Record name when --molecule is a dataset");
  simulate->add_option("--out", out, "Spectrum file")->required();
  simulate->add_option("--response", response_out, "Also write the exact response S(t)");

  auto* sample = app.add_subcommand("sample", "Shot-mode response estimate with variance report");
  add_common(sample, c);
  sample->add_option("--molecule", molecule, "Molecule or dataset JSON")->required();
  sample->add_option("--name", name, "Record name when --molecule is a dataset");
  sample->add_option("--out", out, "Response estimate file")->required();
  sample->add_option("--report", report_out, "Variance table (empirical vs enumeration)");

  auto* metrics = app.add_subcommand("metrics", "Pairwise distance matrix of a dataset");
  add_common(metrics, c);
  metrics->add_option("--dataset", dataset, "Dataset JSON")->required();
  metrics->add_option("--out", out, "Matrix file")->required();

  auto* cluster = app.add_subcommand("cluster", "t-SNE embedding and DBSCAN labels");
  add_common(cluster, c);
  cluster->add_option("--dataset", dataset, "Dataset JSON")->required();
  cluster->add_option("--out", out, "Embedding file (x y label name)")->required();
  std::optional<Real> eps_flag, perplexity_flag;
  std::optional<int> min_pts_flag;
  cluster->add_option("--eps", eps_flag, "DBSCAN eps (default: single-linkage gap)");
  cluster->add_option("--min-pts", min_pts_flag, "DBSCAN min_pts");
  cluster->add_option("--perplexity", perplexity_flag, "t-SNE perplexity");
  bool compare_metrics = false;
  cluster->add_flag("--compare-metrics", compare_metrics, "Also report the t-SNE KL loss under each metric");

  auto* classify_cmd = app.add_subcommand("classify", "Assign a molecule to a labeled cluster");
  add_common(classify_cmd, c);
  classify_cmd->add_option("--dataset", dataset, "Labeled dataset JSON")->required();
  classify_cmd->add_option("--molecule", molecule, "Query molecule or dataset JSON")->required();
  classify_cmd->add_option("--name", name, "Record name when --molecule is a dataset");
  classify_cmd->add_flag("--nearest", nearest, "Score clusters by their closest member");
  classify_cmd->add_option("--out", out, "Score table")->required();

  auto* fim_cmd = app.add_subcommand("fim", "Fisher information, sloppiness spectrum, Jeffreys density");
  add_common(fim_cmd, c, false);
  fim_cmd->add_option("--molecule", molecule, "Molecule or dataset JSON")->required();
  fim_cmd->add_option("--name", name, "Record name when --molecule is a dataset");
  fim_cmd->add_option("--out", out, "FIM report")->required();

  auto* infer = app.add_subcommand("infer", "Iterative Bayesian reweighting against a target");
  add_common(infer, c);
  infer->add_option("--target", target, "Target molecule or dataset JSON");
  infer->add_option("--name", name, "Target record name when --target is a dataset");
  infer->add_option("--target-spectrum", target_spectrum, "Target spectrum file (needs --gamma and --n-spins)");
  infer->add_option("--gamma", gamma, "Shared linewidth when the target is a spectrum");
  infer->add_option("--n-spins", n_spins, "Spin count when the target is a spectrum");
  infer->add_option("--prior", dataset, "Dataset JSON whose records form the atomic prior");
  infer->add_option("--label", label, "Use only prior records with this label");
  infer->add_option("--decoys", decoys, "Atomic prior of the target plus this many Gaussian decoys");
  infer->add_option("--decoy-shift-sd", decoy_shift_sd, "Decoy shift spread, Hz");
  infer->add_option("--decoy-coupling-sd", decoy_coupling_sd, "Decoy coupling spread, Hz");
  std::optional<int> iterations_flag;
  infer->add_option("--iterations", iterations_flag, "Iterations");
  infer->add_option("--out", out, "Convergence report")->required();

  auto* variance = app.add_subcommand("variance-study", "Estimand variance of each sampling scheme vs time");
  add_common(variance, c, false);
  variance->add_option("--molecule", molecule, "Molecule JSON (default: random N(0,1) Hz molecule)");
  variance->add_option("--n-spins", n_spins, "Spins of the random molecule");
  variance->add_option("--points", points, "Time points");
  variance->add_option("--span", time_span_gamma, "Time span in units of pi / stick width");
  std::optional<Real> beta_flag;
  variance->add_option("--beta", beta_flag, "Thermal beta (default 0.1)");
  variance->add_option("--out", out, "Table")->required();

  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest");
  replay_cmd->fallthrough();
  replay_cmd->add_option("manifest", manifest_in, "Manifest JSON")->required();

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw ValidationError(e.what());
  }
  (void)error_json;

  if (replay_cmd->parsed()) return replay(manifest_in);

  const RunConfig cfg = resolve(c, forced);
  std::vector<std::string> outputs{out};

  if (fixtures->parsed()) {
    const Dataset data = generate_fixtures(cfg.fixtures());
    save_dataset(out, data);
    std::cout << "wrote " << data.size() << " molecules to " << out << "\n";
  } else if (simulate->parsed()) {
    const MoleculeRecord r = load_molecule(molecule, name);
    const SpectralDensity s = molecule_spectrum(r.params, cfg, 0);
    save_spectrum(out, s);
    if (!response_out.empty()) {
      const TransitionList tl = transitions(solve(r.params));
      write_atomic(response_out, format_response(response_exact(tl, default_time_grid(tl, r.params.gamma, cfg.t_max_gamma))));
      outputs.push_back(response_out);
    }
    std::cout << r.name << ": mass " << format_real(s.mass()) << " (N/4 = " << 0.25 * r.params.n_spins << ")";
    if (s.values.minCoeff() >= 0.0 && s.values.squaredNorm() > 0.0) std::cout << ", IPR " << format_real(ipr(s));
    std::cout << "\n";
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
  } else if (sample->parsed()) {
    const MoleculeRecord r = load_molecule(molecule, name);
    const EigenSystem eig = solve(r.params);
    const TransitionList tl = transitions(eig);
    const UniformGrid times = default_time_grid(tl, r.params.gamma, cfg.t_max_gamma);
    ShotOptions so;
    so.seed = cfg.seed;
    const ResponseEstimate est =
        run_shots(eig, cfg.scheme, times, allocate_shots(times, cfg.shots_per_time, cfg.allocation, r.params.gamma), so);
    write_atomic(out, format_estimate(est, response_exact(tl, times)));
    if (!report_out.empty()) {
      require(r.params.n_spins <= 12, "variance report enumerates 4^N pairs; N <= 12");
      std::string table = "# qabc variance report\n# scheme= " + cfg.scheme.name() +
                          "\n# columns: t_s empirical_variance oracle_variance shots\n";
      for (Eigen::Index k = 0; k < times.size; ++k)
        table += format_real(times[k]) + " " + format_real(est.variance[k]) + " " +
                 format_real(variance_oracle(eig, cfg.scheme, times[k])) + " " +
                 std::to_string(est.shots[static_cast<std::size_t>(k)]) + "\n";
      write_atomic(report_out, table);
      outputs.push_back(report_out);
    }
    for (const auto& w : est.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << r.name << ": " << times.size << " time points, scheme " << cfg.scheme.name() << "\n";
  } else if (metrics->parsed()) {
    const Dataset data = load_dataset(dataset);
    const DistanceMatrix d = distance_matrix(dataset_spectra(data, cfg), cfg.metric);
    write_atomic(out, format_matrix(d.values, "qabc distance matrix\nmetric= " + metric_name(cfg.metric) + "\n" +
                                                  names_header(data)));
  } else if (cluster->parsed()) {
    RunConfig local = cfg;
    if (eps_flag) local.eps = *eps_flag;
    if (min_pts_flag) local.min_pts = *min_pts_flag;
    if (perplexity_flag) local.tsne.perplexity = *perplexity_flag;
    local.validate();
    const Dataset data = load_dataset(dataset);
    const DistanceMatrix d = distance_matrix(dataset_spectra(data, local), local.metric);
    const Embedding2D e = tsne(d, local.tsne);
    const Real eps = local.eps ? *local.eps : suggest_eps(e.coords);
    const ClusterLabels labels = dbscan(e.coords, eps, local.min_pts);
    std::string text = "# qabc embedding\n# metric= " + metric_name(local.metric) + "\n# perplexity= " +
                       format_real(e.perplexity) + "\n# kl= " + format_real(e.kl) + "\n# eps= " + format_real(eps) +
                       "\n# min_pts= " + std::to_string(local.min_pts) + "\n# clusters= " +
                       std::to_string(labels.clusters) + "\n";
    if (compare_metrics) {
      const auto spectra = dataset_spectra(data, local);
      for (Metric m : {Metric::Hellinger, Metric::Euclidean, Metric::JensenShannon}) {
        const Real kl = tsne(distance_matrix(spectra, m), local.tsne).kl;
        text += "# kl[" + metric_name(m) + "]= " + format_real(kl) + "\n";
        std::cout << "KL " << metric_name(m) << " " << format_real(kl) << "\n";
      }
    }
    text += "# columns: x y label name\n";
    for (std::size_t k = 0; k < data.size(); ++k)
      text += format_real(e.coords(static_cast<Eigen::Index>(k), 0)) + " " +
              format_real(e.coords(static_cast<Eigen::Index>(k), 1)) + " " + std::to_string(labels.labels[k]) + " " +
              data[k].name + "\n";
    write_atomic(out, text);
    std::cout << labels.clusters << " clusters, KL " << format_real(e.kl) << ", eps " << format_real(eps) << "\n";
    write_manifest(c, "cluster", argv, local, outputs);
    return 0;
  } else if (classify_cmd->parsed()) {
    const Dataset data = load_dataset(dataset);
    std::vector<int> labels;
    for (const auto& r : data) {
      require(r.label.has_value(), "dataset record '" + r.name + "' has no label");
      labels.push_back(*r.label);
    }
    const MoleculeRecord q = load_molecule(molecule, name);
    const auto members = dataset_spectra(data, cfg);
    const NormalizedSpectrum query = normalize(molecule_spectrum(q.params, cfg, data.size()));
    const Classification cl = nearest ? classify_nearest(query, members, labels, cfg.metric)
                                      : classify(query, members, labels, cfg.metric);
    std::string text = "# qabc classification\n# query= " + q.name + "\n# rule= " + (nearest ? "nearest" : "mean") +
                       "\n# metric= " + metric_name(cfg.metric) + "\n# label= " + std::to_string(cl.label) +
                       "\n# tie= " + (cl.tie ? "1" : "0") + "\n# columns: cluster score\n";
    for (std::size_t k = 0; k < cl.scores.size(); ++k) text += std::to_string(k) + " " + format_real(cl.scores[k]) + "\n";
    write_atomic(out, text);
    std::cout << q.name << " -> cluster " << cl.label << (cl.tie ? " (tie)" : "") << "\n";
  } else if (fim_cmd->parsed()) {
    const MoleculeRecord r = load_molecule(molecule, name);
    const FisherMatrix f = fim(r.params, cfg.fisher());
    const VectorXd ev = sloppiness_spectrum(f);
    const JeffreysDensity j = jeffreys_density(f);
    std::string header = "qabc fisher information\nmolecule= " + r.name + "\nrank= " + std::to_string(j.rank) + "\ndimension= " +
                         std::to_string(j.dimension) + "\njeffreys_density= " + format_real(j.density) + "\neigenvalues=";
    for (Eigen::Index k = 0; k < ev.size(); ++k) header += " " + format_real(ev[k]);
    header += "\nsteps_hz=";
    for (Eigen::Index k = 0; k < f.steps.size(); ++k) header += " " + format_real(f.steps[k]);
    for (const auto& w : f.warnings) header += "\nwarning: " + w;
    write_atomic(out, format_matrix(f.values, header));
    std::cout << r.name << ": leading eigenvalue " << format_real(ev[0]) << ", rank " << j.rank << "/" << j.dimension << "\n";
  } else if (infer->parsed()) {
    RunConfig local = cfg;
    if (iterations_flag) local.iterations = *iterations_flag;
    local.validate();
    NormalizedSpectrum tgt;
    std::optional<SpinParams> truth;
    if (!target.empty()) {
      truth = load_molecule(target, name).params;
      tgt = normalize_mass(molecule_spectrum(*truth, local, 0x7a49e7));
    } else {
      require(!target_spectrum.empty(), "infer needs --target or --target-spectrum");
      require(gamma > 0.0, "--gamma is required with --target-spectrum");
      tgt = normalize_mass(clip_negative(load_spectrum(target_spectrum)));
    }
    AtomicPrior prior;
    if (decoys > 0) {
      require(truth.has_value(), "--decoys needs --target");
      prior = decoy_prior(*truth, decoys + 1, decoy_shift_sd, decoy_coupling_sd, local.seed,
                          static_cast<int>(stream_seed(local.seed, 0x1d) % static_cast<std::uint64_t>(decoys + 1)));
    } else {
      require(!dataset.empty(), "infer needs --prior or --decoys");
      const Dataset data = load_dataset(dataset);
      prior.n_spins = truth ? truth->n_spins : n_spins;
      prior.gamma = truth ? truth->gamma : gamma;
      prior.source = dataset + (label >= 0 ? " label " + std::to_string(label) : "");
      for (const auto& r : data)
        if (label < 0 || r.label == label) {
          require(r.params.n_spins == prior.n_spins, "prior record '" + r.name + "' has a different spin count");
          prior.atoms.push_back(r.params.theta());
        }
    }
    InferenceOptions io = local.inference();
    const InferenceResult res = run_inference(prior, tgt, local.iterations, io, local.floor_repeats);
    save_report(out, res.report);
    for (const auto& w : res.state.warnings) std::cerr << "warning: " << w << "\n";
    if (!res.report.records.empty())
      std::cout << "final TV " << format_real(res.report.records.back().tv) << " after "
                << res.report.records.size() << " iterations\n";
    write_manifest(c, "infer", argv, local, outputs);
    return 0;
  } else if (variance->parsed()) {
    SpinParams p;
    if (!molecule.empty()) {
      p = load_molecule(molecule, name).params;
    } else {
      Rng rng(stream_seed(cfg.seed, 0x5a));
      p = random_normal_instance(n_spins, rng, 0.1);
    }
    require(p.n_spins <= 12, "variance study enumerates 4^N pairs; N <= 12");
    require(points >= 1, "--points must be >= 1");
    const EigenSystem eig = solve(p);
    const TransitionList tl = transitions(eig);
    const Real beta = beta_flag.value_or(0.1);
    const Real span = time_span_gamma * std::numbers::pi / std::max(tl.stick_width(), 1e-300);
    const std::vector<SamplingScheme> schemes{SamplingScheme::uniform(), SamplingScheme::importance(),
                                              SamplingScheme::abs_magnetization(), SamplingScheme::thermal(beta)};
    std::string text = "# qabc variance study\n# n_spins= " + std::to_string(p.n_spins) + "\n# beta= " + format_real(beta) +
                       "\n# bound_uniform= " + format_real(3.0 * std::pow(0.25 * p.n_spins, 2)) +
                       "\n# columns: t_s S_exact var_uniform var_importance var_abs_magnetization var_thermal "
                       "importance_identity thermal_mean\n";
    for (int k = 0; k < points; ++k) {
      const Real t = points > 1 ? span * k / (points - 1) : 0.0;
      const Real s = response_at(tl, t).real();
      text += format_real(t) + " " + format_real(s);
      Real thermal_mean = 0.0;
      for (const auto& sc : schemes) {
        const EstimandMoments m = estimand_moments(eig, sc, t);
        text += " " + format_real(m.variance);
        if (sc.kind == SamplingScheme::Kind::Thermal) thermal_mean = m.mean;
      }
      text += " " + format_real(std::pow(0.25 * p.n_spins, 2) - s * s) + " " + format_real(thermal_mean) + "\n";
    }
    write_atomic(out, text);
  }
  write_manifest(c, app.get_subcommands().front()->get_name(), argv, cfg, outputs);
  return 0;
}

void report_error(const std::vector<std::string>& args, const char* type, const std::string& message, int code) {
  const bool as_json = std::find(args.begin(), args.end(), "--error-json") != args.end();
  if (as_json) {
    const Json j = {{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
    std::cout << j.dump() << "\n";
  } else {
    std::cerr << "qabc: " << type << ": " << message << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args, std::nullopt);
  } catch (const ValidationError& e) {
    report_error(args, "ValidationError", e.what(), 2);
    return 2;
  } catch (const NumericalError& e) {
    report_error(args, "NumericalError", e.what(), 3);
    return 3;
  } catch (const Json::exception& e) {
    report_error(args, "ValidationError", e.what(), 2);
    return 2;
  } catch (const std::exception& e) {
    report_error(args, "Error", e.what(), 1);
    return 1;
  }
}
