#include "qabc/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace qabc {

namespace fs = std::filesystem;

std::string format_real(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

Json parse_json_file(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

const Json& field(const Json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) throw ValidationError(path + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(path + "." + key + ": missing");
  return *it;
}

Real as_real(const Json& j, const std::string& path) {
  if (!j.is_number()) throw ValidationError(path + ": expected a number");
  const Real x = j.get<Real>();
  if (!std::isfinite(x)) throw ValidationError(path + ": not finite");
  return x;
}

std::int64_t as_int(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ValidationError(path + ": expected an integer");
  return j.get<std::int64_t>();
}

std::string as_string(const Json& j, const std::string& path) {
  if (!j.is_string()) throw ValidationError(path + ": expected a string");
  return j.get<std::string>();
}

void check_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ValidationError(path + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ValidationError(path + "." + key + ": unknown key");
}

template <typename T>
void read_opt(const Json& obj, const std::string& path, const char* key, T& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string p = path + "." + key;
  if constexpr (std::is_same_v<T, Real>) {
    out = as_real(*it, p);
  } else if constexpr (std::is_same_v<T, std::string>) {
    out = as_string(*it, p);
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!it->is_number_unsigned()) throw ValidationError(p + ": expected a non-negative integer");
    out = it->template get<std::uint64_t>();
  } else {
    const std::int64_t v = as_int(*it, p);
    if (v < std::numeric_limits<T>::min() || v > std::numeric_limits<T>::max())
      throw ValidationError(p + ": out of range");
    out = static_cast<T>(v);
  }
}

std::string index_path(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

}  // namespace

Json to_json(const SpinParams& p) {
  Json j;
  j["n_spins"] = p.n_spins;
  j["shifts_hz"] = std::vector<Real>(p.shifts.data(), p.shifts.data() + p.shifts.size());
  Json rows = Json::array();
  for (int i = 0; i < p.n_spins; ++i) {
    Json row = Json::array();
    for (int k = 0; k < p.n_spins; ++k) row.push_back(p.couplings(i, k));
    rows.push_back(std::move(row));
  }
  j["couplings_hz"] = std::move(rows);
  j["gamma_per_s"] = p.gamma;
  return j;
}

namespace {

SpinParams params_fields(const Json& j, const std::string& path) {
  SpinParams p;
  const std::int64_t n = as_int(field(j, path, "n_spins"), path + ".n_spins");
  if (n < 1 || n > 24) throw ValidationError(path + ".n_spins: must be in [1, 24]");
  p.n_spins = static_cast<int>(n);
  const Json& shifts = field(j, path, "shifts_hz");
  const std::string sp = path + ".shifts_hz";
  if (!shifts.is_array() || shifts.size() != static_cast<std::size_t>(n))
    throw ValidationError(sp + ": expected " + std::to_string(n) + " numbers");
  p.shifts.resize(n);
  for (std::size_t i = 0; i < shifts.size(); ++i) p.shifts[static_cast<Eigen::Index>(i)] = as_real(shifts[i], index_path(sp, i));
  const Json& rows = field(j, path, "couplings_hz");
  const std::string cp = path + ".couplings_hz";
  if (!rows.is_array() || rows.size() != static_cast<std::size_t>(n))
    throw ValidationError(cp + ": expected " + std::to_string(n) + " rows");
  p.couplings.resize(n, n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != static_cast<std::size_t>(n))
      throw ValidationError(index_path(cp, i) + ": expected " + std::to_string(n) + " numbers");
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      p.couplings(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          as_real(rows[i][k], index_path(index_path(cp, i), k));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.couplings(i, i) != 0.0)
      throw ValidationError(index_path(index_path(cp, static_cast<std::size_t>(i)), static_cast<std::size_t>(i)) +
                            ": diagonal must be zero");
    for (Eigen::Index k = i + 1; k < n; ++k)
      if (p.couplings(i, k) != p.couplings(k, i))
        throw ValidationError(index_path(index_path(cp, static_cast<std::size_t>(i)), static_cast<std::size_t>(k)) +
                              " != " +
                              index_path(index_path(cp, static_cast<std::size_t>(k)), static_cast<std::size_t>(i)) +
                              ": couplings must be symmetric");
  }
  p.gamma = as_real(field(j, path, "gamma_per_s"), path + ".gamma_per_s");
  try {
    p.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return p;
}

}  // namespace

SpinParams spin_params_from_json(const Json& j, const std::string& path) {
  check_keys(j, path, {"n_spins", "shifts_hz", "couplings_hz", "gamma_per_s"});
  return params_fields(j, path);
}

Json to_json(const MoleculeRecord& r) {
  Json j;
  j["name"] = r.name;
  if (r.external_id) j["external_id"] = *r.external_id;
  if (r.label) j["label"] = *r.label;
  const Json params = to_json(r.params);
  for (const auto& [k, v] : params.items()) j[k] = v;
  return j;
}

MoleculeRecord molecule_from_json(const Json& j, const std::string& path) {
  check_keys(j, path, {"name", "external_id", "label", "n_spins", "shifts_hz", "couplings_hz", "gamma_per_s"});
  MoleculeRecord r;
  r.name = as_string(field(j, path, "name"), path + ".name");
  if (j.contains("external_id")) r.external_id = as_string(j["external_id"], path + ".external_id");
  if (j.contains("label")) {
    const auto label = as_int(j["label"], path + ".label");
    if (label < -1) throw ValidationError(path + ".label: must be >= -1");
    r.label = static_cast<int>(label);
  }
  r.params = params_fields(j, path);
  return r;
}

Json to_json(const Dataset& d) {
  Json j;
  j["format"] = "qabc-dataset";
  j["version"] = 1;
  Json list = Json::array();
  for (const auto& r : d) list.push_back(to_json(r));
  j["molecules"] = std::move(list);
  return j;
}

Dataset dataset_from_json(const Json& j) {
  check_keys(j, "dataset", {"format", "version", "molecules"});
  if (j.contains("format") && j["format"] != "qabc-dataset")
    throw ValidationError("dataset.format: expected \"qabc-dataset\"");
  const Json& list = field(j, "dataset", "molecules");
  if (!list.is_array()) throw ValidationError("dataset.molecules: expected an array");
  Dataset d;
  for (std::size_t i = 0; i < list.size(); ++i) d.push_back(molecule_from_json(list[i], index_path("molecules", i)));
  validate_dataset(d);
  return d;
}

Dataset load_dataset(const fs::path& path) {
  try {
    return dataset_from_json(parse_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void save_dataset(const fs::path& path, const Dataset& data) {
  validate_dataset(data);
  write_atomic(path, to_json(data).dump(2) + "\n");
}

MoleculeRecord load_molecule(const fs::path& path, const std::string& name) {
  const Json j = parse_json_file(path);
  try {
    if (j.is_object() && j.contains("molecules")) {
      const Dataset d = dataset_from_json(j);
      if (d.empty()) throw ValidationError("dataset is empty");
      if (name.empty()) return d.front();
      for (const auto& r : d)
        if (r.name == name) return r;
      throw ValidationError("no molecule named '" + name + "'");
    }
    return molecule_from_json(j);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_spectrum(const SpectralDensity& spec) {
  require(spec.values.size() == spec.omega.size, "spectrum and grid size differ");
  std::string out = "# qabc spectrum\n";
  out += "# n_spins= " + std::to_string(spec.n_spins) + "\n";
  out += "# omega0_rad_s= " + format_real(spec.omega.start) + "\n";
  out += "# domega_rad_s= " + format_real(spec.omega.step) + "\n";
  out += "# points= " + std::to_string(spec.omega.size) + "\n";
  for (const auto& w : spec.warnings) out += "# warning: " + w + "\n";
  out += "# columns: freq_hz value\n";
  for (Eigen::Index k = 0; k < spec.omega.size; ++k)
    out += format_real(to_hz(spec.omega[k])) + " " + format_real(spec.values[k]) + "\n";
  return out;
}

namespace {

struct TextTable {
  std::map<std::string, std::string> header;
  std::vector<std::string> warnings;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> row_lines;
};

TextTable parse_table(const std::string& text, const std::string& source) {
  TextTable t;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = line.substr(1);
      const auto warn = body.find("warning: ");
      if (warn == 1) {
        t.warnings.push_back(body.substr(10));
        continue;
      }
      const auto eq = body.find("= ");
      if (eq != std::string::npos) {
        std::string key = body.substr(0, eq);
        key.erase(0, key.find_first_not_of(' '));
        t.header[key] = body.substr(eq + 2);
      }
      continue;
    }
    std::istringstream fields(line);
    std::vector<std::string> row;
    for (std::string f; fields >> f;) row.push_back(f);
    if (row.empty()) continue;
    t.rows.push_back(std::move(row));
    t.row_lines.push_back(line_no);
  }
  (void)source;
  return t;
}

Real parse_real(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const Real x = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ValidationError(where + ": '" + s + "' is not a number");
  return x;
}

std::int64_t parse_int(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const long long x = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ValidationError(where + ": '" + s + "' is not an integer");
  return x;
}

const std::string& header_value(const TextTable& t, const std::string& key, const std::string& source) {
  const auto it = t.header.find(key);
  if (it == t.header.end()) throw ValidationError(source + ": header '" + key + "=' missing");
  return it->second;
}

}  // namespace

SpectralDensity parse_spectrum(const std::string& text, const std::string& source) {
  const TextTable t = parse_table(text, source);
  SpectralDensity s;
  s.n_spins = static_cast<int>(parse_int(header_value(t, "n_spins", source), source + ": n_spins"));
  s.omega.start = parse_real(header_value(t, "omega0_rad_s", source), source + ": omega0_rad_s");
  s.omega.step = parse_real(header_value(t, "domega_rad_s", source), source + ": domega_rad_s");
  s.omega.size = parse_int(header_value(t, "points", source), source + ": points");
  if (!(s.omega.step > 0.0) || s.omega.size < 2) throw ValidationError(source + ": invalid grid header");
  if (static_cast<Eigen::Index>(t.rows.size()) != s.omega.size)
    throw ValidationError(source + ": header says " + std::to_string(s.omega.size) + " points, found " +
                          std::to_string(t.rows.size()));
  s.values.resize(s.omega.size);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const std::string where = source + ":" + std::to_string(t.row_lines[k]);
    if (t.rows[k].size() != 2) throw ValidationError(where + ": expected 2 columns");
    s.values[static_cast<Eigen::Index>(k)] = parse_real(t.rows[k][1], where);
  }
  s.warnings = t.warnings;
  return s;
}

void save_spectrum(const fs::path& path, const SpectralDensity& spec) { write_atomic(path, format_spectrum(spec)); }

SpectralDensity load_spectrum(const fs::path& path) { return parse_spectrum(read_text(path), path.string()); }

std::string format_report(const ConvergenceReport& r) {
  std::string out = "# qabc convergence report\n";
  out += "# mode= " + r.mode + "\n";
  out += "# shots_per_time= " + std::to_string(r.shots_per_time) + "\n";
  out += "# seed= " + std::to_string(r.seed) + "\n";
  out += "# noise_floor= " + format_real(r.noise_floor) + "\n";
  out += "# noise_floor_error= " + format_real(r.noise_floor_error) + "\n";
  out += "# columns: iteration tv ess floor_hits rejected\n";
  for (const auto& rec : r.records)
    out += std::to_string(rec.iteration) + " " + format_real(rec.tv) + " " + format_real(rec.ess) + " " +
           std::to_string(rec.floor_hits) + " " + std::to_string(rec.rejected) + "\n";
  return out;
}

ConvergenceReport parse_report(const std::string& text, const std::string& source) {
  const TextTable t = parse_table(text, source);
  ConvergenceReport r;
  r.mode = header_value(t, "mode", source);
  if (r.mode != "exact" && r.mode != "shots") throw ValidationError(source + ": mode must be exact or shots");
  r.shots_per_time = parse_int(header_value(t, "shots_per_time", source), source + ": shots_per_time");
  const std::string& seed = header_value(t, "seed", source);
  char* end = nullptr;
  r.seed = std::strtoull(seed.c_str(), &end, 10);
  if (end == seed.c_str() || *end != '\0') throw ValidationError(source + ": seed is not an integer");
  r.noise_floor = parse_real(header_value(t, "noise_floor", source), source + ": noise_floor");
  r.noise_floor_error = parse_real(header_value(t, "noise_floor_error", source), source + ": noise_floor_error");
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const std::string where = source + ":" + std::to_string(t.row_lines[k]);
    const auto& row = t.rows[k];
    if (row.size() != 5) throw ValidationError(where + ": expected 5 columns");
    r.records.push_back({static_cast<int>(parse_int(row[0], where)), parse_real(row[1], where),
                         parse_real(row[2], where), static_cast<int>(parse_int(row[3], where)),
                         static_cast<int>(parse_int(row[4], where))});
  }
  return r;
}

void save_report(const fs::path& path, const ConvergenceReport& report) { write_atomic(path, format_report(report)); }

ConvergenceReport load_report(const fs::path& path) { return parse_report(read_text(path), path.string()); }

std::string format_response(const ResponseSeries& r) {
  std::string out = "# qabc response\n# t0_s= " + format_real(r.times.start) + "\n# dt_s= " +
                    format_real(r.times.step) + "\n# points= " + std::to_string(r.times.size) + "\n";
  out += r.variance ? "# columns: t_s re im variance\n" : "# columns: t_s re im\n";
  for (Eigen::Index k = 0; k < r.times.size; ++k) {
    out += format_real(r.times[k]) + " " + format_real(r.values[k].real()) + " " + format_real(r.values[k].imag());
    if (r.variance) out += " " + format_real((*r.variance)[k]);
    out += "\n";
  }
  return out;
}

std::string format_estimate(const ResponseEstimate& e, const std::optional<ResponseSeries>& exact) {
  std::string out = "# qabc response estimate\n# t0_s= " + format_real(e.times.start) + "\n# dt_s= " +
                    format_real(e.times.step) + "\n# points= " + std::to_string(e.times.size) + "\n";
  for (const auto& w : e.warnings) out += "# warning: " + w + "\n";
  out += exact ? "# columns: t_s mean variance shots exact\n" : "# columns: t_s mean variance shots\n";
  for (Eigen::Index k = 0; k < e.times.size; ++k) {
    out += format_real(e.times[k]) + " " + format_real(e.mean[k]) + " " + format_real(e.variance[k]) + " " +
           std::to_string(e.shots[static_cast<std::size_t>(k)]);
    if (exact) out += " " + format_real(exact->values[k].real());
    out += "\n";
  }
  return out;
}

std::string format_matrix(const MatrixXd& m, const std::string& header) {
  std::string out;
  std::istringstream in(header);
  for (std::string line; std::getline(in, line);) out += "# " + line + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) out += (k ? " " : "") + format_real(m(i, k));
    out += "\n";
  }
  return out;
}

std::string mode_name(SimulatorMode m) { return m == SimulatorMode::Exact ? "exact" : "shots"; }

SimulatorMode parse_mode(const std::string& name) {
  if (name == "exact") return SimulatorMode::Exact;
  if (name == "shots") return SimulatorMode::Shots;
  throw ValidationError("unknown simulator mode '" + name + "'");
}

std::string allocation_name(ShotAllocation a) { return a == ShotAllocation::Uniform ? "uniform" : "early-weighted"; }

ShotAllocation parse_allocation(const std::string& name) {
  if (name == "uniform") return ShotAllocation::Uniform;
  if (name == "early-weighted") return ShotAllocation::EarlyWeighted;
  throw ValidationError("unknown shot allocation '" + name + "'");
}

void RunConfig::validate() const {
  const auto check = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("config.") + what);
  };
  check(shots_per_time >= 1, "simulator.shots_per_time: must be >= 1");
  check(t_max_gamma > 0.0, "simulator.t_max_gamma: must be > 0");
  try {
    scheme.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config.simulator.scheme: ") + e.what());
  }
  check(grid.margin > 0.0, "grid.margin: must be > 0");
  check(grid.step_fraction > 0.0 && grid.step_fraction <= 1.0, "grid.step_fraction: must be in (0, 1]");
  check(tsne.perplexity > 0.0, "tsne.perplexity: must be > 0");
  check(tsne.iterations >= 1, "tsne.iterations: must be >= 1");
  check(tsne.learning_rate > 0.0, "tsne.learning_rate: must be > 0");
  check(tsne.exaggeration >= 1.0, "tsne.exaggeration: must be >= 1");
  check(!eps || *eps > 0.0, "dbscan.eps: must be > 0");
  check(min_pts >= 1, "dbscan.min_pts: must be >= 1");
  check(samples >= 2, "inference.samples: must be >= 2");
  check(iterations >= 0, "inference.iterations: must be >= 0");
  check(jitter >= 0.0, "inference.jitter: must be >= 0");
  check(max_shift > 0.0 && max_coupling > 0.0, "inference bounds: must be > 0");
  check(floor_repeats >= 2, "inference.floor_repeats: must be >= 2");
  check(shift_step > 0.0 && coupling_step > 0.0, "fisher steps: must be > 0");
  check(kappa > 0.0, "fixtures.kappa: must be > 0");
  for (int c : counts) check(c >= 1, "fixtures.counts: each must be >= 1");
}

SimulatorOptions RunConfig::simulator() const {
  SimulatorOptions s;
  s.mode = mode;
  s.shots_per_time = shots_per_time;
  s.scheme = scheme;
  s.t_max_gamma = t_max_gamma;
  return s;
}

InferenceOptions RunConfig::inference() const {
  InferenceOptions o;
  o.samples = samples;
  o.jitter = jitter;
  o.max_shift = max_shift;
  o.max_coupling = max_coupling;
  o.simulator = simulator();
  o.seed = seed;
  return o;
}

FisherOptions RunConfig::fisher() const {
  FisherOptions f;
  f.shift_step = shift_step;
  f.coupling_step = coupling_step;
  f.grid_options = grid;
  return f;
}

FixtureOptions RunConfig::fixtures() const {
  FixtureOptions f;
  f.seed = seed;
  f.counts = counts;
  f.kappa = kappa;
  return f;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed;
  j["simulator"] = {{"mode", mode_name(c.mode)},
                    {"shots_per_time", c.shots_per_time},
                    {"allocation", allocation_name(c.allocation)},
                    {"scheme", c.scheme.name()},
                    {"beta", c.scheme.beta},
                    {"t_max_gamma", c.t_max_gamma}};
  j["grid"] = {{"margin", c.grid.margin}, {"step_fraction", c.grid.step_fraction}};
  j["metric"] = metric_name(c.metric);
  j["tsne"] = {{"perplexity", c.tsne.perplexity},
               {"iterations", c.tsne.iterations},
               {"learning_rate", c.tsne.learning_rate},
               {"initial_momentum", c.tsne.initial_momentum},
               {"final_momentum", c.tsne.final_momentum},
               {"momentum_switch", c.tsne.momentum_switch},
               {"exaggeration", c.tsne.exaggeration},
               {"exaggeration_iterations", c.tsne.exaggeration_iterations}};
  j["dbscan"] = {{"eps", c.eps ? Json(*c.eps) : Json(nullptr)}, {"min_pts", c.min_pts}};
  j["inference"] = {{"samples", c.samples},           {"iterations", c.iterations},
                    {"jitter", c.jitter},             {"max_shift_hz", c.max_shift},
                    {"max_coupling_hz", c.max_coupling}, {"floor_repeats", c.floor_repeats}};
  j["fisher"] = {{"shift_step_hz", c.shift_step}, {"coupling_step_hz", c.coupling_step}};
  j["fixtures"] = {{"kappa", c.kappa}, {"counts", c.counts}};
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  check_keys(j, "config", {"seed", "simulator", "grid", "metric", "tsne", "dbscan", "inference", "fisher", "fixtures"});
  read_opt(j, "config", "seed", c.seed);
  if (j.contains("simulator")) {
    const Json& s = j["simulator"];
    const std::string p = "config.simulator";
    check_keys(s, p, {"mode", "shots_per_time", "allocation", "scheme", "beta", "t_max_gamma"});
    std::string mode = mode_name(c.mode), alloc = allocation_name(c.allocation), scheme = c.scheme.name();
    Real beta = 0.1;
    read_opt(s, p, "mode", mode);
    read_opt(s, p, "shots_per_time", c.shots_per_time);
    read_opt(s, p, "allocation", alloc);
    read_opt(s, p, "scheme", scheme);
    read_opt(s, p, "beta", beta);
    read_opt(s, p, "t_max_gamma", c.t_max_gamma);
    try {
      c.mode = parse_mode(mode);
      c.allocation = parse_allocation(alloc);
      c.scheme = SamplingScheme::parse(scheme, beta);
    } catch (const ValidationError& e) {
      throw ValidationError(p + ": " + e.what());
    }
  }
  if (j.contains("grid")) {
    check_keys(j["grid"], "config.grid", {"margin", "step_fraction"});
    read_opt(j["grid"], "config.grid", "margin", c.grid.margin);
    read_opt(j["grid"], "config.grid", "step_fraction", c.grid.step_fraction);
  }
  if (j.contains("metric")) {
    try {
      c.metric = parse_metric(as_string(j["metric"], "config.metric"));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("config.metric: ") + e.what());
    }
  }
  if (j.contains("tsne")) {
    const Json& t = j["tsne"];
    const std::string p = "config.tsne";
    check_keys(t, p, {"perplexity", "iterations", "learning_rate", "initial_momentum", "final_momentum",
                      "momentum_switch", "exaggeration", "exaggeration_iterations"});
    read_opt(t, p, "perplexity", c.tsne.perplexity);
    read_opt(t, p, "iterations", c.tsne.iterations);
    read_opt(t, p, "learning_rate", c.tsne.learning_rate);
    read_opt(t, p, "initial_momentum", c.tsne.initial_momentum);
    read_opt(t, p, "final_momentum", c.tsne.final_momentum);
    read_opt(t, p, "momentum_switch", c.tsne.momentum_switch);
    read_opt(t, p, "exaggeration", c.tsne.exaggeration);
    read_opt(t, p, "exaggeration_iterations", c.tsne.exaggeration_iterations);
  }
  if (j.contains("dbscan")) {
    const Json& d = j["dbscan"];
    check_keys(d, "config.dbscan", {"eps", "min_pts"});
    if (d.contains("eps") && !d["eps"].is_null()) c.eps = as_real(d["eps"], "config.dbscan.eps");
    read_opt(d, "config.dbscan", "min_pts", c.min_pts);
  }
  if (j.contains("inference")) {
    const Json& i = j["inference"];
    const std::string p = "config.inference";
    check_keys(i, p, {"samples", "iterations", "jitter", "max_shift_hz", "max_coupling_hz", "floor_repeats"});
    read_opt(i, p, "samples", c.samples);
    read_opt(i, p, "iterations", c.iterations);
    read_opt(i, p, "jitter", c.jitter);
    read_opt(i, p, "max_shift_hz", c.max_shift);
    read_opt(i, p, "max_coupling_hz", c.max_coupling);
    read_opt(i, p, "floor_repeats", c.floor_repeats);
  }
  if (j.contains("fisher")) {
    check_keys(j["fisher"], "config.fisher", {"shift_step_hz", "coupling_step_hz"});
    read_opt(j["fisher"], "config.fisher", "shift_step_hz", c.shift_step);
    read_opt(j["fisher"], "config.fisher", "coupling_step_hz", c.coupling_step);
  }
  if (j.contains("fixtures")) {
    const Json& f = j["fixtures"];
    check_keys(f, "config.fixtures", {"kappa", "counts"});
    read_opt(f, "config.fixtures", "kappa", c.kappa);
    if (f.contains("counts")) {
      const Json& counts = f["counts"];
      if (!counts.is_array() || counts.size() != 4)
        throw ValidationError("config.fixtures.counts: expected 4 integers");
      for (std::size_t k = 0; k < 4; ++k)
        c.counts[k] = static_cast<int>(as_int(counts[k], index_path("config.fixtures.counts", k)));
    }
  }
  c.tsne.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  try {
    return run_config_from_json(parse_json_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

}  // namespace qabc
