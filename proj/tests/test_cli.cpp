#include "doctest.h"

#include "qabc/io.hpp"

#include <cstdlib>
#include <sys/wait.h>

using namespace qabc;
namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "qabc_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int qabc_cli(const std::string& args, const std::string& redirect = "> /dev/null 2>&1") {
  const std::string cmd = "cd '" + workdir().string() + "' && '" QABC_CLI "' " + args + " " + redirect;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file(const std::string& name) { return read_text(workdir() / name); }

void write_single_spin() {
  const Json j = {{"name", "single"}, {"n_spins", 1}, {"shifts_hz", {10.0}}, {"couplings_hz", {{0.0}}}, {"gamma_per_s", 1.0}};
  write_atomic(workdir() / "single.json", j.dump());
}

}  // namespace

TEST_CASE("simulate a single spin") {
  write_single_spin();
  REQUIRE(qabc_cli("simulate --molecule single.json --out single.txt") == 0);
  const SpectralDensity s = load_spectrum(workdir() / "single.txt");
  const auto half = s.omega.size / 2;
  Eigen::Index lo = 0, hi = 0;
  s.values.head(half).maxCoeff(&lo);
  s.values.tail(s.omega.size - half).maxCoeff(&hi);
  hi += half;
  CHECK(std::abs(s.omega[lo] + kTwoPi * 10) <= s.omega.step);
  CHECK(std::abs(s.omega[hi] - kTwoPi * 10) <= s.omega.step);
  CHECK(fs::exists(workdir() / "single.txt.manifest.json"));
}

TEST_CASE("infer twice with a fixed seed") {
  REQUIRE(qabc_cli("fixtures --out data.json") == 0);
  const std::string args = "infer --target data.json --name inequivalent-2 --decoys 15 --iterations 3 --seed 5";
  REQUIRE(qabc_cli(args + " --out a.txt") == 0);
  REQUIRE(qabc_cli(args + " --out b.txt") == 0);
  CHECK(file("a.txt") == file("b.txt"));
  const std::string before = file("a.txt");
  REQUIRE(qabc_cli("replay a.txt.manifest.json") == 0);
  CHECK(file("a.txt") == before);
}

TEST_CASE("variance study on four spins") {
  const Json j = {{"name", "four"},
                  {"n_spins", 4},
                  {"shifts_hz", {-30.0, -10.0, 15.0, 25.0}},
                  {"couplings_hz", {{0, 7, 1, 2}, {7, 0, 3, 1}, {1, 3, 0, 6}, {2, 1, 6, 0}}},
                  {"gamma_per_s", 2.0}};
  write_atomic(workdir() / "four.json", j.dump());
  REQUIRE(qabc_cli("variance-study --molecule four.json --out var.txt") == 0);
  std::istringstream in(file("var.txt"));
  std::string line;
  while (std::getline(in, line) && line[0] == '#') {
  }
  std::istringstream row(line);
  Real t, s, uni, imp;
  row >> t >> s >> uni >> imp;
  CHECK(t == 0.0);
  CHECK(uni == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(imp == 0.0);
}

TEST_CASE("exit codes") {
  CHECK(qabc_cli("") == 2);
  CHECK(qabc_cli("simulate --molecule missing.json --out x.txt") == 2);
  CHECK(qabc_cli("simulate --molecule single.json --out x.txt --mode quantum") == 2);
  write_atomic(workdir() / "bad.json", R"({"name":"b","n_spins":2,"shifts_hz":[0,0],"couplings_hz":[[0,1],[2,0]],"gamma_per_s":1})");
  CHECK(qabc_cli("simulate --molecule bad.json --out x.txt --error-json", "> err.json 2>/dev/null") == 2);
  const Json err = Json::parse(file("err.json"));
  CHECK(err["error"]["type"] == "ValidationError");
  CHECK(err["error"]["message"].get<std::string>().find("couplings_hz[0][1]") != std::string::npos);
}

TEST_CASE("config file and overrides") {
  write_atomic(workdir() / "cfg.json", R"({"seed": 3, "simulator": {"mode": "shots", "shots_per_time": 50}})");
  REQUIRE(qabc_cli("simulate --config cfg.json --molecule single.json --out c1.txt --seed 4") == 0);
  const Json m = Json::parse(file("c1.txt.manifest.json"));
  CHECK(m["seed"] == 4);
  CHECK(m["config"]["simulator"]["mode"] == "shots");
  CHECK(m["config"]["simulator"]["shots_per_time"] == 50);
}
