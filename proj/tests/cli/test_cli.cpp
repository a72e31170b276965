// Black-box checks of the installed command surface. The binary path comes
// from the LININV_CLI_BIN environment variable (set by ctest).
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin() {
  const char* p = std::getenv("LININV_CLI_BIN");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("lininv_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  CHECK(run("--version") == 0);
  CHECK(run("--help") == 0);
  CHECK(run("--no-such-flag") == 1);
  CHECK(run("solve --method landweber") == 1);       // neither --problem nor --bundle
  CHECK(run("generate --problem heat --size 16") == 1);  // unknown problem
}

TEST_CASE("generate writes a complete bundle") {
  TempDir tmp("gen");
  REQUIRE(run("generate --problem shaw --size 32 --eps 5e-2 --seed 11 --csv --out " +
              tmp.path.string()) == 0);
  for (const char* f : {"operator.bin", "x_exact.bin", "y_exact.bin", "y_noisy.bin", "meta.json",
                        "operator.csv"})
    CHECK(fs::exists(tmp.path / f));
  json meta = json::parse(slurp(tmp.path / "meta.json"));
  CHECK(meta["name"] == "shaw");
  CHECK(meta["size"] == 32);
  CHECK(meta["delta"].get<double>() > 0.0);
  CHECK(meta.contains("version"));
}

TEST_CASE("solve from a bundle matches solve from scratch byte for byte") {
  TempDir tmp("solve");
  const auto bundle = tmp.path / "bundle";
  REQUIRE(run("generate --problem gravity --size 48 --eps 1e-2 --seed 4 --out " +
              bundle.string()) == 0);
  const std::string common = " --method svrg --c0 c --M 2n --stop argmin --epochs 60 --seed 9";
  REQUIRE(run("solve --bundle " + bundle.string() + common + " --out " +
              (tmp.path / "a").string()) == 0);
  REQUIRE(run("solve --problem gravity --size 48 --eps 1e-2 --problem-seed 4" + common +
              " --out " + (tmp.path / "b").string()) == 0);
  CHECK(slurp(tmp.path / "a" / "trajectory.csv") == slurp(tmp.path / "b" / "trajectory.csv"));
  CHECK(slurp(tmp.path / "a" / "run.json") == slurp(tmp.path / "b" / "run.json"));

  // rerun is byte-identical
  REQUIRE(run("solve --bundle " + bundle.string() + common + " --out " +
              (tmp.path / "c").string()) == 0);
  CHECK(slurp(tmp.path / "a" / "run.json") == slurp(tmp.path / "c" / "run.json"));
}

TEST_CASE("zero-noise landweber runs to the epoch cap") {
  TempDir tmp("eps0");
  REQUIRE(run("solve --problem gravity --size 32 --eps 0 --method landweber --stop discrepancy "
              "--epochs 25 --out " +
              tmp.path.string()) == 0);
  json j = json::parse(slurp(tmp.path / "run.json"));
  CHECK(j["result"]["stopped_by"] == "max_epochs");
  CHECK(j["result"]["iterations_total"] == 25);
}

TEST_CASE("verify returns clean reports") {
  TempDir tmp("verify");
  const auto report = tmp.path / "report.json";
  REQUIRE(run("verify --suite all --out " + report.string()) == 0);
  json j = json::parse(slurp(report));
  CHECK(j["pass"] == true);
  REQUIRE(j["suites"].size() == 3);
  for (const auto& s : j["suites"]) CHECK(s["violations"] == 0);
}

TEST_CASE("study runs a yaml spec deterministically across thread counts") {
  TempDir tmp("study");
  const auto spec = tmp.path / "spec.yaml";
  {
    std::ofstream f(spec);
    f << "problems:\n"
      << "  - name: gravity\n"
      << "    size: 32\n"
      << "nu: [0.0]\n"
      << "eps: [1.0e-2]\n"
      << "methods:\n"
      << "  - method: landweber\n"
      << "    c0: normA^-2\n"
      << "    stopping: {kind: discrepancy, tau: 1.01}\n"
      << "    max_epochs: 500\n"
      << "  - method: svrg\n"
      << "    c0: c\n"
      << "    M: 2n\n"
      << "    stopping: {kind: argmin}\n"
      << "    max_epochs: 90\n"
      << "reps: 4\n"
      << "base_seed: 21\n"
      << "noise: shared\n";
  }
  REQUIRE(run("study --spec " + spec.string() + " --threads 1 --out " +
              (tmp.path / "t1").string()) == 0);
  REQUIRE(run("study --spec " + spec.string() + " --threads 8 --out " +
              (tmp.path / "t8").string()) == 0);
  CHECK(slurp(tmp.path / "t1" / "study.csv") == slurp(tmp.path / "t8" / "study.csv"));
  CHECK(slurp(tmp.path / "t1" / "study.json") == slurp(tmp.path / "t8" / "study.json"));
  // per-cell trajectories too
  int cells = 0;
  for (auto& entry : fs::directory_iterator(tmp.path / "t1" / "cells")) {
    ++cells;
    CHECK(slurp(entry.path()) == slurp(tmp.path / "t8" / "cells" / entry.path().filename()));
  }
  CHECK(cells == 2);
  const std::string csv = slurp(tmp.path / "t1" / "study.csv");
  CHECK(csv.find("gravity,32,landweber") != std::string::npos);
  CHECK(csv.find("gravity,32,svrg") != std::string::npos);
}

}  // TEST_SUITE
