// Command-line front end: generate / solve / study / verify.
//
// Exit codes: 0 success, 1 validation or usage error, 2 divergence or
// verification failure. Data files never embed wall-clock state, so a rerun
// with the same inputs is byte-identical; timing goes to stderr.

#include <CLI11.hpp>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "lininv/io.hpp"
#include "lininv/oracle.hpp"
#include "lininv/study.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lininv;

namespace {

fs::path default_out_dir() {
  if (const char* env = std::getenv("LININV_OUT")) return fs::path(env);
  return fs::path("out");
}

json config_json(const SolverConfig& cfg) {
  json j;
  j["method"] = method_name(cfg.method);
  j["c0"] = cfg.c0;
  j["M"] = cfg.M;
  j["max_epochs"] = cfg.max_epochs;
  j["seed"] = cfg.seed;
  j["stream"] = cfg.stream;
  j["snapshot_every"] = cfg.snapshot_every;
  json stop;
  stop["kind"] = stopping_kind_name(cfg.stopping.kind);
  switch (cfg.stopping.kind) {
    case StoppingRule::Kind::discrepancy:
      stop["tau"] = cfg.stopping.tau;
      break;
    case StoppingRule::Kind::a_priori:
      stop["constant"] = cfg.stopping.apriori_constant;
      stop["exponent"] = cfg.stopping.apriori_exponent;
      break;
    case StoppingRule::Kind::oracle_plateau:
      stop["window"] = cfg.stopping.plateau_window;
      stop["tol"] = cfg.stopping.plateau_tol;
      if (cfg.stopping.lm_reference) stop["lm_reference"] = *cfg.stopping.lm_reference;
      break;
    default:
      break;
  }
  j["stopping"] = stop;
  if (cfg.method == Method::rsvrg) {
    if (cfg.auto_truncation) {
      j["truncation"] = {{"mode", "auto"}, {"c1", cfg.c1}};
    } else {
      j["truncation"] = {{"mode", "explicit"}, {"a", cfg.truncation.a}, {"b", cfg.truncation.b}};
    }
  }
  return j;
}

json problem_json(const InverseProblem& p) {
  json j;
  j["name"] = p.name;
  j["size"] = p.op.cols();
  j["blocks"] = p.op.block_count();
  j["nu"] = p.smoothness;
  j["nu_e"] = p.base_smoothness;
  j["eps"] = p.rel_noise;
  j["seed"] = p.seed;
  j["delta"] = p.noise_level;
  j["op_norm"] = p.op.op_norm();
  j["L"] = p.op.max_block_norm_sq();
  return j;
}

void write_json(const fs::path& path, const json& j) {
  io::atomic_write_text(path, j.dump(1) + "\n");
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string problem = "phillips";
  Eigen::Index size = 1000;
  double nu = 0.0;
  double nu_e = 0.0;
  double eps = 1e-2;
  std::uint64_t seed = 1;
  std::string out;
  bool csv = false;
};

int cmd_generate(const GenerateArgs& a) {
  InverseProblem p = make_problem(a.problem, a.size, a.nu, a.eps, a.seed, a.nu_e);
  const fs::path dir = a.out.empty() ? default_out_dir() / (a.problem + "_bundle") : fs::path(a.out);
  fs::create_directories(dir);
  io::write_operator_binary(dir / "operator.bin", p.op);
  io::write_vector_binary(dir / "x_exact.bin", p.x_exact);
  io::write_vector_binary(dir / "y_exact.bin", p.y_exact);
  io::write_vector_binary(dir / "y_noisy.bin", p.y_noisy);
  if (a.csv) io::write_operator_csv(dir / "operator.csv", p.op);
  json meta = problem_json(p);
  meta["version"] = io::version();
  write_json(dir / "meta.json", meta);
  std::cerr << "wrote bundle to " << dir << " (delta = " << p.noise_level << ")\n";
  return 0;
}

InverseProblem load_bundle(const fs::path& dir) {
  std::ifstream mf(dir / "meta.json");
  if (!mf) throw std::runtime_error("bundle: missing meta.json under " + dir.string());
  json meta = json::parse(mf);
  InverseProblem p;
  p.op = compute_norms(io::read_operator_binary(dir / "operator.bin"));
  p.x_exact = io::read_vector_binary(dir / "x_exact.bin");
  p.y_exact = io::read_vector_binary(dir / "y_exact.bin");
  p.y_noisy = io::read_vector_binary(dir / "y_noisy.bin");
  p.noise_level = meta["delta"];
  p.rel_noise = meta["eps"];
  p.smoothness = meta["nu"];
  p.base_smoothness = meta["nu_e"];
  p.seed = meta["seed"];
  p.name = meta["name"];
  p.x0 = Vector::Zero(p.op.cols());
  return p;
}

// --- solve -----------------------------------------------------------------

struct SolveArgs {
  std::string problem;
  std::string bundle;
  Eigen::Index size = 1000;
  double nu = 0.0;
  double nu_e = 0.0;
  double eps = 1e-2;
  std::uint64_t problem_seed = 1;
  std::string method = "landweber";
  std::string c0;
  std::string m_expr = "2n";
  double epochs = 1e5;
  std::string stop = "";
  double tau = 1.01;
  double apriori_c = 1.0;
  int plateau_window = 10;
  double plateau_tol = 1e-3;
  double trunc_a = -1.0;
  double trunc_b = -1.0;
  double c1 = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  Eigen::Index snapshot_every = 1;
  std::string out;
};

int cmd_solve(const SolveArgs& a) {
  InverseProblem p = a.bundle.empty()
                         ? make_problem(a.problem, a.size, a.nu, a.eps, a.problem_seed, a.nu_e)
                         : load_bundle(a.bundle);
  SolverConfig cfg;
  cfg.method = method_from_name(a.method);
  cfg.c0 = study::resolve_c0(a.c0.empty()
                                 ? (cfg.method == Method::landweber ? "normA^-2" : "c")
                                 : a.c0,
                             p.op);
  cfg.M = study::resolve_m(a.m_expr, p.op.block_count());
  cfg.max_epochs = a.epochs;
  cfg.seed = a.seed;
  cfg.stream = a.stream;
  cfg.snapshot_every = a.snapshot_every;
  cfg.c1 = a.c1;
  if (a.trunc_a >= 0.0) {
    cfg.auto_truncation = false;
    cfg.truncation = {a.trunc_a, a.trunc_b > 0.0 ? a.trunc_b : 1.0};
  }
  std::string stop = a.stop;
  if (stop.empty()) stop = cfg.method == Method::landweber ? "discrepancy" : "argmin";
  if (stop == "discrepancy") {
    cfg.stopping = StoppingRule::discrepancy(a.tau);
  } else if (stop == "apriori") {
    cfg.stopping = StoppingRule::a_priori(a.apriori_c, p.smoothness);
  } else if (stop == "plateau") {
    cfg.stopping = StoppingRule::plateau(a.plateau_window, a.plateau_tol);
  } else if (stop == "argmin") {
    cfg.stopping = StoppingRule::argmin();
  } else if (stop == "max-epochs") {
    cfg.stopping = StoppingRule::max_epochs();
  } else {
    throw CLI::ValidationError("--stop", "unknown stopping rule '" + stop + "'");
  }

  RunRecord rec;
  switch (cfg.method) {
    case Method::landweber: rec = landweber_run(p, cfg); break;
    case Method::svrg: rec = svrg_run(p, cfg); break;
    case Method::rsvrg: rec = rsvrg_run(p, cfg); break;
  }

  const fs::path dir = a.out.empty() ? default_out_dir() / "solve" : fs::path(a.out);
  fs::create_directories(dir);
  json j;
  j["problem"] = problem_json(p);
  j["config"] = config_json(cfg);
  j["result"] = {{"k_star_epochs", rec.k_star_epochs},
                 {"e_star", rec.e_star},
                 {"iterations_total", rec.iterations_total},
                 {"stopped_by", rec.stopped_by},
                 {"final_rel_error", rec.trajectory.back().rel_error},
                 {"final_residual", rec.trajectory.back().residual}};
  if (rec.truncation_kept >= 0) {
    j["result"]["truncation_kept"] = rec.truncation_kept;
    j["result"]["truncation_threshold"] = rec.truncation_threshold;
  }
  j["version"] = io::version();
  write_json(dir / "run.json", j);
  io::atomic_write_text(dir / "trajectory.csv", io::trajectory_csv(rec));
  std::cerr << "k* = " << rec.k_star_epochs << " epochs, e* = " << rec.e_star << " ("
            << rec.stopped_by << "), wall " << rec.wall_time << " s\n";
  return 0;
}

// --- study -----------------------------------------------------------------

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Map: {
      json j = json::object();
      for (const auto& kv : node) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return j;
    }
    case YAML::NodeType::Sequence: {
      json j = json::array();
      for (const auto& item : node) j.push_back(yaml_to_json(item));
      return j;
    }
    case YAML::NodeType::Scalar: {
      // try the narrowest type first
      try { return node.as<long long>(); } catch (...) {}
      try { return node.as<double>(); } catch (...) {}
      try { return node.as<bool>(); } catch (...) {}
      return node.as<std::string>();
    }
    default:
      return nullptr;
  }
}

StoppingRule parse_stopping(const json& j, bool* uses_lm) {
  const std::string kind = j.value("kind", "max_epochs");
  if (kind == "discrepancy") return StoppingRule::discrepancy(j.value("tau", 1.01));
  if (kind == "apriori" || kind == "a_priori")
    return StoppingRule::a_priori(j.value("constant", 1.0), 0.0);  // exponent set per cell
  if (kind == "plateau" || kind == "oracle_plateau") {
    if (uses_lm) *uses_lm = j.value("use_lm_reference", false);
    return StoppingRule::plateau(j.value("window", 10), j.value("tol", 1e-3));
  }
  if (kind == "argmin" || kind == "oracle_argmin") return StoppingRule::argmin();
  if (kind == "max_epochs") return StoppingRule::max_epochs();
  throw std::invalid_argument("study spec: unknown stopping kind '" + kind + "'");
}

study::StudySpec parse_study_spec(const fs::path& file) {
  json j;
  if (file.extension() == ".yaml" || file.extension() == ".yml") {
    j = yaml_to_json(YAML::LoadFile(file.string()));
  } else {
    std::ifstream f(file);
    if (!f) throw std::runtime_error("cannot open study spec " + file.string());
    j = json::parse(f);
  }
  study::StudySpec spec;
  for (const auto& pj : j.at("problems")) {
    study::ProblemSpec ps;
    ps.name = pj.at("name");
    ps.size = pj.value("size", 1000);
    ps.nu_e = pj.value("nu_e", 0.0);
    ps.c1 = pj.value("c1", 1.0);
    spec.problems.push_back(ps);
  }
  spec.nus = j.at("nu").get<std::vector<double>>();
  spec.epss = j.at("eps").get<std::vector<double>>();
  for (const auto& mj : j.at("methods")) {
    study::MethodSpec ms;
    ms.method = method_from_name(mj.at("method"));
    ms.c0_expr = mj.value("c0", ms.method == Method::landweber ? "normA^-2" : "c");
    ms.m_expr = mj.value("M", "2n");
    ms.max_epochs = mj.value("max_epochs", 1e5);
    ms.snapshot_every = mj.value("snapshot_every", 1);
    if (mj.contains("stopping")) ms.stopping = parse_stopping(mj["stopping"], &ms.plateau_uses_lm);
    spec.methods.push_back(ms);
  }
  spec.reps = j.value("reps", 10);
  spec.base_seed = j.value("base_seed", 1);
  const std::string noise = j.value("noise", "shared");
  if (noise == "shared") {
    spec.noise = study::NoisePolicy::shared;
  } else if (noise == "fresh") {
    spec.noise = study::NoisePolicy::fresh;
  } else {
    throw std::invalid_argument("study spec: noise must be 'shared' or 'fresh'");
  }
  spec.threads = j.value("threads", 0);
  return spec;
}

std::string cell_tag(const study::CellResult& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s_n%lld_%s_nu%g_eps%g", c.problem.c_str(),
                static_cast<long long>(c.size), c.method.c_str(), c.nu, c.eps);
  std::string s(buf);
  for (char& ch : s)
    if (ch == '.') ch = 'p';
  return s;
}

int cmd_study(const std::string& spec_file, const std::string& out, int threads_override) {
  study::StudySpec spec = parse_study_spec(spec_file);
  if (threads_override > 0) spec.threads = threads_override;
  if (spec.threads <= 0)
    spec.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto cells = study::run_study(spec);
  const fs::path dir = out.empty() ? default_out_dir() / "study" : fs::path(out);
  fs::create_directories(dir / "cells");
  io::atomic_write_text(dir / "study.csv", io::study_csv(cells));
  json j;
  j["version"] = io::version();
  j["spec_file"] = fs::path(spec_file).filename().string();
  j["reps"] = spec.reps;
  j["base_seed"] = spec.base_seed;
  j["noise"] = spec.noise == study::NoisePolicy::shared ? "shared" : "fresh";
  j["cells"] = json::array();
  int diverged = 0;
  for (const auto& c : cells) {
    io::atomic_write_text(dir / "cells" / (cell_tag(c) + "_trajectory.csv"),
                          io::mean_trajectory_csv(c.summary));
    json cj;
    cj["problem"] = c.problem;
    cj["size"] = c.size;
    cj["method"] = c.method;
    cj["nu"] = c.nu;
    cj["eps"] = c.eps;
    cj["delta"] = c.delta;
    cj["c0"] = c.c0;
    cj["M"] = c.M;
    cj["stopping"] = c.stopping;
    cj["e_star"] = c.e_star;
    cj["e_star_sd"] = c.e_star_sd;
    cj["k_star"] = c.k_star;
    cj["plateau_error"] = c.plateau_error;
    cj["diverged"] = c.diverged;
    j["cells"].push_back(cj);
    diverged += c.diverged;
  }
  write_json(dir / "study.json", j);
  std::cerr << "wrote " << cells.size() << " cells to " << dir << "\n";
  return diverged > 0 ? 2 : 0;
}

// --- verify ----------------------------------------------------------------

json suite_json(const oracle::SuiteReport& r) {
  json j;
  j["name"] = r.name;
  j["checks"] = r.checks;
  j["violations"] = r.violations;
  j["worst_abs_err"] = r.worst_abs_err;
  j["worst_slack"] = r.worst_slack;
  j["seconds"] = r.seconds;
  j["pass"] = r.pass;
  j["notes"] = r.notes;
  return j;
}

int cmd_verify(const std::string& suite, const std::string& out) {
  std::vector<oracle::SuiteReport> reports;
  if (suite == "all" || suite == "identity") reports.push_back(oracle::run_identity_suite());
  if (suite == "all" || suite == "kernel") reports.push_back(oracle::run_kernel_suite());
  if (suite == "all" || suite == "variance") reports.push_back(oracle::run_variance_suite());
  if (reports.empty()) throw CLI::ValidationError("--suite", "unknown suite '" + suite + "'");

  bool pass = true;
  json j;
  j["version"] = io::version();
  j["suites"] = json::array();
  for (const auto& r : reports) {
    pass = pass && r.pass;
    j["suites"].push_back(suite_json(r));
    std::cerr << (r.pass ? "[pass] " : "[FAIL] ") << r.name << ": " << r.checks << " checks, "
              << r.violations << " violations (" << r.seconds << " s)\n";
  }
  j["pass"] = pass;
  if (out.empty()) {
    std::cout << j.dump(1) << "\n";
  } else {
    fs::create_directories(fs::path(out).parent_path().empty() ? "." : fs::path(out).parent_path());
    write_json(out, j);
  }
  return pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Row-partitioned linear inverse problems: Landweber / SVRG / rSVRG"};
  app.set_version_flag("--version", io::version());
  app.require_subcommand(1);

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Write a problem bundle to disk");
  gen->add_option("--problem", ga.problem, "phillips | gravity | shaw")->required();
  gen->add_option("--size", ga.size);
  gen->add_option("--nu", ga.nu, "source smoothness");
  gen->add_option("--nu-e", ga.nu_e, "assumed regularity of the package solution");
  gen->add_option("--eps", ga.eps, "relative noise level");
  gen->add_option("--seed", ga.seed);
  gen->add_option("--out", ga.out, "bundle directory");
  gen->add_flag("--csv", ga.csv, "also dump the operator as csv");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Run one solver on a problem");
  solve->add_option("--problem", sa.problem, "generate in memory: phillips | gravity | shaw");
  solve->add_option("--bundle", sa.bundle, "load a generated bundle instead");
  solve->add_option("--size", sa.size);
  solve->add_option("--nu", sa.nu);
  solve->add_option("--nu-e", sa.nu_e);
  solve->add_option("--eps", sa.eps);
  solve->add_option("--problem-seed", sa.problem_seed, "noise realization seed");
  solve->add_option("--method", sa.method, "landweber | svrg | rsvrg")->required();
  solve->add_option("--c0", sa.c0, "step size: number, c, c/4, 0.5*c, normA^-2");
  solve->add_option("--M", sa.m_expr, "inner-loop length: number, n, 2n");
  solve->add_option("--epochs", sa.epochs, "epoch cap");
  solve->add_option("--stop", sa.stop, "discrepancy | apriori | plateau | argmin | max-epochs");
  solve->add_option("--tau", sa.tau);
  solve->add_option("--apriori-c", sa.apriori_c);
  solve->add_option("--plateau-window", sa.plateau_window);
  solve->add_option("--plateau-tol", sa.plateau_tol);
  solve->add_option("--trunc-a", sa.trunc_a, "explicit truncation a (default: experimental formula)");
  solve->add_option("--trunc-b", sa.trunc_b);
  solve->add_option("--c1", sa.c1, "constant in the experimental truncation formula");
  solve->add_option("--seed", sa.seed, "index-stream seed");
  solve->add_option("--stream", sa.stream, "index-stream id");
  solve->add_option("--snapshot-every", sa.snapshot_every, "outer loops between snapshots");
  solve->add_option("--out", sa.out);

  std::string study_spec, study_out;
  int study_threads = 0;
  auto* st = app.add_subcommand("study", "Run a replication study from a spec file");
  st->add_option("--spec", study_spec, "json or yaml study spec")->required();
  st->add_option("--out", study_out);
  st->add_option("--threads", study_threads, "worker cap (0 = hardware)");

  std::string verify_suite = "all", verify_out;
  auto* vf = app.add_subcommand("verify", "Run the oracle verification suites");
  vf->add_option("--suite", verify_suite, "all | identity | kernel | variance");
  vf->add_option("--out", verify_out, "write the json report here instead of stdout");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_generate(ga);
    if (solve->parsed()) {
      if (sa.problem.empty() == sa.bundle.empty())
        throw CLI::ValidationError("solve", "pass exactly one of --problem / --bundle");
      return cmd_solve(sa);
    }
    if (st->parsed()) return cmd_study(study_spec, study_out, study_threads);
    if (vf->parsed()) return cmd_verify(verify_suite, verify_out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints usage or the --help/--version text
    return code == 0 ? 0 : 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
