#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lininv/problems.hpp"

namespace lininv {

enum class Method { landweber, svrg, rsvrg };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct StoppingRule {
  enum class Kind { discrepancy, a_priori, max_epochs, oracle_plateau, oracle_argmin };
  Kind kind = Kind::max_epochs;
  double tau = 1.01;                 // discrepancy
  double apriori_constant = 1.0;     // stop at ceil(C * delta^-exponent) epochs
  double apriori_exponent = 1.0;     // 2/(1+2nu)
  int plateau_window = 10;           // outer loops
  double plateau_tol = 1e-3;         // relative span over the window
  std::optional<double> lm_reference;  // LM rel-error at its stop, if available

  static StoppingRule discrepancy(double tau = 1.01);
  static StoppingRule a_priori(double constant, double nu);
  static StoppingRule max_epochs();
  static StoppingRule plateau(int window = 10, double tol = 1e-3,
                              std::optional<double> lm_ref = std::nullopt);
  static StoppingRule argmin();
};

std::string stopping_kind_name(StoppingRule::Kind k);

struct SolverConfig {
  Method method = Method::svrg;
  double c0 = 0.0;
  Eigen::Index M = 1;
  double max_epochs = 100.0;
  StoppingRule stopping{};
  // rsvrg: either an explicit rule or the experimental formula
  // a = (||A||/||y||) (n^{nu+nu_e}/c1)^{1/(1+2(nu+nu_e))}, b = 1/(1+2(nu+nu_e)).
  TruncationRule truncation{};
  bool auto_truncation = true;
  double c1 = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;        // replication-owned index stream
  Eigen::Index snapshot_every = 1; // outer loops between error records
  bool record_adelta = false;      // per-step ||A Delta_k||^2 trace
};

struct TrajectoryPoint {
  double epoch = 0.0;
  double rel_error = 0.0;
  double residual = 0.0;  // against the physical operator
};

struct RunRecord {
  std::vector<TrajectoryPoint> trajectory;
  double k_star_epochs = 0.0;
  double e_star = 0.0;  // rel_error at k_star
  Vector x_final;
  double wall_time = 0.0;
  std::int64_t iterations_total = 0;
  std::string stopped_by;
  SolverConfig config;
  std::vector<double> adelta_sq;       // filled when record_adelta
  Eigen::Index truncation_kept = -1;   // rsvrg
  double truncation_threshold = 0.0;   // rsvrg
  double delta = 0.0;                  // noise level the run saw
};

struct DivergenceError : std::runtime_error {
  double epoch;
  double rel_error;
  DivergenceError(double ep, double e)
      : std::runtime_error("solver diverged: rel_error " + std::to_string(e) + " at epoch " +
                           std::to_string(ep)),
        epoch(ep),
        rel_error(e) {}
};

// Step-size thresholds from the convergence theory. mean_rate_bound gates the
// expectation estimate, uniform_rate_bound the uniform one.
struct StepConstants {
  double L = 0.0;
  double mean_rate_bound = 0.0;     // max(||A||^-1 (5 L M / n)^-1/2, L^-1 (10 + ln M)^-1)
  double uniform_rate_bound = 0.0;  // (100 sqrt(L) M ||A|| ln(2 e^2 n sqrt(L) / ||A||))^-1
};

StepConstants compute_step_constants(const BlockOperator& op, Eigen::Index M);

struct StopDecision {
  double k_star_epochs = 0.0;
  std::string reason;
};

// Pure function of the trajectory so far. Returns a decision once the rule
// fires; horizon_reached forces the terminal decision for rules that only
// decide at the cap (argmin, max_epochs).
std::optional<StopDecision> stop_decision(const StoppingRule& rule,
                                          std::span<const TrajectoryPoint> trajectory,
                                          double delta, bool horizon_reached);

// First snapshot index at which the window [s-W, s] has relative span below
// tol; -1 if none.
int detect_plateau(std::span<const TrajectoryPoint> trajectory, int window, double tol);

RunRecord landweber_run(const InverseProblem& problem, const SolverConfig& config);
RunRecord svrg_run(const InverseProblem& problem, const SolverConfig& config);
RunRecord rsvrg_run(const InverseProblem& problem, const SolverConfig& config);

// rsvrg with an explicit surrogate in place of the truncated operator
// (perturbed-operator studies).
RunRecord rsvrg_run_with_surrogate(const InverseProblem& problem, const SolverConfig& config,
                                   const BlockOperator& surrogate);

// The experimental truncation rule for a problem (auto_truncation path).
TruncationRule experimental_truncation_rule(const InverseProblem& problem, double c1);

// Epoch cost of one inner iteration: (n + M) / (n M).
double epochs_per_iteration(Eigen::Index n, Eigen::Index M);

}  // namespace lininv
