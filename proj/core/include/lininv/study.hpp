#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lininv/solvers.hpp"

namespace lininv::study {

enum class NoisePolicy { shared, fresh };

// Monte-Carlo summary of `reps` solves. Index streams are keyed by
// (base_seed, replication); fresh-noise runs redraw the data per replication.
// e_* statistics follow the experimental convention
//   e_* = E[ ||x_{k*} - x||^2 ]^{1/2} / ||x||.
struct ReplicateSummary {
  int reps = 0;
  int diverged = 0;
  std::vector<double> e_stars;   // per-rep rel error at its own k*
  std::vector<double> k_stars;   // per-rep stopping epoch
  double e_star_rms = 0.0;       // RMS of per-rep e_*
  double e_star_sd = 0.0;
  double k_star_mean = 0.0;
  // RMS relative error over the common snapshot prefix (mean trajectory).
  std::vector<TrajectoryPoint> mean_trajectory;
  double common_k_star = 0.0;    // argmin epoch of the mean trajectory
  double e_star_at_common = 0.0; // RMS error there
  double plateau_error = 0.0;    // RMS error at the final common snapshot
  std::vector<double> mean_adelta_sq;  // when record_adelta
  double delta_mean = 0.0;
};

ReplicateSummary replicate(const InverseProblem& base, const SolverConfig& config, int reps,
                           std::uint64_t base_seed, NoisePolicy noise = NoisePolicy::shared,
                           int threads = 1);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  int points = 0;
};

LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

// Least-squares slope of log e_* against log delta.
LineFit fit_rate(std::span<const double> deltas, std::span<const double> errors);

// --- rate studies ----------------------------------------------------------

// Grid of solves over decreasing noise levels on the diagonal synthetic
// family (sigma_j = j^-p, x = B^nu w with ||w|| = 1). svrg stops by the
// a-priori rule k(delta) = ceil(C delta^{-2/(1+2nu)}) epochs; rsvrg truncates
// at the recommended level a = (n^nu/||w||)^{1/(1+2nu)}, b = 1/(1+2nu), and
// runs a k(delta)-proportional budget, i.e. past the bias/noise crossover.
struct RateStudyParams {
  Method method = Method::svrg;  // svrg or rsvrg
  Eigen::Index m = 100;
  double spectrum_decay = 1.5;   // p
  double w_profile = -0.5;
  double nu = 0.5;
  std::vector<double> eps_grid;  // descending
  int reps = 5;
  std::uint64_t seed = 7;
  double apriori_constant = 0.15;
  double budget_multiplier = 3.0;
  double c0_fraction = 0.5;      // of the mean-rate step bound
};

struct RatePoint {
  double eps = 0.0;
  double delta_mean = 0.0;  // realized, averaged over replications
  double e_star = 0.0;      // RMS over replications
  double e_star_sd = 0.0;
  int reps = 0;
};

struct RateStudy {
  std::string family;
  double nu = 0.0;
  double target_slope = 0.0;  // 2 nu / (1 + 2 nu)
  std::vector<RatePoint> points;
  LineFit fit;
};

RateStudy run_rate_study(const RateStudyParams& params);

// Slope of log e_* vs log delta for a populated study; validates the grid
// (>= 3 points, strictly decreasing deltas).
LineFit fit_rate(const RateStudy& study);

// Fit of log E||A Delta_k||^2 against log(k + M); anchor indices (exact
// zeros) are excluded. dominating_constant is the smallest c with
// value <= c (k+M)^-2 across the sequence.
struct BoundFit {
  double exponent = 0.0;
  double log_constant = 0.0;
  double dominating_constant = 0.0;
  int points = 0;
  bool degenerate = false;
};

BoundFit fit_trajectory_bound(std::span<const double> mean_adelta_sq, Eigen::Index M);

// Shared-seed comparison of rsvrg with the exact truncated operator vs a
// perturbed surrogate.
struct PerturbationReport {
  double e_exact = 0.0;
  double e_perturbed = 0.0;
  double abs_diff = 0.0;
  double rel_diff = 0.0;
  double surrogate_distance = 0.0;  // ||A_pert - A_trunc||
};

PerturbationReport perturbation_check(const InverseProblem& problem, const SolverConfig& config,
                                      const BlockOperator& surrogate);

// Surrogate with ||surrogate - op|| = eps_a (random direction, seeded).
BlockOperator perturb_operator(const BlockOperator& op, double eps_a, std::uint64_t seed);

// Regularizing-property check: with x taken as the raw package solution, both
// the rsvrg plateau error and the a-priori-stopped svrg error should fall as
// the noise grid decreases.
struct RegularizingCell {
  double eps = 0.0;
  double delta = 0.0;
  double rsvrg_plateau = 0.0;
  double svrg_e = 0.0;
};

struct RegularizingReport {
  std::vector<RegularizingCell> cells;  // eps descending
  int rsvrg_inversions = 0;             // plateau increases along the grid
  int svrg_inversions = 0;
  bool rsvrg_monotone = false;
  bool svrg_monotone = false;
};

RegularizingReport regularizing_check(const std::string& name, Eigen::Index size,
                                      std::span<const double> eps_grid, double c0_mult_of_c,
                                      double apriori_constant, int reps, std::uint64_t seed,
                                      double max_epochs, int threads = 1);

// --- table harness -------------------------------------------------------

struct MethodSpec {
  Method method = Method::landweber;
  std::string c0_expr = "normA^-2";  // "c", "c/4", "0.25*c", "normA^-2", or a number
  std::string m_expr = "2n";         // "2n", "n", or a number
  StoppingRule stopping{};
  double max_epochs = 1e5;
  int snapshot_every = 1;
  bool plateau_uses_lm = false;  // pass the cell's LM e_* to the plateau rule
};

struct ProblemSpec {
  std::string name;
  Eigen::Index size = 1000;
  double nu_e = 0.0;
  double c1 = 1.0;
};

struct StudySpec {
  std::vector<ProblemSpec> problems;
  std::vector<double> nus;
  std::vector<double> epss;
  std::vector<MethodSpec> methods;
  int reps = 10;
  std::uint64_t base_seed = 1;
  NoisePolicy noise = NoisePolicy::shared;
  int threads = 1;
};

struct CellResult {
  std::string problem;
  Eigen::Index size = 0;
  std::string method;
  double nu = 0.0;
  double eps = 0.0;
  double c0 = 0.0;
  Eigen::Index M = 0;
  std::string stopping;
  double delta = 0.0;
  double e_star = 0.0;
  double e_star_sd = 0.0;
  double k_star = 0.0;
  double plateau_error = 0.0;
  int diverged = 0;
  ReplicateSummary summary;
};

double resolve_c0(const std::string& expr, const BlockOperator& op);
Eigen::Index resolve_m(const std::string& expr, Eigen::Index n);

std::vector<CellResult> run_study(const StudySpec& spec);

}  // namespace lininv::study
