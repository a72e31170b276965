#include "lininv/solvers.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>

#include "lininv/rng.hpp"

namespace lininv {

namespace {

constexpr double kDivergenceGuard = 1e6;

double rel_error_of(const Vector& x, const Vector& x_exact, double x_exact_norm) {
  return (x - x_exact).norm() / x_exact_norm;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::landweber: return "landweber";
    case Method::svrg: return "svrg";
    case Method::rsvrg: return "rsvrg";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "landweber" || name == "lm") return Method::landweber;
  if (name == "svrg") return Method::svrg;
  if (name == "rsvrg") return Method::rsvrg;
  throw std::invalid_argument("unknown method '" + name + "'");
}

StoppingRule StoppingRule::discrepancy(double tau) {
  if (tau <= 1.0) throw std::invalid_argument("discrepancy: tau must be > 1");
  StoppingRule r;
  r.kind = Kind::discrepancy;
  r.tau = tau;
  return r;
}

StoppingRule StoppingRule::a_priori(double constant, double nu) {
  StoppingRule r;
  r.kind = Kind::a_priori;
  r.apriori_constant = constant;
  r.apriori_exponent = 2.0 / (1.0 + 2.0 * nu);
  return r;
}

StoppingRule StoppingRule::max_epochs() { return StoppingRule{}; }

StoppingRule StoppingRule::plateau(int window, double tol, std::optional<double> lm_ref) {
  StoppingRule r;
  r.kind = Kind::oracle_plateau;
  r.plateau_window = window;
  r.plateau_tol = tol;
  r.lm_reference = lm_ref;
  return r;
}

StoppingRule StoppingRule::argmin() {
  StoppingRule r;
  r.kind = Kind::oracle_argmin;
  return r;
}

std::string stopping_kind_name(StoppingRule::Kind k) {
  switch (k) {
    case StoppingRule::Kind::discrepancy: return "discrepancy";
    case StoppingRule::Kind::a_priori: return "a_priori";
    case StoppingRule::Kind::max_epochs: return "max_epochs";
    case StoppingRule::Kind::oracle_plateau: return "oracle_plateau";
    case StoppingRule::Kind::oracle_argmin: return "oracle_argmin";
  }
  return "?";
}

StepConstants compute_step_constants(const BlockOperator& op, Eigen::Index M) {
  if (M < 1) throw std::invalid_argument("compute_step_constants: M must be >= 1");
  StepConstants c;
  c.L = op.max_block_norm_sq();
  const double norm = op.op_norm();
  const double n = static_cast<double>(op.block_count());
  const double m = static_cast<double>(M);
  c.mean_rate_bound = std::max(1.0 / (norm * std::sqrt(5.0 * c.L * m / n)),
                               1.0 / (c.L * (10.0 + std::log(m))));
  c.uniform_rate_bound =
      1.0 / (100.0 * std::sqrt(c.L) * m * norm * std::log(2.0 * std::exp(2.0) * n * std::sqrt(c.L) / norm));
  return c;
}

double epochs_per_iteration(Eigen::Index n, Eigen::Index M) {
  return static_cast<double>(n + M) / (static_cast<double>(n) * static_cast<double>(M));
}

int detect_plateau(std::span<const TrajectoryPoint> trajectory, int window, double tol) {
  for (int s = window; s < static_cast<int>(trajectory.size()); ++s) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int j = s - window; j <= s; ++j) {
      lo = std::min(lo, trajectory[static_cast<std::size_t>(j)].rel_error);
      hi = std::max(hi, trajectory[static_cast<std::size_t>(j)].rel_error);
    }
    if (hi - lo <= tol * std::max(lo, 1e-300)) return s;
  }
  return -1;
}

std::optional<StopDecision> stop_decision(const StoppingRule& rule,
                                          std::span<const TrajectoryPoint> trajectory,
                                          double delta, bool horizon_reached) {
  if (trajectory.empty()) return std::nullopt;
  const TrajectoryPoint& last = trajectory.back();
  switch (rule.kind) {
    case StoppingRule::Kind::discrepancy:
      if (delta > 0.0 && last.residual <= rule.tau * delta)
        return StopDecision{last.epoch, "discrepancy"};
      break;
    case StoppingRule::Kind::a_priori: {
      if (delta > 0.0) {
        const double target =
            std::ceil(rule.apriori_constant * std::pow(delta, -rule.apriori_exponent));
        if (last.epoch >= target) return StopDecision{last.epoch, "a_priori"};
      }
      break;
    }
    case StoppingRule::Kind::max_epochs:
      break;
    case StoppingRule::Kind::oracle_plateau: {
      const int p = detect_plateau(trajectory, rule.plateau_window, rule.plateau_tol);
      if (p >= 0) {
        double k_star = trajectory[static_cast<std::size_t>(p)].epoch;
        if (rule.lm_reference) {
          if (last.rel_error > *rule.lm_reference) break;  // still above LM, keep going
          // first snapshot after the last time the error exceeded the reference
          double after_exceed = 0.0;
          for (std::size_t i = trajectory.size(); i-- > 0;) {
            if (trajectory[i].rel_error > *rule.lm_reference) {
              after_exceed = i + 1 < trajectory.size() ? trajectory[i + 1].epoch : last.epoch;
              break;
            }
          }
          k_star = std::max(k_star, after_exceed);
        }
        return StopDecision{k_star, "plateau"};
      }
      break;
    }
    case StoppingRule::Kind::oracle_argmin:
      if (horizon_reached) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < trajectory.size(); ++i)
          if (trajectory[i].rel_error < trajectory[best].rel_error) best = i;
        return StopDecision{trajectory[best].epoch, "argmin"};
      }
      return std::nullopt;
  }
  if (horizon_reached) return StopDecision{last.epoch, "max_epochs"};
  return std::nullopt;
}

TruncationRule experimental_truncation_rule(const InverseProblem& problem, double c1) {
  if (c1 <= 0.0) throw std::invalid_argument("truncation rule: c1 must be > 0");
  const double p = problem.smoothness + problem.base_smoothness;
  TruncationRule rule;
  rule.b = 1.0 / (1.0 + 2.0 * p);
  const double n = static_cast<double>(problem.op.block_count());
  rule.a = (problem.op.op_norm() / problem.y_exact.norm()) *
           std::pow(std::pow(n, p) / c1, 1.0 / (1.0 + 2.0 * p));
  return rule;
}

namespace {

double finish_record(RunRecord& rec, const StoppingRule& rule, double delta) {
  auto dec = stop_decision(rule, rec.trajectory, delta, true);
  rec.k_star_epochs = dec->k_star_epochs;
  rec.stopped_by = dec->reason;
  double e = rec.trajectory.back().rel_error;
  for (const auto& pt : rec.trajectory)
    if (pt.epoch == dec->k_star_epochs) e = pt.rel_error;
  rec.e_star = e;
  return e;
}

RunRecord landweber_impl(const InverseProblem& problem, const SolverConfig& config) {
  const Matrix& a = problem.op.entries();
  const double inv_norm_sq = 1.0 / (problem.op.op_norm() * problem.op.op_norm());
  if (config.c0 <= 0.0) throw std::invalid_argument("landweber: c0 must be > 0");
  if (config.c0 > inv_norm_sq * (1.0 + 1e-12))
    std::cerr << "[lininv] warning: landweber c0=" << config.c0 << " exceeds ||A||^-2="
              << inv_norm_sq << "\n";

  RunRecord rec;
  rec.config = config;
  rec.delta = problem.noise_level;
  Vector x = problem.x0;
  const double xnorm = problem.x_exact.norm();
  Vector resid = a * x - problem.y_noisy;
  rec.trajectory.push_back({0.0, rel_error_of(x, problem.x_exact, xnorm), resid.norm()});

  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t k = 0;
  const auto horizon = static_cast<std::int64_t>(config.max_epochs);
  while (true) {
    if (stop_decision(config.stopping, rec.trajectory, problem.noise_level, k >= horizon)) break;
    x -= config.c0 * (a.transpose() * resid);
    ++k;
    resid = a * x - problem.y_noisy;
    const double rel = rel_error_of(x, problem.x_exact, xnorm);
    if (rel > kDivergenceGuard) throw DivergenceError(static_cast<double>(k), rel);
    rec.trajectory.push_back({static_cast<double>(k), rel, resid.norm()});
  }
  rec.iterations_total = k;
  rec.x_final = std::move(x);
  finish_record(rec, config.stopping, problem.noise_level);
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

// Shared inner loop of Algorithms 1 and 2; `oper` is A for svrg and the
// truncated surrogate for rsvrg. Residuals are always reported against the
// physical operator.
RunRecord variance_reduced_impl(const InverseProblem& problem, const SolverConfig& config,
                                const BlockOperator& oper) {
  const Matrix& a = oper.entries();
  const Matrix& a_phys = problem.op.entries();
  const Eigen::Index n = oper.block_count();
  const Eigen::Index m = oper.cols();
  const Eigen::Index M = config.M;
  if (M < 1) throw std::invalid_argument("svrg: M must be >= 1");
  if (config.c0 <= 0.0) throw std::invalid_argument("svrg: c0 must be > 0");
  const double L = oper.max_block_norm_sq();
  if (L > 0.0 && config.c0 > (1.0 / L) * (1.0 + 1e-12))
    throw std::invalid_argument("svrg: c0 exceeds 1/L (step-size assumption)");

  RunRecord rec;
  rec.config = config;
  rec.delta = problem.noise_level;
  const double xnorm = problem.x_exact.norm();
  const double ep_per_it = epochs_per_iteration(n, M);

  Vector x = problem.x0;
  rec.trajectory.push_back({0.0, rel_error_of(x, problem.x_exact, xnorm),
                            (a_phys * x - problem.y_noisy).norm()});

  const auto t0 = std::chrono::steady_clock::now();
  std::int64_t iter = 0;
  Vector anchor(m), g(m), d(m);
  bool done = false;
  if (stop_decision(config.stopping, rec.trajectory, problem.noise_level, false)) done = true;

  std::int64_t outer = 0;
  while (!done) {
    anchor = x;
    g = (a.transpose() * (a * anchor - problem.y_noisy)) / static_cast<double>(n);
    for (Eigen::Index t = 0; t < M; ++t) {
      if (config.record_adelta) {
        d = x - anchor;
        rec.adelta_sq.push_back((a * d).squaredNorm());
      }
      if (n == 1) {
        // N_j vanishes: the update is the exact full-gradient step.
        x -= config.c0 * (a.transpose() * (a * x - problem.y_noisy));
      } else {
        const auto i =
            static_cast<Eigen::Index>(rng::uniform_index(config.seed, config.stream,
                                                         static_cast<std::uint64_t>(iter),
                                                         static_cast<std::uint64_t>(n)));
        d = x - anchor;
        auto blk = oper.block(i);
        x -= config.c0 * (blk.transpose() * (blk * d) + g);
      }
      ++iter;
    }
    ++outer;
    if (outer % config.snapshot_every == 0) {
      const double ep = static_cast<double>(iter) * ep_per_it;
      const double rel = rel_error_of(x, problem.x_exact, xnorm);
      if (rel > kDivergenceGuard) throw DivergenceError(ep, rel);
      rec.trajectory.push_back({ep, rel, (a_phys * x - problem.y_noisy).norm()});
      const bool horizon = ep >= config.max_epochs - 1e-9;
      if (stop_decision(config.stopping, rec.trajectory, problem.noise_level, horizon)) done = true;
    }
  }
  rec.iterations_total = iter;
  rec.x_final = std::move(x);
  finish_record(rec, config.stopping, problem.noise_level);
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

}  // namespace

RunRecord landweber_run(const InverseProblem& problem, const SolverConfig& config) {
  return landweber_impl(problem, config);
}

RunRecord svrg_run(const InverseProblem& problem, const SolverConfig& config) {
  return variance_reduced_impl(problem, config, problem.op);
}

RunRecord rsvrg_run(const InverseProblem& problem, const SolverConfig& config) {
  TruncationRule rule =
      config.auto_truncation ? experimental_truncation_rule(problem, config.c1) : config.truncation;
  Truncation t = truncate(problem.op, rule, problem.noise_level);
  if (t.kept == 0)
    throw std::domain_error("rsvrg: truncation removed every singular value");
  RunRecord rec = variance_reduced_impl(problem, config, t.op);
  rec.truncation_kept = t.kept;
  rec.truncation_threshold = t.threshold;
  return rec;
}

RunRecord rsvrg_run_with_surrogate(const InverseProblem& problem, const SolverConfig& config,
                                   const BlockOperator& surrogate) {
  if (surrogate.op_norm() == 0.0)
    throw std::domain_error("rsvrg: surrogate operator is zero");
  return variance_reduced_impl(problem, config, surrogate);
}

}  // namespace lininv
