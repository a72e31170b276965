#include "lininv/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "lininv/rng.hpp"

namespace lininv::study {

namespace {

double spectral_distance(const BlockOperator& a, const BlockOperator& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(a.entries() - b.entries()));
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

RunRecord dispatch(const InverseProblem& p, const SolverConfig& cfg) {
  switch (cfg.method) {
    case Method::landweber: return landweber_run(p, cfg);
    case Method::svrg: return svrg_run(p, cfg);
    case Method::rsvrg: return rsvrg_run(p, cfg);
  }
  throw std::logic_error("dispatch: bad method");
}

void parallel_for(int jobs, int threads, const std::function<void(int)>& body) {
  threads = std::max(1, std::min(threads, jobs));
  if (threads == 1) {
    for (int j = 0; j < jobs; ++j) body(j);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int j = next.fetch_add(1); j < jobs; j = next.fetch_add(1)) body(j);
    });
  for (auto& th : pool) th.join();
}

// Fixed-order pairwise reduction; result is independent of thread count.
double pairwise_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  if (v.size() == 1) return v[0];
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

}  // namespace

ReplicateSummary replicate(const InverseProblem& base, const SolverConfig& config, int reps,
                           std::uint64_t base_seed, NoisePolicy noise, int threads) {
  if (reps < 1) throw std::invalid_argument("replicate: reps must be >= 1");
  std::vector<RunRecord> records(static_cast<std::size_t>(reps));
  std::vector<char> failed(static_cast<std::size_t>(reps), 0);

  parallel_for(reps, threads, [&](int rep) {
    InverseProblem local = base;
    if (noise == NoisePolicy::fresh) {
      auto nd = add_noise(base.y_exact, base.rel_noise,
                          rng::derive_seed(base_seed, static_cast<std::uint64_t>(rep)));
      local.y_noisy = std::move(nd.y);
      local.noise_level = nd.delta;
    }
    SolverConfig cfg = config;
    cfg.seed = base_seed;
    cfg.stream = static_cast<std::uint64_t>(rep);
    try {
      records[static_cast<std::size_t>(rep)] = dispatch(local, cfg);
    } catch (const DivergenceError&) {
      failed[static_cast<std::size_t>(rep)] = 1;
    }
  });

  ReplicateSummary out;
  out.reps = reps;
  std::size_t prefix = SIZE_MAX;
  for (int rep = 0; rep < reps; ++rep) {
    if (failed[static_cast<std::size_t>(rep)]) {
      ++out.diverged;
      continue;
    }
    const RunRecord& r = records[static_cast<std::size_t>(rep)];
    out.e_stars.push_back(r.e_star);
    out.k_stars.push_back(r.k_star_epochs);
    prefix = std::min(prefix, r.trajectory.size());
  }
  if (out.diverged > 0 && out.e_stars.empty()) return out;

  const auto good = static_cast<double>(out.e_stars.size());
  std::vector<double> sq(out.e_stars.size());
  for (std::size_t i = 0; i < out.e_stars.size(); ++i) sq[i] = out.e_stars[i] * out.e_stars[i];
  out.e_star_rms = std::sqrt(pairwise_sum(sq) / good);
  out.k_star_mean = pairwise_sum(out.k_stars) / good;
  out.delta_mean = 0.0;
  if (out.e_stars.size() >= 2) {
    const double mean = pairwise_sum(out.e_stars) / good;
    double acc = 0.0;
    for (double e : out.e_stars) acc += (e - mean) * (e - mean);
    out.e_star_sd = std::sqrt(acc / (good - 1.0));
  }

  // mean trajectory over the common prefix (RMS in the error, mean residual)
  if (prefix != SIZE_MAX && prefix > 0) {
    out.mean_trajectory.resize(prefix);
    std::vector<double> buf;
    for (std::size_t s = 0; s < prefix; ++s) {
      buf.clear();
      double resid = 0.0, epoch = 0.0;
      for (int rep = 0; rep < reps; ++rep) {
        if (failed[static_cast<std::size_t>(rep)]) continue;
        const auto& pt = records[static_cast<std::size_t>(rep)].trajectory[s];
        buf.push_back(pt.rel_error * pt.rel_error);
        resid += pt.residual;
        epoch = pt.epoch;
      }
      out.mean_trajectory[s] = {epoch, std::sqrt(pairwise_sum(buf) / good),
                                resid / good};
    }
    std::size_t best = 0;
    for (std::size_t s = 1; s < prefix; ++s)
      if (out.mean_trajectory[s].rel_error < out.mean_trajectory[best].rel_error) best = s;
    out.common_k_star = out.mean_trajectory[best].epoch;
    out.e_star_at_common = out.mean_trajectory[best].rel_error;
    out.plateau_error = out.mean_trajectory.back().rel_error;
  }

  // per-step E||A Delta_k||^2 when recorded
  if (config.record_adelta) {
    std::size_t len = SIZE_MAX;
    for (int rep = 0; rep < reps; ++rep)
      if (!failed[static_cast<std::size_t>(rep)])
        len = std::min(len, records[static_cast<std::size_t>(rep)].adelta_sq.size());
    if (len != SIZE_MAX) {
      out.mean_adelta_sq.assign(len, 0.0);
      std::vector<double> col(out.e_stars.size());
      for (std::size_t kk = 0; kk < len; ++kk) {
        std::size_t c = 0;
        for (int rep = 0; rep < reps; ++rep)
          if (!failed[static_cast<std::size_t>(rep)])
            col[c++] = records[static_cast<std::size_t>(rep)].adelta_sq[kk];
        out.mean_adelta_sq[kk] = pairwise_sum(col) / good;
      }
    }
  }

  double dsum = 0.0;
  for (int rep = 0; rep < reps; ++rep)
    if (!failed[static_cast<std::size_t>(rep)]) dsum += records[static_cast<std::size_t>(rep)].delta;
  out.delta_mean = dsum / good;
  return out;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int pts = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++pts;
  }
  if (pts < 2) throw std::invalid_argument("fit_loglog: fewer than two usable points");
  const double denom = pts * sxx - sx * sx;
  if (std::abs(denom) <= 1e-12 * std::max(1.0, pts * sxx))
    throw std::invalid_argument("fit_loglog: degenerate abscissa");
  LineFit f;
  f.slope = (pts * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / pts;
  f.points = pts;
  return f;
}

LineFit fit_rate(std::span<const double> deltas, std::span<const double> errors) {
  if (deltas.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 grid points");
  return fit_loglog(deltas, errors);
}

RateStudy run_rate_study(const RateStudyParams& params) {
  if (params.method == Method::landweber)
    throw std::invalid_argument("run_rate_study: landweber has no rate protocol here");
  RateStudy out;
  out.family = "diagonal";
  out.nu = params.nu;
  out.target_slope = 2.0 * params.nu / (1.0 + 2.0 * params.nu);

  auto base = make_diagonal_problem(params.m, params.spectrum_decay, params.nu, /*eps=*/0.0,
                                    params.seed, params.w_profile);
  const Eigen::Index M = 2 * params.m;
  auto sc = compute_step_constants(base.op, M);
  const double c0 = params.c0_fraction * sc.mean_rate_bound;
  const double a_level = choose_truncation_level(params.m, params.nu, 1.0);  // ||w|| = 1
  const double ep_per_it = epochs_per_iteration(params.m, M);

  for (std::size_t ie = 0; ie < params.eps_grid.size(); ++ie) {
    RatePoint pt;
    pt.eps = params.eps_grid[ie];
    pt.reps = params.reps;
    double sq = 0.0, ssum = 0.0;
    std::vector<double> es;
    for (int rep = 0; rep < params.reps; ++rep) {
      InverseProblem p = base;
      p.rel_noise = pt.eps;
      auto nd = add_noise(p.y_exact, pt.eps,
                          rng::derive_seed(params.seed, 1000 * ie + static_cast<std::uint64_t>(rep)));
      p.y_noisy = std::move(nd.y);
      p.noise_level = nd.delta;
      SolverConfig cfg;
      cfg.method = params.method;
      cfg.c0 = c0;
      cfg.M = M;
      cfg.seed = params.seed;
      cfg.stream = 1000 * ie + static_cast<std::uint64_t>(rep);
      double e = 0.0;
      if (params.method == Method::svrg) {
        cfg.stopping = StoppingRule::a_priori(params.apriori_constant, params.nu);
        cfg.max_epochs = 1e9;  // the a-priori rule terminates
        e = svrg_run(p, cfg).e_star;
      } else {
        cfg.auto_truncation = false;
        cfg.truncation = {a_level, 1.0 / (1.0 + 2.0 * params.nu)};
        const double k_delta = std::pow(
            p.noise_level, -2.0 * params.nu / ((1.0 + 2.0 * params.nu) * std::min(params.nu, 0.5)));
        const double outer =
            std::max(2.0, std::ceil(params.budget_multiplier * k_delta / static_cast<double>(M)));
        cfg.max_epochs = outer * static_cast<double>(M) * ep_per_it;
        e = rsvrg_run(p, cfg).trajectory.back().rel_error;
      }
      es.push_back(e);
      sq += e * e;
      ssum += p.noise_level;
    }
    pt.e_star = std::sqrt(sq / params.reps);
    pt.delta_mean = ssum / params.reps;
    if (params.reps >= 2) {
      double mean = 0.0;
      for (double e : es) mean += e;
      mean /= params.reps;
      double acc = 0.0;
      for (double e : es) acc += (e - mean) * (e - mean);
      pt.e_star_sd = std::sqrt(acc / (params.reps - 1.0));
    }
    out.points.push_back(pt);
  }
  out.fit = fit_rate(out);
  return out;
}

LineFit fit_rate(const RateStudy& study) {
  if (study.points.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 grid points");
  std::vector<double> ds, es;
  for (const auto& pt : study.points) {
    if (!ds.empty() && pt.delta_mean >= ds.back())
      throw std::invalid_argument("fit_rate: delta grid must be strictly decreasing");
    ds.push_back(pt.delta_mean);
    es.push_back(pt.e_star);
  }
  return fit_loglog(ds, es);
}

BoundFit fit_trajectory_bound(std::span<const double> mean_adelta_sq, Eigen::Index M) {
  BoundFit out;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < mean_adelta_sq.size(); ++k) {
    if (k % static_cast<std::size_t>(M) == 0) continue;  // anchors: Delta = 0 by definition
    if (!(mean_adelta_sq[k] > 0.0)) continue;
    xs.push_back(static_cast<double>(k) + static_cast<double>(M));
    ys.push_back(mean_adelta_sq[k]);
  }
  if (xs.size() < 2) {
    out.degenerate = true;
    return out;
  }
  LineFit f = fit_loglog(xs, ys);
  out.exponent = f.slope;
  out.log_constant = f.intercept;
  out.points = f.points;
  for (std::size_t i = 0; i < xs.size(); ++i)
    out.dominating_constant = std::max(out.dominating_constant, ys[i] * xs[i] * xs[i]);
  return out;
}

PerturbationReport perturbation_check(const InverseProblem& problem, const SolverConfig& config,
                                      const BlockOperator& surrogate) {
  PerturbationReport rep;
  RunRecord exact = rsvrg_run(problem, config);
  RunRecord pert = rsvrg_run_with_surrogate(problem, config, surrogate);
  TruncationRule rule =
      config.auto_truncation ? experimental_truncation_rule(problem, config.c1) : config.truncation;
  Truncation t = truncate(problem.op, rule, problem.noise_level);
  rep.surrogate_distance = spectral_distance(t.op, surrogate);
  rep.e_exact = exact.trajectory.back().rel_error;
  rep.e_perturbed = pert.trajectory.back().rel_error;
  rep.abs_diff = std::abs(rep.e_exact - rep.e_perturbed);
  rep.rel_diff = rep.abs_diff / std::max(rep.e_exact, 1e-300);
  return rep;
}

BlockOperator perturb_operator(const BlockOperator& op, double eps_a, std::uint64_t seed) {
  if (eps_a < 0.0) throw std::invalid_argument("perturb_operator: eps_a must be >= 0");
  if (eps_a == 0.0) return op;
  Matrix g(op.rows(), op.cols());
  std::uint64_t ctr = 0;
  for (Eigen::Index i = 0; i < op.rows(); ++i)
    for (Eigen::Index j = 0; j < op.cols(); ++j)
      g(i, j) = rng::standard_normal(seed, rng::kPerturbStream, ctr++);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g);
  g *= eps_a / svd.singularValues()(0);
  return compute_norms(BlockOperator(Matrix(op.entries() + g), op.partition()));
}

RegularizingReport regularizing_check(const std::string& name, Eigen::Index size,
                                      std::span<const double> eps_grid, double c0_mult_of_c,
                                      double apriori_constant, int reps, std::uint64_t seed,
                                      double max_epochs, int threads) {
  RegularizingReport out;
  for (double eps : eps_grid) {
    InverseProblem p = make_problem(name, size, /*nu=*/0.0, eps, seed);
    const double c0 = c0_mult_of_c / p.op.max_block_norm_sq();
    const Eigen::Index M = 2 * p.op.block_count();

    SolverConfig rcfg;
    rcfg.method = Method::rsvrg;
    rcfg.c0 = c0;
    rcfg.M = M;
    rcfg.max_epochs = max_epochs;
    rcfg.stopping = StoppingRule::plateau();
    auto rsum = replicate(p, rcfg, reps, seed, NoisePolicy::shared, threads);

    SolverConfig scfg = rcfg;
    scfg.method = Method::svrg;
    scfg.stopping = StoppingRule::a_priori(apriori_constant, /*nu=*/0.0);
    auto ssum = replicate(p, scfg, reps, seed, NoisePolicy::shared, threads);

    out.cells.push_back({eps, p.noise_level, rsum.plateau_error, ssum.e_star_rms});
  }
  for (std::size_t i = 1; i < out.cells.size(); ++i) {
    if (out.cells[i].rsvrg_plateau > out.cells[i - 1].rsvrg_plateau) ++out.rsvrg_inversions;
    if (out.cells[i].svrg_e > out.cells[i - 1].svrg_e) ++out.svrg_inversions;
  }
  out.rsvrg_monotone = out.rsvrg_inversions == 0;
  out.svrg_monotone = out.svrg_inversions == 0;
  return out;
}

double resolve_c0(const std::string& expr, const BlockOperator& op) {
  const double c = 1.0 / op.max_block_norm_sq();
  if (expr == "c") return c;
  if (expr == "normA^-2") return 1.0 / (op.op_norm() * op.op_norm());
  if (expr.rfind("c/", 0) == 0) return c / std::stod(expr.substr(2));
  const auto star = expr.find("*c");
  if (star != std::string::npos && star + 2 == expr.size())
    return std::stod(expr.substr(0, star)) * c;
  std::size_t pos = 0;
  const double v = std::stod(expr, &pos);
  if (pos != expr.size()) throw std::invalid_argument("bad c0 expression '" + expr + "'");
  if (v <= 0.0) throw std::invalid_argument("c0 expression must resolve to a positive value");
  return v;
}

Eigen::Index resolve_m(const std::string& expr, Eigen::Index n) {
  if (expr == "2n") return 2 * n;
  if (expr == "n") return n;
  std::size_t pos = 0;
  const long v = std::stol(expr, &pos);
  if (pos != expr.size() || v < 1) throw std::invalid_argument("bad M expression '" + expr + "'");
  return static_cast<Eigen::Index>(v);
}

std::vector<CellResult> run_study(const StudySpec& spec) {
  std::vector<CellResult> cells;
  for (const auto& ps : spec.problems) {
    for (double nu : spec.nus) {
      for (double eps : spec.epss) {
        InverseProblem p = make_problem(ps.name, ps.size, nu, eps, spec.base_seed, ps.nu_e);
        std::optional<double> lm_e_star;
        for (const auto& ms : spec.methods) {
          SolverConfig cfg;
          cfg.method = ms.method;
          cfg.c0 = resolve_c0(ms.c0_expr, p.op);
          cfg.M = resolve_m(ms.m_expr, p.op.block_count());
          cfg.max_epochs = ms.max_epochs;
          cfg.stopping = ms.stopping;
          cfg.c1 = ps.c1;
          cfg.snapshot_every = ms.snapshot_every;
          if (cfg.stopping.kind == StoppingRule::Kind::a_priori)
            cfg.stopping.apriori_exponent = 2.0 / (1.0 + 2.0 * nu);
          if (ms.plateau_uses_lm && lm_e_star) cfg.stopping.lm_reference = lm_e_star;

          const int reps = ms.method == Method::landweber ? 1 : spec.reps;
          auto sum = replicate(p, cfg, reps, spec.base_seed, spec.noise, spec.threads);

          CellResult cell;
          cell.problem = ps.name;
          cell.size = ps.size;
          cell.method = method_name(ms.method);
          cell.nu = nu;
          cell.eps = eps;
          cell.c0 = cfg.c0;
          cell.M = cfg.M;
          cell.stopping = stopping_kind_name(cfg.stopping.kind);
          cell.delta = p.noise_level;
          cell.e_star = cfg.stopping.kind == StoppingRule::Kind::oracle_argmin
                            ? sum.e_star_at_common
                            : sum.e_star_rms;
          cell.e_star_sd = sum.e_star_sd;
          cell.k_star = cfg.stopping.kind == StoppingRule::Kind::oracle_argmin
                            ? sum.common_k_star
                            : sum.k_star_mean;
          cell.plateau_error = sum.plateau_error;
          cell.diverged = sum.diverged;
          cell.summary = std::move(sum);
          if (ms.method == Method::landweber) lm_e_star = cell.e_star;
          cells.push_back(std::move(cell));
        }
      }
    }
  }
  return cells;
}

}  // namespace lininv::study
