#include "lininv/oracle.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lininv/rng.hpp"

namespace lininv::oracle {

namespace {

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
}

Matrix matrix_sqrt_psd(const Matrix& b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return r;
}

}  // namespace

OracleState make_state(const InverseProblem& problem, const SolverConfig& config,
                       const BlockOperator& operating) {
  OracleState st;
  st.n = operating.block_count();
  st.M = config.M;
  st.c0 = config.c0;
  auto [b, p] = derived_operators(operating, config.c0);
  st.B = std::move(b);
  st.P = std::move(p);
  st.B_dag = derived_operators(problem.op, config.c0).first;
  st.B_delta = st.B_dag - st.B;
  Vector xi = problem.y_noisy - problem.y_exact;
  st.zeta = (operating.entries().transpose() * xi) / static_cast<double>(st.n);
  st.e0 = problem.x0 - problem.x_exact;
  return st;
}

Vector exact_mean_error(const OracleState& state, Eigen::Index k) {
  if (k < 0) throw std::invalid_argument("exact_mean_error: k must be >= 0");
  Vector bias = state.e0;
  Vector noise_acc = Vector::Zero(state.e0.size());
  Vector pj_zeta = state.zeta;  // P^j zeta, starting at j = 0
  for (Eigen::Index j = 0; j < k; ++j) {
    noise_acc += pj_zeta;
    pj_zeta = state.P * pj_zeta;
    bias = state.P * bias;  // after loop: P^k e0
  }
  return bias + state.c0 * noise_acc;
}

EnumerationResult enumerate_expectation(const InverseProblem& problem, const SolverConfig& config,
                                        const BlockOperator& operating, Eigen::Index k) {
  const Eigen::Index n = operating.block_count();
  const double paths_d = std::pow(static_cast<double>(n), static_cast<double>(k));
  if (paths_d > 1e7) throw std::invalid_argument("enumerate_expectation: n^k exceeds 1e7");
  const auto paths = static_cast<std::int64_t>(paths_d);
  const Eigen::Index m = operating.cols();
  const Matrix& a = operating.entries();
  OracleState st = make_state(problem, config, operating);

  // Powers of P for the variance assembly terms.
  std::vector<Matrix> p_pow(static_cast<std::size_t>(k > 0 ? k : 1));
  p_pow[0] = Matrix::Identity(m, m);
  for (Eigen::Index j = 1; j < k; ++j) p_pow[static_cast<std::size_t>(j)] = st.P * p_pow[static_cast<std::size_t>(j - 1)];

  EnumerationResult out;
  out.mean_iterate = Vector::Zero(m);
  out.variance_terms.assign(static_cast<std::size_t>(k > 0 ? k : 0), 0.0);
  const double prob = 1.0 / paths_d;

  Vector x(m), anchor(m), g(m), d(m), nd(m);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k > 0 ? k : 1), 0);
  for (std::int64_t path = 0; path < paths; ++path) {
    std::int64_t rem = path;
    for (Eigen::Index j = 0; j < k; ++j) {
      idx[static_cast<std::size_t>(j)] = static_cast<Eigen::Index>(rem % n);
      rem /= n;
    }
    x = problem.x0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (j % config.M == 0) {
        anchor = x;
        g = (a.transpose() * (a * anchor - problem.y_noisy)) / static_cast<double>(n);
      }
      d = x - anchor;
      const Eigen::Index i = idx[static_cast<std::size_t>(j)];
      auto blk = operating.block(i);
      // variance assembly term: P^{k-1-j} N_j Delta_j, N_j = B - A_i^T A_i
      nd = st.B * d - blk.transpose() * (blk * d);
      out.variance_terms[static_cast<std::size_t>(j)] +=
          prob * (p_pow[static_cast<std::size_t>(k - 1 - j)] * nd).squaredNorm();
      x -= config.c0 * (blk.transpose() * (blk * d) + g);
    }
    // Delta_k = x_k - x_{[k/M]M}; identically zero at anchor indices.
    if (k > 0 && k % config.M != 0) {
      d = x - anchor;
      out.mean_adelta_sq += prob * (a * d).squaredNorm();
    }
    out.mean_iterate += prob * x;
    out.mean_sq_error += prob * (x - problem.x_exact).squaredNorm();
  }
  out.variance = out.mean_sq_error - (out.mean_iterate - problem.x_exact).squaredNorm();
  return out;
}

KernelReport verify_kernel_bounds(const std::vector<double>& lambda_grid, double c0,
                                  const std::vector<double>& s_grid,
                                  const std::vector<Eigen::Index>& k_grid,
                                  const std::vector<Eigen::Index>& t_grid,
                                  const std::vector<double>& eps_grid) {
  double bnorm = 0.0;
  for (double lam : lambda_grid) {
    if (lam < 0.0) throw std::invalid_argument("verify_kernel_bounds: negative eigenvalue");
    bnorm = std::max(bnorm, lam);
  }
  if (c0 * bnorm > 1.0 + 1e-12)
    throw std::invalid_argument("verify_kernel_bounds: c0 ||B|| must be <= 1");

  KernelReport rep;
  const double tol = 1e-12;
  auto record = [&](std::vector<Violation>& sink, const char* bound, double lam, double s,
                    Eigen::Index k, Eigen::Index t, double eps, double lhs, double rhs) {
    sink.push_back({bound, lam, s, eps, k, t, lhs, rhs});
  };
  auto track = [&](double lhs, double rhs) {
    if (rhs > 0.0) rep.worst_slack = std::min(rep.worst_slack, (rhs - lhs) / rhs);
  };

  for (Eigen::Index k : k_grid) {
    // ||B^s P^k||
    for (double s : s_grid) {
      const double rhs = (s == 0.0) ? 1.0 : std::pow(s, s) * std::pow(c0, -s) *
                                                std::pow(static_cast<double>(k), -s);
      double lhs = 0.0, arg = 0.0;
      for (double lam : lambda_grid) {
        const double v = std::pow(lam, s) * std::pow(1.0 - c0 * lam, static_cast<double>(k));
        if (v > lhs) { lhs = v; arg = lam; }
      }
      ++rep.checks;
      track(lhs, rhs);
      if (lhs > rhs + tol) record(rep.violations, "B^s P^k", arg, s, k, 0, 0.0, lhs, rhs);
    }
    for (Eigen::Index t : t_grid) {
      // ||(I - P^t) P^k||
      {
        const double rhs = static_cast<double>(t) / static_cast<double>(k + t);
        double lhs = 0.0, arg = 0.0;
        for (double lam : lambda_grid) {
          const double q = 1.0 - c0 * lam;
          const double v = (1.0 - std::pow(q, static_cast<double>(t))) *
                           std::pow(q, static_cast<double>(k));
          if (v > lhs) { lhs = v; arg = lam; }
        }
        ++rep.checks;
        track(lhs, rhs);
        if (lhs > rhs + tol) record(rep.violations, "(I-P^t) P^k", arg, 0, k, t, 0.0, lhs, rhs);
      }
      // ||B^1/2 (I - P^t) P^k||
      for (double eps : eps_grid) {
        const double rhs = std::pow(2.0, 1.0 + eps) * std::pow(eps, eps) * std::pow(c0, -eps) *
                           std::pow(bnorm, 0.5 - eps) * static_cast<double>(t) *
                           std::pow(static_cast<double>(k + t), -(1.0 + eps));
        double lhs = 0.0, arg = 0.0;
        for (double lam : lambda_grid) {
          const double q = 1.0 - c0 * lam;
          const double v = std::sqrt(lam) * (1.0 - std::pow(q, static_cast<double>(t))) *
                           std::pow(q, static_cast<double>(k));
          if (v > lhs) { lhs = v; arg = lam; }
        }
        if (k >= t) {
          ++rep.checks;
          track(lhs, rhs);
          if (lhs > rhs + tol)
            record(rep.violations, "B^1/2 (I-P^t) P^k", arg, 0.5, k, t, eps, lhs, rhs);
        } else if (lhs > rhs + tol) {
          record(rep.out_of_domain, "B^1/2 (I-P^t) P^k (k<t)", arg, 0.5, k, t, eps, lhs, rhs);
        }
      }
    }
  }
  return rep;
}

VarianceBoundReport verify_variance_operator_bound(const BlockOperator& op, const Matrix& R,
                                                   const Vector& delta_vec, double slack) {
  const Eigen::Index n = op.block_count();
  const double nn = static_cast<double>(n);
  const Matrix b = (op.entries().transpose() * op.entries()) / nn;
  const Matrix b_half = matrix_sqrt_psd(b);
  const double norm_r = spectral_norm(R);
  const double norm_rb_half = spectral_norm(Matrix(R * b_half));
  const double L = op.max_block_norm_sq();
  const double a_delta_sq = (op.entries() * delta_vec).squaredNorm();

  VarianceBoundReport rep;
  rep.mean_rhs = std::min(L * norm_r * norm_r / nn, norm_rb_half * norm_rb_half) * a_delta_sq;
  const double uniform_rhs =
      std::min(std::sqrt(L) * norm_r, std::sqrt(nn) * norm_rb_half) * std::sqrt(a_delta_sq);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto blk = op.block(i);
    Vector nd = b * delta_vec - blk.transpose() * (blk * delta_vec);
    const double norm_rnd = (R * nd).norm();
    rep.mean_lhs += norm_rnd * norm_rnd / nn;
    if (uniform_rhs > 0.0)
      rep.worst_uniform_slack =
          std::min(rep.worst_uniform_slack, (uniform_rhs - norm_rnd) / uniform_rhs);
    if (norm_rnd > uniform_rhs + slack) {
      rep.violated = true;
      rep.violations.push_back({"||R N_i d|| uniform", 0, 0, 0, i, 0, norm_rnd, uniform_rhs});
    }
  }
  if (rep.mean_lhs > rep.mean_rhs + slack) {
    rep.violated = true;
    rep.violations.push_back({"E||R N d||^2", 0, 0, 0, 0, 0, rep.mean_lhs, rep.mean_rhs});
  }
  return rep;
}

SuiteReport run_identity_suite(Eigen::Index k_max, std::vector<Eigen::Index> Ms, double tol) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport rep;
  rep.name = "identity";

  // 2x2 diagonal instances, with and without noise, svrg and truncated rsvrg.
  struct Case { double s1, s2, eps, a; };
  const std::vector<Case> cases = {
      {1.0, 0.5, 0.0, 0.0}, {1.0, 0.5, 1e-1, 0.0}, {0.8, 0.3, 5e-2, 0.0},
      {1.0, 0.25, 1e-1, 0.6},  // truncation drops the second singular value
  };
  for (const auto& cs : cases) {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = cs.s1;
    a(1, 1) = cs.s2;
    InverseProblem p;
    p.op = compute_norms(BlockOperator::row_partitioned(a));
    p.x_exact = Vector::Constant(2, 1.0);
    p.y_exact = p.op.entries() * p.x_exact;
    auto noisy = add_noise(p.y_exact, cs.eps, 7);
    p.y_noisy = noisy.y;
    p.noise_level = noisy.delta;
    p.x0 = Vector::Zero(2);

    BlockOperator operating = p.op;
    if (cs.a > 0.0) {
      // threshold a * 0.5 sits between the two singular values
      operating = truncate(p.op, TruncationRule{cs.a, 1.0}, 0.5).op;
    }
    for (Eigen::Index M : Ms) {
      SolverConfig cfg;
      cfg.M = M;
      cfg.c0 = 0.3 / p.op.max_block_norm_sq();
      OracleState st = make_state(p, cfg, operating);
      for (Eigen::Index k = 0; k <= k_max; ++k) {
        auto en = enumerate_expectation(p, cfg, operating, k);
        // closed-form bias vs enumeration
        Vector closed = exact_mean_error(st, k);
        const double bias_err = (closed - (en.mean_iterate - p.x_exact)).cwiseAbs().maxCoeff();
        // variance assembly: E||e_k - E e_k||^2 = c0^2 sum_j E||P^{k-1-j} N_j Delta_j||^2
        double assembled = 0.0;
        for (double term : en.variance_terms) assembled += term;
        assembled *= cfg.c0 * cfg.c0;
        const double var_err = std::abs(assembled - en.variance);
        rep.checks += 2;
        rep.worst_abs_err = std::max({rep.worst_abs_err, bias_err, var_err});
        if (bias_err > tol) ++rep.violations;
        if (var_err > tol) ++rep.violations;
      }
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.pass = rep.violations == 0;
  return rep;
}

SuiteReport run_kernel_suite(int lambda_points, Eigen::Index kt_max) {
  const auto t0 = std::chrono::steady_clock::now();
  const double c0 = 1.0;
  std::vector<double> lambda_grid(static_cast<std::size_t>(lambda_points));
  for (int i = 0; i < lambda_points; ++i)
    lambda_grid[static_cast<std::size_t>(i)] =
        static_cast<double>(i) / static_cast<double>(lambda_points - 1) / c0;
  std::vector<Eigen::Index> kt(static_cast<std::size_t>(kt_max));
  for (Eigen::Index i = 0; i < kt_max; ++i) kt[static_cast<std::size_t>(i)] = i + 1;
  auto kr = verify_kernel_bounds(lambda_grid, c0, {0.0, 0.25, 0.5, 1.0, 2.0}, kt, kt,
                                 {0.1, 0.25, 0.5});
  SuiteReport rep;
  rep.name = "kernel";
  rep.checks = kr.checks;
  rep.violations = static_cast<std::int64_t>(kr.violations.size());
  rep.worst_slack = kr.worst_slack;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.pass = kr.violations.empty();
  if (!kr.out_of_domain.empty())
    rep.notes.push_back("third estimate fails outside its k >= t proof domain at " +
                        std::to_string(kr.out_of_domain.size()) + " grid points (expected)");
  return rep;
}

SuiteReport run_variance_suite(int triples, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteReport rep;
  rep.name = "variance";
  std::uint64_t ctr = 0;
  auto u = [&] { return rng::uniform01(seed, 11, ctr++); };
  auto gauss = [&] { return rng::standard_normal(seed, 12, ctr++); };
  for (int trial = 0; trial < triples; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(u() * 4.0);  // 2..5 blocks
    const Eigen::Index m = 2 + static_cast<Eigen::Index>(u() * 3.0);  // 2..4 cols
    Matrix a(n, m), r(m, m);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) a(i, j) = gauss();
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) r(i, j) = gauss();
    Vector d(m);
    for (Eigen::Index j = 0; j < m; ++j) d(j) = gauss();
    auto op = compute_norms(BlockOperator::row_partitioned(std::move(a)));
    auto vb = verify_variance_operator_bound(op, r, d);
    rep.checks += static_cast<std::int64_t>(n) + 1;
    if (vb.violated) rep.violations += static_cast<std::int64_t>(vb.violations.size());
    rep.worst_slack = std::min(rep.worst_slack, vb.worst_uniform_slack);
    rep.worst_slack = std::min(rep.worst_slack, (vb.mean_rhs - vb.mean_lhs) /
                                                    std::max(vb.mean_rhs, 1e-300));
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace lininv::oracle
