#include "lininv/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lininv/rng.hpp"

namespace lininv {

namespace {

using std::numbers::pi;

std::pair<Matrix, Vector> phillips(Eigen::Index n) {
  if (n % 4 != 0) throw std::invalid_argument("phillips: size must be a multiple of 4");
  const double h = 12.0 / static_cast<double>(n);
  const Eigen::Index n4 = n / 4;
  const double c = pi / 3.0;
  const double ch = c * h;

  // Galerkin with orthonormal box functions; entries depend on |i - j|.
  Vector band = Vector::Zero(n);
  for (Eigen::Index d = 0; d < n4; ++d)
    band(d) = h + (2.0 / (h * c * c)) * (1.0 - std::cos(ch)) * std::cos(ch * static_cast<double>(d));
  band(n4) = h / 2.0 + (std::cos(ch) - 1.0) / (h * c * c);

  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = band(std::abs(i - j));

  // Coefficients of phi(t) = 1 + cos(pi t / 3) on |t| < 3 in the box basis.
  Vector x = Vector::Zero(n);
  for (Eigen::Index i = n4; i < 3 * n4; ++i) {
    const double t0 = -6.0 + h * static_cast<double>(i);
    const double t1 = t0 + h;
    x(i) = (h + (std::sin(c * t1) - std::sin(c * t0)) / c) / std::sqrt(h);
  }
  return {std::move(a), std::move(x)};
}

std::pair<Matrix, Vector> gravity(Eigen::Index n) {
  const double d = 0.25;
  const double step = 1.0 / static_cast<double>(n);
  Vector grid(n);
  for (Eigen::Index i = 0; i < n; ++i) grid(i) = (static_cast<double>(i) + 0.5) * step;
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double u = grid(i) - grid(j);
      a(i, j) = step * d / std::pow(d * d + u * u, 1.5);
    }
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = std::sin(pi * grid(i)) + 0.5 * std::sin(2.0 * pi * grid(i));
  return {std::move(a), std::move(x)};
}

std::pair<Matrix, Vector> shaw(Eigen::Index n) {
  if (n % 2 != 0) throw std::invalid_argument("shaw: size must be even");
  const double h = pi / static_cast<double>(n);
  Vector th(n), co(n), ps(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    th(i) = -pi / 2.0 + (static_cast<double>(i) + 0.5) * h;
    co(i) = std::cos(th(i));
    ps(i) = pi * std::sin(th(i));
  }
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double u = ps(i) + ps(j);
      const double sinc = (u == 0.0) ? 1.0 : std::sin(u) / u;
      const double k = (co(i) + co(j)) * sinc;
      a(i, j) = h * k * k;
    }
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x(i) = 2.0 * std::exp(-6.0 * std::pow(th(i) - 0.8, 2)) +
           std::exp(-2.0 * std::pow(th(i) + 0.5, 2));
  return {std::move(a), std::move(x)};
}

}  // namespace

std::pair<Matrix, Vector> generate_problem(const std::string& name, Eigen::Index size) {
  if (size < 4) throw std::invalid_argument("generate_problem: size must be >= 4");
  if (name == "phillips") return phillips(size);
  if (name == "gravity") return gravity(size);
  if (name == "shaw") return shaw(size);
  throw std::invalid_argument("generate_problem: unknown problem '" + name + "'");
}

Vector source_solution(const BlockOperator& op, const Vector& x_e, double nu) {
  if (nu < 0.0) throw std::invalid_argument("source_solution: nu must be >= 0");
  if (x_e.size() != op.cols()) throw std::invalid_argument("source_solution: size mismatch");
  Vector v;
  if (nu == 0.0) {
    v = x_e;
  } else {
    const SvdFactorization& f = op.svd();
    Vector coef = f.right_vectors.transpose() * x_e;
    for (Eigen::Index j = 0; j < coef.size(); ++j)
      coef(j) *= std::pow(f.singular_values(j) * f.singular_values(j), nu);
    v = f.right_vectors * coef;
  }
  const double sup = v.cwiseAbs().maxCoeff();
  if (sup == 0.0) throw std::domain_error("source_solution: (A^T A)^nu x_e vanishes");
  return v / sup;
}

NoisyData add_noise(const Vector& y_exact, double eps, std::uint64_t seed) {
  if (eps < 0.0) throw std::invalid_argument("add_noise: eps must be >= 0");
  NoisyData out;
  out.y = y_exact;
  if (eps == 0.0) return out;
  const double scale = eps * y_exact.cwiseAbs().maxCoeff();
  double sq = 0.0;
  for (Eigen::Index i = 0; i < out.y.size(); ++i) {
    const double xi = rng::standard_normal(seed, rng::kNoiseStream, static_cast<std::uint64_t>(i));
    out.y(i) += scale * xi;
    sq += scale * xi * scale * xi;
  }
  out.delta = std::sqrt(sq);
  return out;
}

InverseProblem make_problem(const std::string& name, Eigen::Index size, double nu, double eps,
                            std::uint64_t seed, double nu_e) {
  auto [a, x_e] = generate_problem(name, size);
  InverseProblem p;
  p.op = compute_norms(BlockOperator::row_partitioned(std::move(a)));
  p.x_exact = source_solution(p.op, x_e, nu);
  p.y_exact = p.op.entries() * p.x_exact;
  auto noisy = add_noise(p.y_exact, eps, seed);
  p.y_noisy = std::move(noisy.y);
  p.noise_level = noisy.delta;
  p.rel_noise = eps;
  p.smoothness = nu;
  p.base_smoothness = nu_e;
  p.x0 = Vector::Zero(p.op.cols());
  p.seed = seed;
  p.name = name;
  return p;
}

Matrix diagonal_operator(Eigen::Index m, double p) {
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) a(j, j) = std::pow(static_cast<double>(j + 1), -p);
  return a;
}

InverseProblem make_diagonal_problem(Eigen::Index m, double p, double nu, double eps,
                                     std::uint64_t seed, double w_profile) {
  InverseProblem out;
  out.op = compute_norms(BlockOperator::row_partitioned(diagonal_operator(m, p)));
  Vector w(m);
  for (Eigen::Index j = 0; j < m; ++j) w(j) = std::pow(static_cast<double>(j + 1), w_profile);
  w /= w.norm();
  // x = B^nu w with B = diag(sigma_j^2 / n)
  out.x_exact = w;
  const double n = static_cast<double>(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double lam = out.op.entries()(j, j) * out.op.entries()(j, j) / n;
    out.x_exact(j) *= std::pow(lam, nu);
  }
  out.y_exact = out.op.entries() * out.x_exact;
  auto noisy = add_noise(out.y_exact, eps, seed);
  out.y_noisy = std::move(noisy.y);
  out.noise_level = noisy.delta;
  out.rel_noise = eps;
  out.smoothness = nu;
  out.x0 = Vector::Zero(m);
  out.seed = seed;
  out.name = "diagonal";
  return out;
}

double estimate_base_smoothness(const BlockOperator& op, const Vector& x_e) {
  const SvdFactorization& f = op.svd();
  Vector coef = f.right_vectors.transpose() * x_e;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int pts = 0;
  const double floor = 1e-12 * coef.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < coef.size(); ++j) {
    if (f.singular_values(j) <= 0.0 || std::abs(coef(j)) <= floor) continue;
    const double lx = std::log(f.singular_values(j));
    const double ly = std::log(std::abs(coef(j)));
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++pts;
  }
  if (pts < 2) return 0.0;
  const double denom = pts * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return 0.5 * (pts * sxy - sx * sy) / denom;
}

}  // namespace lininv
