#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "lininv/block_operator.hpp"

namespace lininv {

// One benchmark instance: operator, exact pair, one noisy realization.
struct InverseProblem {
  BlockOperator op;  // A_dagger with norms and svd computed
  Vector x_exact;    // x_dagger
  Vector y_exact;
  Vector y_noisy;
  double noise_level = 0.0;     // delta = ||y_noisy - y_exact||
  double rel_noise = 0.0;       // eps
  double smoothness = 0.0;      // nu in the source synthesis
  double base_smoothness = 0.0; // nu_e of the package solution (config value)
  Vector x0;
  std::uint64_t seed = 0;
  std::string name;
};

// Standard discretizations: phillips (Galerkin, [-6,6], n % 4 == 0),
// gravity (midpoint quadrature, d = 0.25), shaw (even n). Returns the
// matrix and the package exact solution x_e. Deterministic in (name, size).
std::pair<Matrix, Vector> generate_problem(const std::string& name, Eigen::Index size);

// x = (A^T A)^nu x_e normalized to unit max norm, evaluated spectrally.
Vector source_solution(const BlockOperator& op, const Vector& x_e, double nu);

struct NoisyData {
  Vector y;
  double delta = 0.0;
};

// y_i + eps * ||y||_inf * xi_i with xi iid standard normal from the
// counter-based generator; same seed gives bit-identical output.
NoisyData add_noise(const Vector& y_exact, double eps, std::uint64_t seed);

// Full pipeline for the named problems.
InverseProblem make_problem(const std::string& name, Eigen::Index size, double nu, double eps,
                            std::uint64_t seed, double nu_e = 0.0);

// Diagonal synthetic operator sigma_j = j^{-p}, one row per block. Used by
// the rate studies where a controlled spectrum is needed.
Matrix diagonal_operator(Eigen::Index m, double p);

// Diagonal synthetic instance with an exact source representation
// x_exact = B^nu w,  w_j proportional to j^{w_profile}, ||w|| = 1.
InverseProblem make_diagonal_problem(Eigen::Index m, double p, double nu, double eps,
                                     std::uint64_t seed, double w_profile = -0.5);

// Least-squares slope of log|<phi_j, x_e>| against log sigma_j, halved;
// crude estimate of the existing regularity nu_e.
double estimate_base_smoothness(const BlockOperator& op, const Vector& x_e);

}  // namespace lininv
