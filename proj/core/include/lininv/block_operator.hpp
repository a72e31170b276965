#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

namespace lininv {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Full factorization A = left * diag(singular_values) * right^T with
// orthonormal columns and singular values in descending order.
struct SvdFactorization {
  Matrix left_vectors;
  Vector singular_values;
  Matrix right_vectors;

  Eigen::Index rank_hint() const { return singular_values.size(); }
};

class BlockOperator;

// Spectral cutoff sigma_j >= a * delta^b; ties at the threshold are kept.
struct TruncationRule {
  double a = 0.0;
  double b = 1.0;
  double threshold(double delta) const;
};

struct Truncation;

// Dense forward operator with a contiguous row partition into n blocks.
// Immutable once norms are computed; safe to share across threads.
class BlockOperator {
 public:
  BlockOperator() = default;
  BlockOperator(Matrix entries, std::vector<Eigen::Index> partition);

  // Convenience: every row is its own block (the usual benchmark layout).
  static BlockOperator row_partitioned(Matrix entries);

  const Matrix& entries() const { return entries_; }
  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }
  Eigen::Index block_count() const { return static_cast<Eigen::Index>(partition_.size()); }
  const std::vector<Eigen::Index>& partition() const { return partition_; }
  Eigen::Index block_offset(Eigen::Index i) const { return offsets_[static_cast<std::size_t>(i)]; }
  Eigen::Index block_size(Eigen::Index i) const { return partition_[static_cast<std::size_t>(i)]; }
  auto block(Eigen::Index i) const { return entries_.middleRows(block_offset(i), block_size(i)); }

  bool norms_ready() const { return norms_ready_; }
  bool has_svd() const { return svd_.has_value(); }
  double op_norm() const;
  // L = max_i ||A_i||^2
  double max_block_norm_sq() const;
  const Vector& row_block_norms() const;
  const SvdFactorization& svd() const;

 private:
  Matrix entries_;
  std::vector<Eigen::Index> partition_;
  std::vector<Eigen::Index> offsets_;
  Vector row_block_norms_;
  double op_norm_ = 0.0;
  double max_block_norm_sq_ = 0.0;
  bool norms_ready_ = false;
  std::optional<SvdFactorization> svd_;

  friend BlockOperator compute_norms(BlockOperator op);
  friend Truncation truncate(const BlockOperator&, const TruncationRule&, double);
};

// Computes the full SVD (single source of ||A||, truncation and source
// synthesis), per-block operator norms and L. Validates the factorization
// (orthonormality and reconstruction at 1e-10 relative) and the norm
// relations ||A|| <= sqrt(sum ||A_i||^2), L <= ||A||^2 <= n L.
BlockOperator compute_norms(BlockOperator op);

struct Truncation {
  BlockOperator op;
  double threshold = 0.0;
  Eigen::Index kept = 0;
};

// a == 0 returns the operator unchanged (entries bit-identical). a > 0
// requires delta < 1 and a computed SVD; the result carries its own (kept)
// factorization and refreshed norms without a second decomposition.
Truncation truncate(const BlockOperator& op, const TruncationRule& rule, double delta);

// Non-blow-up level a = (n^nu / ||w||)^{1/(1+2nu)}; asymptotic constant
// 2 n^{-nu/(1+2nu)} ||w||^{1/(1+2nu)}. Requires nu > 0.
double choose_truncation_level(Eigen::Index n, double nu, double w_norm);

// Minimizer variant a* = (n^nu / (2 nu ||w||))^{1/(1+2nu)}.
double truncation_level_minimizer(Eigen::Index n, double nu, double w_norm);

// Asymptotic plateau constant c(a) = n^{-nu} a^{2nu} ||w|| + a^{-1}.
double truncation_asymptotic_constant(Eigen::Index n, double nu, double w_norm, double a);

// B = n^{-1} A^T A and P = I - c0 B. Requires 1 - c0 ||B|| >= 0.
std::pair<Matrix, Matrix> derived_operators(const BlockOperator& op, double c0);

}  // namespace lininv
