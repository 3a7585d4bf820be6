#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lowrank/matrix.hpp"

namespace lowrank {

/// Reduced (or truncated) singular value decomposition A ~ U diag(sigma) Vt.
///
/// `u` is m x r with orthonormal columns, `vt` is r x n with orthonormal rows,
/// and `sigma` holds r non-negative values in non-increasing order. Each
/// column of `u` is sign-normalized so its largest-magnitude entry is
/// positive (lowest row index wins ties); the matching row of `vt` is flipped
/// along with it.
struct SvdFactors {
  Matrix u;
  std::vector<double> sigma;
  Matrix vt;

  std::size_t rank() const noexcept { return sigma.size(); }
  std::size_t rows() const noexcept { return u.rows(); }
  std::size_t cols() const noexcept { return vt.cols(); }
};

/// Upper bound on Jacobi sweeps before the kernel gives up with ErrorKind::Convergence.
inline constexpr int kMaxJacobiSweeps = 100;

/// One-sided Jacobi SVD. Column pairs are visited in round-robin order so each
/// round's rotations touch disjoint columns and run in parallel under OpenMP.
/// The result is bit-identical for any thread count.
SvdFactors svd(const Matrix& a);

/// Serial cyclic-order one-sided Jacobi. Kept as the reference the parallel
/// kernel is tested and benchmarked against.
SvdFactors svd_reference(const Matrix& a);

/// Keeps the first k singular triplets. Throws InvalidRank unless 1 <= k <= rank.
SvdFactors truncate(const SvdFactors& f, std::size_t k);

/// Sum of sigma_i * u_i * v_i^T.
Matrix reconstruct(const SvdFactors& f);
Matrix reconstruct_reference(const SvdFactors& f);

/// Frobenius norm of the discarded tail, sqrt(sum_{i >= k} sigma_i^2) with
/// zero-based i. Equals the Frobenius error of the rank-k truncation.
double residual_from_sigma(std::span<const double> sigma, std::size_t k);

double frobenius_norm(const Matrix& a);

/// max |U^T U - I| over the columns of `u`.
double column_orthonormality_residual(const Matrix& u);
/// max |Vt Vt^T - I| over the rows of `vt`.
double row_orthonormality_residual(const Matrix& vt);

}  // namespace lowrank
