#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sbrrm::linalg {

/// In-place Cholesky factorization A = L L^T of a symmetric positive definite
/// matrix. Only the lower triangle of `a` is read; on success the lower
/// triangle holds L. Blocked right-looking algorithm; the trailing update is
/// tiled and OpenMP-parallel. Each output entry is accumulated in a fixed
/// order, so the result is identical for any thread count.
/// Returns false on a non-positive pivot.
bool cholesky_in_place(Eigen::MatrixXd& a);

/// Unblocked serial reference for the factorization above. Kept for tests and
/// the kernel benchmark.
bool cholesky_in_place_reference(Eigen::MatrixXd& a);

/// Solves L L^T x = b given the factor from cholesky_in_place. b is
/// overwritten with x.
void cholesky_solve_in_place(const Eigen::MatrixXd& chol_lower, Eigen::VectorXd& b);

/// Lower triangle of `a` += scale * v v^T restricted to the sparse support:
/// v is given as (index, value) pairs sorted by index.
void rank1_update_lower(Eigen::MatrixXd& a, const std::vector<int>& idx,
                        const std::vector<double>& val, double scale);

/// Serial reference for rank1_update_lower.
void rank1_update_lower_reference(Eigen::MatrixXd& a, const std::vector<int>& idx,
                                  const std::vector<double>& val, double scale);

/// Lower triangle of `c` += a a^T over all columns of `a`; tiled and
/// OpenMP-parallel with a fixed per-entry accumulation order.
void syrk_lower_update(Eigen::MatrixXd& c, const Eigen::MatrixXd& a);

/// Serial reference for syrk_lower_update.
void syrk_lower_update_reference(Eigen::MatrixXd& c, const Eigen::MatrixXd& a);

/// Number of OpenMP threads the parallel kernels will actually use when
/// called from this context (1 inside an active parallel region).
int effective_threads();

}  // namespace sbrrm::linalg
