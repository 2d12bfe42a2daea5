#include "sbrrm/linalg.hpp"

#include <omp.h>

#include <cmath>

namespace sbrrm::linalg {
namespace {

constexpr int kPanel = 64;

// Unblocked factorization of the leading nb x nb block of the column-major
// submatrix starting at a(k, k).
bool factor_diag_block(double* a, int lda, int nb) {
  for (int j = 0; j < nb; ++j) {
    double* colj = a + static_cast<std::ptrdiff_t>(j) * lda;
    double d = colj[j];
    for (int k = 0; k < j; ++k) {
      const double ljk = a[static_cast<std::ptrdiff_t>(k) * lda + j];
      d -= ljk * ljk;
    }
    if (d <= 0.0 || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    colj[j] = d;
    const double inv = 1.0 / d;
    for (int i = j + 1; i < nb; ++i) {
      double s = colj[i];
      for (int k = 0; k < j; ++k) {
        s -= a[static_cast<std::ptrdiff_t>(k) * lda + i] *
             a[static_cast<std::ptrdiff_t>(k) * lda + j];
      }
      colj[i] = s * inv;
    }
  }
  return true;
}

// B <- B * L^-T for the nb x nb lower-triangular L (diagonal block) and the
// m x nb panel B below it. Column-major, both live inside the big matrix.
void trsm_right_lt(const double* l, int lda, double* b, int ldb, int m, int nb) {
  for (int j = 0; j < nb; ++j) {
    const double inv = 1.0 / l[static_cast<std::ptrdiff_t>(j) * lda + j];
    double* bj = b + static_cast<std::ptrdiff_t>(j) * ldb;
    for (int k = 0; k < j; ++k) {
      const double ljk = l[static_cast<std::ptrdiff_t>(k) * lda + j];
      const double* bk = b + static_cast<std::ptrdiff_t>(k) * ldb;
      for (int i = 0; i < m; ++i) bj[i] -= ljk * bk[i];
    }
    for (int i = 0; i < m; ++i) bj[i] *= inv;
  }
}

// C(i0.., j0..) -= P_i * P_j^T where P is the freshly computed panel.
// Only tiles on or below the diagonal are touched.
void trailing_update(double* a, int lda, int n, int k0, int nb) {
  const int rem = n - (k0 + nb);
  if (rem <= 0) return;
  const double* panel = a + static_cast<std::ptrdiff_t>(k0) * lda + (k0 + nb);
  const int tiles = (rem + kPanel - 1) / kPanel;
  const int total = tiles * (tiles + 1) / 2;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < total; ++t) {
    // Map flat index to (bi >= bj) tile coordinates.
    int bj = 0;
    int acc = 0;
    while (acc + (tiles - bj) <= t) {
      acc += tiles - bj;
      ++bj;
    }
    const int bi = bj + (t - acc);
    const int j0 = bj * kPanel, j1 = std::min(rem, j0 + kPanel);
    const int i0 = bi * kPanel, i1 = std::min(rem, i0 + kPanel);
    for (int j = j0; j < j1; ++j) {
      double* cj = a + static_cast<std::ptrdiff_t>(k0 + nb + j) * lda + (k0 + nb);
      const int ibeg = std::max(i0, j);
      for (int k = 0; k < nb; ++k) {
        const double* pk = panel + static_cast<std::ptrdiff_t>(k) * lda;
        const double pjk = pk[j];
        if (pjk == 0.0) continue;
        for (int i = ibeg; i < i1; ++i) cj[i] -= pk[i] * pjk;
      }
    }
  }
}

}  // namespace

int effective_threads() {
  return omp_in_parallel() ? 1 : omp_get_max_threads();
}

bool cholesky_in_place(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const int lda = n;
  double* p = a.data();
  for (int k0 = 0; k0 < n; k0 += kPanel) {
    const int nb = std::min(kPanel, n - k0);
    double* diag = p + static_cast<std::ptrdiff_t>(k0) * lda + k0;
    if (!factor_diag_block(diag, lda, nb)) return false;
    const int below = n - (k0 + nb);
    if (below > 0) {
      trsm_right_lt(diag, lda, p + static_cast<std::ptrdiff_t>(k0) * lda + (k0 + nb),
                    lda, below, nb);
      trailing_update(p, lda, n, k0, nb);
    }
  }
  return true;
}

bool cholesky_in_place_reference(Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (d <= 0.0 || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    a(j, j) = d;
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / d;
    }
  }
  return true;
}

void cholesky_solve_in_place(const Eigen::MatrixXd& l, Eigen::VectorXd& b) {
  const int n = static_cast<int>(l.rows());
  const double* p = l.data();
  double* x = b.data();
  for (int j = 0; j < n; ++j) {
    const double* colj = p + static_cast<std::ptrdiff_t>(j) * n;
    const double xj = x[j] / colj[j];
    x[j] = xj;
    for (int i = j + 1; i < n; ++i) x[i] -= colj[i] * xj;
  }
  for (int j = n - 1; j >= 0; --j) {
    const double* colj = p + static_cast<std::ptrdiff_t>(j) * n;
    double s = x[j];
    for (int i = j + 1; i < n; ++i) s -= colj[i] * x[i];
    x[j] = s / colj[j];
  }
}

void rank1_update_lower(Eigen::MatrixXd& a, const std::vector<int>& idx,
                        const std::vector<double>& val, double scale) {
  const int nnz = static_cast<int>(idx.size());
  const int lda = static_cast<int>(a.rows());
  double* p = a.data();
  for (int jj = 0; jj < nnz; ++jj) {
    const int j = idx[jj];
    const double vj = scale * val[jj];
    if (vj == 0.0) continue;
    double* colj = p + static_cast<std::ptrdiff_t>(j) * lda;
    for (int ii = jj; ii < nnz; ++ii) colj[idx[ii]] += val[ii] * vj;
  }
}

void rank1_update_lower_reference(Eigen::MatrixXd& a, const std::vector<int>& idx,
                                  const std::vector<double>& val, double scale) {
  const int nnz = static_cast<int>(idx.size());
  for (int jj = 0; jj < nnz; ++jj) {
    for (int ii = jj; ii < nnz; ++ii) {
      a(idx[ii], idx[jj]) += scale * val[ii] * val[jj];
    }
  }
}

void syrk_lower_update(Eigen::MatrixXd& c, const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(c.rows());
  const int k = static_cast<int>(a.cols());
  if (k == 0) return;
  const int tiles = (n + kPanel - 1) / kPanel;
  const int total = tiles * (tiles + 1) / 2;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < total; ++t) {
    int bj = 0;
    int acc = 0;
    while (acc + (tiles - bj) <= t) {
      acc += tiles - bj;
      ++bj;
    }
    const int bi = bj + (t - acc);
    const int j0 = bj * kPanel, j1 = std::min(n, j0 + kPanel);
    const int i0 = bi * kPanel, i1 = std::min(n, i0 + kPanel);
    for (int j = j0; j < j1; ++j) {
      double* cj = c.data() + static_cast<std::ptrdiff_t>(j) * n;
      const int ibeg = std::max(i0, j);
      for (int kk = 0; kk < k; ++kk) {
        const double* ak = a.data() + static_cast<std::ptrdiff_t>(kk) * n;
        const double ajk = ak[j];
        if (ajk == 0.0) continue;
        for (int i = ibeg; i < i1; ++i) cj[i] += ak[i] * ajk;
      }
    }
  }
}

void syrk_lower_update_reference(Eigen::MatrixXd& c, const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(c.rows());
  for (int kk = 0; kk < a.cols(); ++kk)
    for (int j = 0; j < n; ++j)
      for (int i = j; i < n; ++i) c(i, j) += a(i, kk) * a(j, kk);
}

}  // namespace sbrrm::linalg
