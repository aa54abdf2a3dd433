#include "secmpc/linalg.h"

#include <algorithm>
#include <cmath>

namespace secmpc {

bool BandedCholesky::Factorize(const Matrix& a, int bandwidth) {
  n_ = static_cast<int>(a.rows());
  bw_ = std::min(std::max(bandwidth, 0), std::max(n_ - 1, 0));
  band_.setZero(bw_ + 1, n_);
  for (int j = 0; j < n_; ++j) {
    for (int i = j; i <= std::min(n_ - 1, j + bw_); ++i) L(i, j) = a(i, j);
  }
  for (int j = 0; j < n_; ++j) {
    const int k0 = std::max(0, j - bw_);
    double d = L(j, j);
    for (int k = k0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    d = std::sqrt(d);
    L(j, j) = d;
    const int i_end = std::min(n_ - 1, j + bw_);
    for (int i = j + 1; i <= i_end; ++i) {
      double s = L(i, j);
      for (int k = std::max(k0, i - bw_); k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / d;
    }
  }
  return true;
}

void BandedCholesky::Solve(Matrix* b) const {
  Matrix& x = *b;
  // Forward: L y = b.
  for (int i = 0; i < n_; ++i) {
    for (int k = std::max(0, i - bw_); k < i; ++k) x.row(i) -= L(i, k) * x.row(k);
    x.row(i) /= L(i, i);
  }
  // Backward: L^T x = y.
  for (int i = n_ - 1; i >= 0; --i) {
    for (int k = i + 1; k <= std::min(n_ - 1, i + bw_); ++k) x.row(i) -= L(k, i) * x.row(k);
    x.row(i) /= L(i, i);
  }
}

namespace {

bool SolveStructured(const Matrix& a, const Vector& b, const Sparsity& s, Vector* x) {
  const int n = static_cast<int>(a.rows());
  const int m = std::min(s.border, n);
  const int nb = n - m;
  BandedCholesky chol;
  if (!chol.Factorize(a.topLeftCorner(nb, nb), s.bandwidth)) return false;
  if (m == 0) {
    Matrix rhs = b;
    chol.Solve(&rhs);
    *x = rhs.col(0);
    return true;
  }
  // [A B; B^T C] [x1; x2] = [b1; b2]
  Matrix rhs(nb, m + 1);
  rhs.leftCols(m) = a.topRightCorner(nb, m);
  rhs.col(m) = b.head(nb);
  chol.Solve(&rhs);
  const Matrix ainv_b = rhs.leftCols(m);
  const Vector ainv_b1 = rhs.col(m);
  const Matrix schur = a.bottomRightCorner(m, m) - a.bottomLeftCorner(m, nb) * ainv_b;
  Eigen::LLT<Matrix> llt(schur);
  if (llt.info() != Eigen::Success) return false;
  const Vector x2 = llt.solve(b.tail(m) - a.bottomLeftCorner(m, nb) * ainv_b1);
  x->resize(n);
  x->head(nb) = ainv_b1 - ainv_b * x2;
  x->tail(m) = x2;
  return x->allFinite();
}

}  // namespace

bool SolveSymmetric(const Matrix& a, const Vector& b, const Sparsity& sparsity, Vector* x) {
  if (!sparsity.dense() && SolveStructured(a, b, sparsity, x)) return true;
  Eigen::LDLT<Matrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) return false;
  *x = ldlt.solve(b);
  return x->allFinite();
}

}  // namespace secmpc
