#pragma once

#include "secmpc/common.h"

namespace secmpc {

// Structure of a symmetric normal matrix: a leading banded block with
// half-bandwidth `bandwidth` and `border` trailing dense rows/columns
// (arrowhead). bandwidth < 0 means fully dense.
struct Sparsity {
  int bandwidth = -1;
  int border = 0;

  static Sparsity Dense() { return {}; }
  static Sparsity Banded(int bw, int border_size = 0) { return {bw, border_size}; }
  bool dense() const { return bandwidth < 0; }
};

// Cholesky factorization L L^T of a symmetric positive definite band matrix.
// Only the lower band is stored; O(N * bw^2) time.
class BandedCholesky {
 public:
  BandedCholesky() = default;
  // Reads the lower band of `a`. Returns false if `a` is not positive
  // definite.
  bool Factorize(const Matrix& a, int bandwidth);
  // Solves A X = B in place.
  void Solve(Matrix* b) const;

  int size() const { return n_; }

 private:
  double& L(int i, int j) { return band_(i - j, j); }
  double L(int i, int j) const { return band_(i - j, j); }

  Matrix band_;  // (bw+1) x N, band_(i-j, j) = L(i, j)
  int n_ = 0;
  int bw_ = 0;
};

// Solves the SPD system A x = b exploiting `sparsity` (banded block plus
// Schur complement on the border). Falls back to dense LDL^T when the
// structured factorization fails. Returns false if no solve succeeded.
bool SolveSymmetric(const Matrix& a, const Vector& b, const Sparsity& sparsity, Vector* x);

}  // namespace secmpc
