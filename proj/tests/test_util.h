#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace secmpc::testing {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec RandomVec(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

// Central differences of f at z.
inline Mat NumericJacobian(const std::function<Vec(const Vec&)>& f, const Vec& z, double h = 1e-6) {
  const Vec f0 = f(z);
  Mat J(f0.size(), z.size());
  for (int j = 0; j < z.size(); ++j) {
    Vec zp = z, zm = z;
    zp(j) += h;
    zm(j) -= h;
    J.col(j) = (f(zp) - f(zm)) / (2.0 * h);
  }
  return J;
}

// Largest entrywise deviation, relative to max(1, |numeric|).
inline double RelativeError(const Mat& analytic, const Mat& numeric) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) return INFINITY;
  double worst = 0.0;
  for (int i = 0; i < analytic.rows(); ++i) {
    for (int j = 0; j < analytic.cols(); ++j) {
      const double d = std::abs(analytic(i, j) - numeric(i, j));
      worst = std::max(worst, d / std::max(1.0, std::abs(numeric(i, j))));
    }
  }
  return worst;
}

// 5-point Gauss-Legendre on [0, tau], exact for polynomials up to degree 9.
template <typename F>
double GaussLegendre(const F& f, double tau) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += w[i] * f(0.5 * tau * (x[i] + 1.0));
  return 0.5 * tau * s;
}

}  // namespace secmpc::testing
