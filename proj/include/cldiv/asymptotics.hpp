#pragma once

#include "cldiv/core.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <vector>

namespace cldiv {

struct ConstrainedBlocks {
  Matrix P;  // p x p
  Matrix Q;  // p x r
  Matrix R;  // r x r
};

struct SpectrumResult {
  Vector eigenvalues;  // nonincreasing, >= 0
  Index k = 0;         // number of nonzero eigenvalues
  std::vector<double> weights() const {
    return std::vector<double>(eigenvalues.data(), eigenvalues.data() + k);
  }
};

namespace detail {

inline Eigen::LLT<Matrix> spd_factor(const Matrix& a, const char* name) {
  require_square(a, name);
  if (!is_symmetric(a, 1e-8)) throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not symmetric");
  Matrix s = 0.5 * (a + a.transpose());
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is not positive definite");
  Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 1e-13 * es.eigenvalues().maxCoeff())
    throw Error(ErrorCode::NotPositiveDefinite, std::string(name) + " is numerically singular");
  return llt;
}

inline Matrix checked_inverse(const Matrix& a, const char* name) {
  require_square(a, name);
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw Error(ErrorCode::SingularMatrix, std::string(name) + " is singular");
  return lu.inverse();
}

// Eigenvalues of A S for symmetric positive semidefinite A and S, via the
// symmetric form L^T S L with A = L L^T.
inline SpectrumResult product_spectrum(const Matrix& a, const Matrix& s) {
  Eigen::LLT<Matrix> llt(0.5 * (a + a.transpose()));
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "leading matrix is not positive definite");
  Matrix l = llt.matrixL();
  Matrix m = l.transpose() * (0.5 * (s + s.transpose())) * l;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  Vector ev = es.eigenvalues().reverse();
  double mx = std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  SpectrumResult out;
  out.eigenvalues = ev;
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= 1e-10 * mx) ev[i] = 0.0;
    if (ev[i] > 0.0) ++out.k;
  }
  out.eigenvalues = ev;
  return out;
}

}  // namespace detail

// Godambe information H J^{-1} H.
inline Matrix godambe(const Matrix& h, const Matrix& j) {
  require_square(h, "H");
  if (h.rows() != j.rows() || j.rows() != j.cols()) throw Error(ErrorCode::DimensionMismatch, "H and J sizes differ");
  auto jl = detail::spd_factor(j, "J");
  detail::checked_inverse(h, "H");
  Matrix g = h.transpose() * jl.solve(h);
  return 0.5 * (g + g.transpose());
}

// Blocks of the inverse of the bordered matrix [H, -G; -G^T, 0].
inline ConstrainedBlocks constrained_blocks(const Matrix& h, const Matrix& g) {
  require_square(h, "H");
  if (g.rows() != h.rows()) throw Error(ErrorCode::DimensionMismatch, "G must have p rows");
  if (g.cols() < 1 || g.cols() >= h.rows()) throw Error(ErrorCode::DimensionMismatch, "G must be p x r with 0 < r < p");
  Matrix hinv = detail::checked_inverse(h, "H");
  if (Eigen::ColPivHouseholderQR<Matrix>(g).rank() < g.cols()) throw Error(ErrorCode::RankDeficient, "G is rank deficient");
  Matrix ghg = g.transpose() * hinv * g;
  Eigen::FullPivLU<Matrix> lu(ghg);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw Error(ErrorCode::RankDeficient, "G^T H^-1 G is singular");
  Matrix ghg_inv = lu.inverse();
  ConstrainedBlocks b;
  b.Q = -hinv * g * ghg_inv;
  b.P = hinv + b.Q * g.transpose() * hinv;
  b.R = -ghg_inv;
  return b;
}

// Limit weights of a simple-null divergence statistic: eigenvalues of A G*^{-1},
// with A the curvature of the divergence.
inline SpectrumResult simple_null_spectrum(const Matrix& a, const Matrix& gstar) {
  require_square(a, "A");
  if (a.rows() != gstar.rows()) throw Error(ErrorCode::DimensionMismatch, "A and G* sizes differ");
  auto gl = detail::spd_factor(gstar, "G*");
  Matrix ginv = gl.solve(Matrix::Identity(a.rows(), a.rows()));
  return detail::product_spectrum(a, ginv);
}

// Asymptotic covariance of sqrt(n)(theta_hat - theta_tilde): M G*^{-1} M^T, M = Q G^T.
inline Matrix restricted_difference_cov(const Matrix& g, const Matrix& q, const Matrix& gstar) {
  if (q.rows() != g.rows() || q.cols() != g.cols() || gstar.rows() != g.rows())
    throw Error(ErrorCode::DimensionMismatch, "G, Q and G* sizes disagree");
  auto gl = detail::spd_factor(gstar, "G*");
  Matrix mm = q * g.transpose();
  Matrix s = mm * gl.solve(mm.transpose());
  return 0.5 * (s + s.transpose());
}

// Composite-null divergence statistic: eigenvalues of A M G*^{-1} M^T.
inline SpectrumResult composite_null_spectrum(const Matrix& a, const Matrix& g, const Matrix& q, const Matrix& gstar) {
  require_square(a, "A");
  return detail::product_spectrum(a, restricted_difference_cov(g, q, gstar));
}

// CLRT: the quadratic form is governed by H.
inline SpectrumResult clrt_spectrum(const Matrix& h, const Matrix& g, const Matrix& q, const Matrix& gstar) {
  return composite_null_spectrum(h, g, q, gstar);
}

// Asymptotic covariance of sqrt(n)(theta_tilde - theta) under the null: P J P^T.
inline Matrix restricted_estimator_cov(const Matrix& p, const Matrix& j) { return p * j * p.transpose(); }

inline double power_sigma(const Vector& q, const Matrix& gstar) {
  auto gl = detail::spd_factor(gstar, "G*");
  double v = q.dot(gl.solve(q));
  return std::sqrt(std::max(v, 0.0));
}

// 1 - Phi( sqrt(n)/sigma * (phi''(1) c / (2n) - D) ).
inline double power_approx_simple(double d, double sigma, double n, double c_alpha, double phi2 = 1.0) {
  if (!(sigma > 1e-12)) throw Error(ErrorCode::DegenerateAlternative, "sigma vanishes: alternative equals the null");
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidParameter, "n must be positive");
  if (d == kInf) return 1.0;
  boost::math::normal nd;
  double z = std::sqrt(n) / sigma * (phi2 * c_alpha / (2.0 * n) - d);
  return boost::math::cdf(boost::math::complement(nd, z));
}

inline double power_approx_composite(double d, double sigma2, double n, double c, double phi2 = 1.0) {
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::DegenerateAlternative, "sigma^2 must be positive");
  return power_approx_simple(d, std::sqrt(sigma2), n, c, phi2);
}

// Smallest n whose approximate power reaches target_power.
inline long long sample_size(double d, double sigma2, double c, double target_power) {
  if (!(d > 0.0)) throw Error(ErrorCode::DegenerateAlternative, "divergence must be positive");
  if (!(sigma2 > 0.0) || !(c > 0.0)) throw Error(ErrorCode::InvalidParameter, "sigma^2 and c must be positive");
  if (!(target_power > 0.0 && target_power < 1.0)) throw Error(ErrorCode::InvalidParameter, "power must lie in (0, 1)");
  boost::math::normal nd;
  double z = boost::math::quantile(nd, 1.0 - target_power);
  double a = sigma2 * z * z, b = c * d;
  // the squared equation has two roots; for power below 1/2 the smaller one is genuine
  double root = std::sqrt(a * (a + 2.0 * b));
  double nstar = (a + b + (target_power >= 0.5 ? root : -root)) / (2.0 * d * d);
  return static_cast<long long>(std::floor(nstar)) + 1;
}

}  // namespace cldiv
