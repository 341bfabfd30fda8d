#pragma once

#include "cldiv/model.hpp"
#include "cldiv/rng.hpp"

#include <array>
#include <random>

namespace cldiv {

// Four-variate normal with unit variances, corr(Y1,Y2) = corr(Y3,Y4) = rho and
// all cross-pair correlations 2 rho. The composite likelihood multiplies the
// (Y1,Y2) and (Y3,Y4) bivariate margins. theta = (mu1, mu2, mu3, mu4, rho).
namespace normal4 {

inline constexpr double kRhoSampleLo = -0.2;
inline constexpr double kRhoSampleHi = 1.0 / 3.0;

inline Eigen::Matrix4d sigma(double rho) {
  Eigen::Matrix4d s;
  double c = 2.0 * rho;
  s << 1, rho, c, c,
       rho, 1, c, c,
       c, c, 1, rho,
       c, c, rho, 1;
  return s;
}

inline void check_rho(double rho) {
  if (!(rho > -1.0 && rho < 1.0)) throw Error(ErrorCode::InadmissibleParameter, "rho must lie in (-1, 1)");
}

// Square root of Sigma(rho) for sampling. Sigma is singular at the closed ends
// of [-1/5, 1/3]; there the draws come from a degenerate normal via the
// symmetric square root.
inline Eigen::Matrix4d sampling_factor(double rho) {
  if (!(rho >= kRhoSampleLo && rho <= kRhoSampleHi))
    throw Error(ErrorCode::CholeskyFailure, "four-variate covariance is not positive semidefinite for this rho");
  Eigen::LLT<Eigen::Matrix4d> llt(sigma(rho));
  if (llt.info() == Eigen::Success && rho > kRhoSampleLo && rho < kRhoSampleHi) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(sigma(rho));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// Sensitivity matrix per observation.
inline Matrix h_matrix(double rho) {
  check_rho(rho);
  double w = 1.0 - rho * rho;
  Matrix h = Matrix::Zero(5, 5);
  for (int b = 0; b < 4; b += 2) {
    h(b, b) = h(b + 1, b + 1) = 1.0 / w;
    h(b, b + 1) = h(b + 1, b) = -rho / w;
  }
  h(4, 4) = 2.0 * (1.0 + rho * rho) / (w * w);
  return h;
}

// Covariance of the composite score under the four-variate model. The blocks
// are correlated (2 rho), so this differs from H unless rho = 0.
inline Matrix j_matrix(double rho) {
  Matrix j = h_matrix(rho);
  double q = (1.0 + rho) * (1.0 + rho);
  double cross = 2.0 * rho / q;
  for (int a = 0; a < 2; ++a)
    for (int b = 2; b < 4; ++b) j(a, b) = j(b, a) = cross;
  j(4, 4) += 16.0 * rho * rho / (q * q);
  return j;
}

// Second moments about the means, divided by n.
struct Moments {
  double n = 0.0;
  std::array<double, 4> v2{};  // v_j^2
  double v12 = 0.0;
  double v34 = 0.0;
  double c() const { return 0.5 * (v12 + v34); }
  double vs() const { return v2[0] + v2[1] + v2[2] + v2[3]; }
};

inline Moments moments(const Sample& s, const Eigen::Vector4d& mu) {
  if (s.dim() != 4) throw Error(ErrorCode::DimensionMismatch, "normal4 needs four columns");
  if (s.size() < 1) throw Error(ErrorCode::InvalidData, "empty sample");
  Moments m;
  m.n = static_cast<double>(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    double d[4];
    for (int j = 0; j < 4; ++j) {
      d[j] = s.y(i, j) - mu[j];
      m.v2[j] += d[j] * d[j];
    }
    m.v12 += d[0] * d[1];
    m.v34 += d[2] * d[3];
  }
  for (double& v : m.v2) v /= m.n;
  m.v12 /= m.n;
  m.v34 /= m.n;
  return m;
}

inline Eigen::Vector4d sample_mean(const Sample& s) {
  if (s.dim() != 4) throw Error(ErrorCode::DimensionMismatch, "normal4 needs four columns");
  return s.y.colwise().mean().transpose();
}

inline Moments suff_stats(const Sample& s) { return moments(s, sample_mean(s)); }

// Profile composite log-likelihood per observation (means at the sample mean),
// up to a constant.
inline double profile_loglik(const Moments& m, double rho) {
  double w = 1.0 - rho * rho;
  return -std::log(w) - (m.vs() - 4.0 * rho * m.c()) / (2.0 * w);
}

// Real roots of x^3 + a x^2 + b x + c.
inline std::vector<double> cubic_roots(double a, double b, double c) {
  std::vector<double> roots;
  double q = (a * a - 3.0 * b) / 9.0;
  double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  double q3 = q * q * q;
  if (r * r < q3) {
    double t = std::acos(std::clamp(r / std::sqrt(q3), -1.0, 1.0));
    double sq = -2.0 * std::sqrt(q);
    roots = {sq * std::cos(t / 3.0) - a / 3.0, sq * std::cos((t + 2.0 * M_PI) / 3.0) - a / 3.0,
             sq * std::cos((t - 2.0 * M_PI) / 3.0) - a / 3.0};
  } else {
    double big = -std::copysign(std::cbrt(std::abs(r) + std::sqrt(r * r - q3)), r);
    double small = big == 0.0 ? 0.0 : q / big;
    roots = {big + small - a / 3.0};
  }
  for (double& x : roots) {
    for (int k = 0; k < 3; ++k) {
      double f = ((x + a) * x + b) * x + c;
      double fp = (3.0 * x + 2.0 * a) * x + b;
      if (fp == 0.0) break;
      x -= f / fp;
    }
  }
  return roots;
}

struct RhoEstimate {
  double rho = 0.0;
  int candidates = 0;
  bool outside_sampling_range = false;  // root outside (-1/5, 1/3)
};

// Maximizer of the profile composite likelihood: the admissible root of
// rho^3 - c rho^2 + (vs/2 - 1) rho - c = 0 with the largest likelihood.
inline RhoEstimate rho_hat(const Moments& m) {
  auto roots = cubic_roots(-m.c(), 0.5 * m.vs() - 1.0, -m.c());
  RhoEstimate best;
  double best_ll = -kInf;
  for (double r : roots) {
    if (!(r > -1.0 && r < 1.0)) continue;
    ++best.candidates;
    double ll = profile_loglik(m, r);
    if (ll > best_ll) {
      best_ll = ll;
      best.rho = r;
    }
  }
  if (best.candidates == 0) throw Error(ErrorCode::NoAdmissibleRoot, "no root of the score equation in (-1, 1)");
  best.outside_sampling_range = !(best.rho > kRhoSampleLo && best.rho < kRhoSampleHi);
  return best;
}

inline RhoEstimate rho_hat(const Sample& s) { return rho_hat(suff_stats(s)); }

// Renyi statistic of order r for H0: rho = rho0.
inline double renyi_stat(double n, double rho0, double rho_hat, double r) {
  check_rho(rho0);
  check_rho(rho_hat);
  double w0 = 1.0 - rho0 * rho0, wh = 1.0 - rho_hat * rho_hat;
  if (r == 1.0) return std::max(0.0, 2.0 * n * (std::log(w0 / wh) + 2.0 * rho0 * (rho0 - rho_hat) / w0));
  if (r == 0.0) return std::max(0.0, 2.0 * n * (std::log(wh / w0) + 2.0 * rho_hat * (rho_hat - rho0) / wh));
  double mix = r * rho0 + (1.0 - r) * rho_hat;
  double den = 1.0 - mix * mix;
  if (den <= 0.0) return kInf;
  return std::max(0.0, 2.0 * n / (r * (r - 1.0)) * (r * std::log(w0) - (r - 1.0) * std::log(wh) - std::log(den)));
}

// Cressie-Read statistic: twice the sum of the two block divergences.
inline double cressie_read_stat(double n, double rho0, double rho_hat, double lambda) {
  if (lambda == 0.0) return renyi_stat(n, rho0, rho_hat, 1.0);
  if (lambda == -1.0) return renyi_stat(n, rho0, rho_hat, 0.0);
  check_rho(rho0);
  check_rho(rho_hat);
  double mix = (lambda + 1.0) * rho0 - lambda * rho_hat;
  double den = 1.0 - mix * mix;
  if (den <= 0.0) return kInf;
  double w0 = 1.0 - rho0 * rho0, wh = 1.0 - rho_hat * rho_hat;
  double log_ratio = (lambda + 1.0) * std::log(w0) - lambda * std::log(wh) - std::log(den);
  // nonnegative in exact arithmetic; clamp the rounding residue at the null
  return std::max(0.0, 4.0 * n / (lambda * (lambda + 1.0)) * std::expm1(0.5 * log_ratio));
}

// 2 (cl(theta_hat) - cl(theta_tilde)); both estimates share the sample mean.
inline double clrt_stat(const Moments& m, double rho0, double rho_hat) {
  check_rho(rho0);
  check_rho(rho_hat);
  double w0 = 1.0 - rho0 * rho0, wh = 1.0 - rho_hat * rho_hat;
  double d1 = 1.0 / w0 - 1.0 / wh;
  double d2 = rho0 / w0 - rho_hat / wh;
  return m.n * (2.0 * std::log(w0 / wh) + m.vs() * d1 - 2.0 * (m.v12 + m.v34) * d2);
}

}  // namespace normal4

enum class Normal4Variability { Exact, Published };

class Normal4Model : public CompositeModel {
 public:
  explicit Normal4Model(Normal4Variability v = Normal4Variability::Exact) : variability_(v) {}

  std::string name() const override { return "normal4"; }
  Index obs_dim() const override { return 4; }
  Index param_dim() const override { return 5; }
  Index block_count() const override { return 2; }
  std::vector<std::string> param_names() const override { return {"mu1", "mu2", "mu3", "mu4", "rho"}; }
  std::vector<Interval> bounds() const override {
    std::vector<Interval> b(5);
    b[4] = {-1.0, 1.0};
    return b;
  }
  Normal4Variability variability_mode() const { return variability_; }

  double block_log_density(Index k, const Vector& theta, const Vector& y) const override {
    double rho = theta[4], w = 1.0 - rho * rho;
    double a = y[2 * k] - theta[2 * k], b = y[2 * k + 1] - theta[2 * k + 1];
    return -std::log(2.0 * M_PI) - 0.5 * std::log(w) - (a * a - 2.0 * rho * a * b + b * b) / (2.0 * w);
  }

  Vector score(const Vector& theta, const Vector& y) const override {
    double rho = theta[4], w = 1.0 - rho * rho;
    Vector u = Vector::Zero(5);
    for (int k = 0; k < 2; ++k) {
      double a = y[2 * k] - theta[2 * k], b = y[2 * k + 1] - theta[2 * k + 1];
      u[2 * k] = (a - rho * b) / w;
      u[2 * k + 1] = (b - rho * a) / w;
      double q = a * a - 2.0 * rho * a * b + b * b;
      u[4] += rho / w + a * b / w - rho * q / (w * w);
    }
    return u;
  }

  double total_loglik(const Vector& theta, const Sample& s) const override {
    auto t = totals(theta, s);
    double rho = theta[4], w = 1.0 - rho * rho, acc = 0.0;
    for (int k = 0; k < 2; ++k) {
      double q = t.saa[k] - 2.0 * rho * t.sab[k] + t.sbb[k];
      acc += -t.n * std::log(2.0 * M_PI) - 0.5 * t.n * std::log(w) - q / (2.0 * w);
    }
    return acc;
  }

  Vector total_score(const Vector& theta, const Sample& s) const override {
    auto t = totals(theta, s);
    double rho = theta[4], w = 1.0 - rho * rho;
    Vector u = Vector::Zero(5);
    for (int k = 0; k < 2; ++k) {
      u[2 * k] = (t.sa[k] - rho * t.sb[k]) / w;
      u[2 * k + 1] = (t.sb[k] - rho * t.sa[k]) / w;
      double q = t.saa[k] - 2.0 * rho * t.sab[k] + t.sbb[k];
      u[4] += t.n * rho / w + t.sab[k] / w - rho * q / (w * w);
    }
    return u;
  }

  Matrix total_hessian(const Vector& theta, const Sample& s) const override {
    auto t = totals(theta, s);
    double rho = theta[4], w = 1.0 - rho * rho, w2 = w * w;
    Matrix h = Matrix::Zero(5, 5);
    for (int k = 0; k < 2; ++k) {
      int a = 2 * k, b = 2 * k + 1;
      h(a, a) = h(b, b) = -t.n / w;
      h(a, b) = h(b, a) = t.n * rho / w;
      h(a, 4) = h(4, a) = (2.0 * rho * t.sa[k] - (1.0 + rho * rho) * t.sb[k]) / w2;
      h(b, 4) = h(4, b) = (2.0 * rho * t.sb[k] - (1.0 + rho * rho) * t.sa[k]) / w2;
      double q = t.saa[k] - 2.0 * rho * t.sab[k] + t.sbb[k];
      h(4, 4) += (t.n * (1.0 + rho * rho) + 4.0 * rho * t.sab[k] - q) / w2 - 4.0 * rho * rho * q / (w2 * w);
    }
    return h;
  }

  std::optional<Matrix> sensitivity(const Vector& theta) const override { return normal4::h_matrix(theta[4]); }
  std::optional<Matrix> variability(const Vector& theta) const override {
    if (variability_ == Normal4Variability::Published) return normal4::h_matrix(theta[4]);
    return normal4::j_matrix(theta[4]);
  }

  bool can_sample() const override { return true; }
  Sample sample(const Vector& theta, Index n, std::uint64_t seed) const override {
    auto rng = substream(seed, 0);
    return draw(theta, n, rng);
  }

  template <class Rng>
  Sample draw(const Vector& theta, Index n, Rng& rng) const {
    check_theta(*this, theta);
    const Eigen::Matrix4d l = normal4::sampling_factor(theta[4]);
    std::normal_distribution<double> z;
    Sample s;
    s.y.resize(n, 4);
    Eigen::Vector4d zz;
    for (Index i = 0; i < n; ++i) {
      for (int j = 0; j < 4; ++j) zz[j] = z(rng);
      s.y.row(i) = (theta.head<4>() + l * zz).transpose();
    }
    return s;
  }

  bool can_sample_composite() const override { return true; }
  Sample sample_composite(const Vector& theta, Index n, std::uint64_t seed) const override {
    check_theta(*this, theta);
    double rho = theta[4];
    auto rng = substream(seed, 1);
    std::normal_distribution<double> z;
    Sample s;
    s.y.resize(n, 4);
    double c = std::sqrt(1.0 - rho * rho);
    for (Index i = 0; i < n; ++i)
      for (int k = 0; k < 2; ++k) {
        double z1 = z(rng), z2 = z(rng);
        s.y(i, 2 * k) = theta[2 * k] + z1;
        s.y(i, 2 * k + 1) = theta[2 * k + 1] + rho * z1 + c * z2;
      }
    return s;
  }

  // Exact phi-divergence between the composite densities for the power family.
  std::optional<double> closed_form_divergence(const Vector& t1, const Vector& t2,
                                               const PhiFamily& phi) const override {
    if (!phi.is_power()) return std::nullopt;
    check_theta(*this, t1);
    check_theta(*this, t2);
    double lambda = phi.lambda();
    if (lambda == 0.0) return kl(t1, t2);
    if (lambda == -1.0) return kl(t2, t1);
    double a = lambda + 1.0, logi = 0.0;
    for (int k = 0; k < 2; ++k) {
      double li = log_affinity(t1, t2, k, a);
      if (li == kInf) return kInf;
      logi += li;
    }
    return std::expm1(logi) / (lambda * (lambda + 1.0));
  }

  Vector initial_guess(const Sample& s) const override {
    Vector t(5);
    t.head<4>() = normal4::sample_mean(s);
    auto m = normal4::suff_stats(s);
    double r1 = m.v12 / std::sqrt(m.v2[0] * m.v2[1]);
    double r2 = m.v34 / std::sqrt(m.v2[2] * m.v2[3]);
    double r = 0.5 * (r1 + r2);
    t[4] = std::isfinite(r) ? std::clamp(r, -0.9, 0.9) : 0.0;
    return t;
  }

 private:
  struct Totals {
    double n;
    double sa[2], sb[2], saa[2], sbb[2], sab[2];
  };

  static Totals totals(const Vector& theta, const Sample& s) {
    if (s.dim() != 4) throw Error(ErrorCode::DimensionMismatch, "normal4 needs four columns");
    Totals t{};
    t.n = static_cast<double>(s.size());
    for (Index i = 0; i < s.size(); ++i)
      for (int k = 0; k < 2; ++k) {
        double a = s.y(i, 2 * k) - theta[2 * k], b = s.y(i, 2 * k + 1) - theta[2 * k + 1];
        t.sa[k] += a;
        t.sb[k] += b;
        t.saa[k] += a * a;
        t.sbb[k] += b * b;
        t.sab[k] += a * b;
      }
    return t;
  }

  static Eigen::Matrix2d block_cov(double rho) {
    Eigen::Matrix2d s;
    s << 1, rho, rho, 1;
    return s;
  }

  // KL between the composite densities at t1 and t2.
  static double kl(const Vector& t1, const Vector& t2) {
    Eigen::Matrix2d s1 = block_cov(t1[4]), s2 = block_cov(t2[4]);
    Eigen::Matrix2d s2i = s2.inverse();
    double acc = 0.0;
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d d(t1[2 * k] - t2[2 * k], t1[2 * k + 1] - t2[2 * k + 1]);
      acc += 0.5 * ((s2i * s1).trace() + d.dot(s2i * d) - 2.0 + std::log(s2.determinant() / s1.determinant()));
    }
    return acc;
  }

  // log of int f1^a f2^(1-a) over block k; +inf when the integral diverges.
  static double log_affinity(const Vector& t1, const Vector& t2, int k, double a) {
    Eigen::Matrix2d s1 = block_cov(t1[4]), s2 = block_cov(t2[4]);
    Eigen::Matrix2d sa = (1.0 - a) * s1 + a * s2;
    Eigen::Matrix2d prec = a * s1.inverse() + (1.0 - a) * s2.inverse();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(prec, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) return kInf;
    Eigen::Vector2d d(t1[2 * k] - t2[2 * k], t1[2 * k + 1] - t2[2 * k + 1]);
    double quad = d.dot(sa.inverse() * d);
    return 0.5 * a * (a - 1.0) * quad -
           0.5 * (std::log(sa.determinant()) - (1.0 - a) * std::log(s1.determinant()) - a * std::log(s2.determinant()));
  }

  Normal4Variability variability_;
};

}  // namespace cldiv
