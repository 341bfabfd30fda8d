#pragma once

#include "cldiv/model.hpp"
#include "cldiv/rng.hpp"

#include <optional>

namespace cldiv {

struct NewtonOptions {
  int max_iter = 200;
  double tol = 1e-9;
  int starts = 5;
  double start_spread = 0.25;
  std::uint64_t seed = 7;
};

struct Estimate {
  Vector theta;
  double loglik = 0.0;
  Vector score;
  int iterations = 0;
  bool converged = false;
  bool on_boundary = false;
};

struct RestrictedEstimate {
  Vector theta;
  Vector multipliers;  // lambda in score + G lambda = 0
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

inline bool near_bound(const CompositeModel& m, const Vector& t) {
  auto b = m.bounds();
  for (Index i = 0; i < t.size(); ++i) {
    double width = std::isfinite(b[i].hi - b[i].lo) ? b[i].hi - b[i].lo : 1.0 + std::abs(t[i]);
    double eps = 1e-7 * width;
    if (std::isfinite(b[i].lo) && t[i] - b[i].lo < eps) return true;
    if (std::isfinite(b[i].hi) && b[i].hi - t[i] < eps) return true;
  }
  return false;
}

// Ascent direction from the Hessian; falls back to an eigenvalue-floored version
// when -H is not positive definite.
inline Vector newton_direction(const Matrix& hess, const Vector& g) {
  Matrix neg = -hess;
  Eigen::LLT<Matrix> llt(neg);
  if (llt.info() == Eigen::Success) return llt.solve(g);
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (neg + neg.transpose()));
  Vector ev = es.eigenvalues().cwiseAbs();
  double floor = std::max(1e-8 * ev.maxCoeff(), 1e-12);
  for (Index i = 0; i < ev.size(); ++i) ev[i] = std::max(ev[i], floor);
  return es.eigenvectors() * (es.eigenvectors().transpose() * g).cwiseQuotient(ev);
}

inline Estimate newton_ascent(const CompositeModel& m, const Sample& s, Vector x, const NewtonOptions& opt) {
  Estimate e;
  double f = m.total_loglik(x, s);
  const double n = static_cast<double>(s.size());
  for (int it = 0; it < opt.max_iter; ++it) {
    Vector g = m.total_score(x, s);
    e.iterations = it;
    if (g.cwiseAbs().maxCoeff() <= opt.tol * (n + std::abs(f))) {
      e.converged = true;
      // one polishing step
      Vector xn = x + newton_direction(m.total_hessian(x, s), g);
      if (m.admissible(xn)) {
        double fn = m.total_loglik(xn, s);
        if (std::isfinite(fn) && fn >= f && m.total_score(xn, s).norm() <= g.norm()) {
          x = xn;
          f = fn;
        }
      }
      break;
    }
    Vector d = newton_direction(m.total_hessian(x, s), g);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      Vector xn = x + t * d;
      if (!m.admissible(xn)) continue;
      double fn = m.total_loglik(xn, s);
      if (std::isfinite(fn) && fn >= f - 1e-12 * std::abs(f)) {
        x = xn;
        f = fn;
        moved = true;
        break;
      }
    }
    if (!moved) {
      Vector gn = m.total_score(x, s);
      e.converged = gn.cwiseAbs().maxCoeff() <= 1e3 * opt.tol * (n + std::abs(f));
      break;
    }
  }
  e.theta = x;
  e.loglik = f;
  e.score = m.total_score(x, s);
  if (!e.converged) e.converged = e.score.cwiseAbs().maxCoeff() <= opt.tol * (n + std::abs(f));
  e.on_boundary = near_bound(m, x);
  return e;
}

}  // namespace detail

// Maximum composite likelihood estimate by damped Newton with several starts.
inline Estimate mcle(const CompositeModel& m, const Sample& s, std::optional<Vector> init = std::nullopt,
                     const NewtonOptions& opt = {}) {
  check_sample(m, s);
  Vector x0 = init ? *init : m.initial_guess(s);
  if (x0.size() != m.param_dim()) throw Error(ErrorCode::DimensionMismatch, "initial value has wrong length");
  if (!m.admissible(x0)) x0 = m.initial_guess(s);
  if (!m.admissible(x0)) throw Error(ErrorCode::InadmissibleParameter, "no admissible starting value");

  auto rng = substream(opt.seed, 0);
  std::normal_distribution<double> z;
  auto b = m.bounds();
  std::optional<Estimate> best;
  bool any_boundary = false;
  for (int k = 0; k < std::max(1, opt.starts); ++k) {
    Vector x = x0;
    if (k > 0) {
      Vector pert(x0.size());
      for (Index i = 0; i < x0.size(); ++i) {
        double w = std::isfinite(b[i].hi - b[i].lo) ? b[i].hi - b[i].lo : 1.0 + std::abs(x0[i]);
        pert[i] = opt.start_spread * w * z(rng);
      }
      double t = 1.0;
      while (!m.admissible(x0 + t * pert) && t > 1e-6) t *= 0.5;
      x = x0 + t * pert;
      if (!m.admissible(x)) continue;
    }
    Estimate e = detail::newton_ascent(m, s, x, opt);
    if (!e.converged) continue;
    if (e.on_boundary) {
      any_boundary = true;
      continue;
    }
    if (!best || e.loglik > best->loglik) best = e;
  }
  if (!best) {
    if (any_boundary) throw Error(ErrorCode::BoundaryHit, "composite likelihood maximized at the boundary");
    throw Error(ErrorCode::NoConvergence, "Newton iterations did not converge");
  }
  return *best;
}

// Maximizes the composite likelihood subject to g(theta) = 0 by Newton on the
// KKT system  score + G lambda = 0,  g = 0.
inline RestrictedEstimate restricted_mcle(const CompositeModel& m, const Sample& s, const ConstraintSpec& c,
                                          std::optional<Vector> init = std::nullopt, const NewtonOptions& opt = {}) {
  check_sample(m, s);
  const Index p = m.param_dim();
  validate_constraint(c, p);
  Vector x = init ? *init : m.initial_guess(s);
  if (x.size() != p) throw Error(ErrorCode::DimensionMismatch, "initial value has wrong length");
  if (!m.admissible(x)) throw Error(ErrorCode::InadmissibleParameter, "initial value outside the model space");
  if (c.value(x).size() != c.r) throw Error(ErrorCode::InvalidConstraint, "g returns the wrong number of values");

  const double n = static_cast<double>(s.size());
  Matrix gm = c.jac(x);
  if (gm.rows() != p || gm.cols() != c.r) throw Error(ErrorCode::InvalidConstraint, "constraint Jacobian must be p x r");
  if (Eigen::ColPivHouseholderQR<Matrix>(gm).rank() < c.r)
    throw Error(ErrorCode::SingularKKT, "constraint Jacobian is rank deficient");

  // Multipliers on the per-observation scale: lambda = n * mu.
  Vector sc = m.total_score(x, s) / n;
  Vector mu = -(gm.transpose() * gm).ldlt().solve(gm.transpose() * sc);

  auto residual = [&](const Vector& t, const Vector& mv) {
    Vector r(p + c.r);
    r.head(p) = m.total_score(t, s) / n + c.jac(t) * mv;
    r.tail(c.r) = c.value(t);
    return r;
  };

  RestrictedEstimate out;
  Vector res = residual(x, mu);
  double ll = m.total_loglik(x, s);
  for (int it = 0; it < opt.max_iter; ++it) {
    out.iterations = it;
    if (res.cwiseAbs().maxCoeff() <= opt.tol * (1.0 + std::abs(ll) / n)) {
      // one polishing step once inside the tolerance
      if (out.converged) break;
      out.converged = true;
    }
    gm = c.jac(x);
    Matrix curv = detail::central_jacobian([&](const Vector& t) { Vector v = c.jac(t) * mu; return v; }, x);
    Matrix kkt = Matrix::Zero(p + c.r, p + c.r);
    kkt.topLeftCorner(p, p) = m.total_hessian(x, s) / n + 0.5 * (curv + curv.transpose());
    kkt.topRightCorner(p, c.r) = gm;
    kkt.bottomLeftCorner(c.r, p) = gm.transpose();
    Eigen::FullPivLU<Matrix> lu(kkt);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) throw Error(ErrorCode::SingularKKT, "KKT matrix is singular");
    Vector step = lu.solve(-res);

    double t = 1.0, r0 = res.norm();
    bool moved = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      Vector xn = x + t * step.head(p);
      if (!m.admissible(xn)) continue;
      Vector mn = mu + t * step.tail(c.r);
      Vector rn = residual(xn, mn);
      if (rn.allFinite() && rn.norm() < r0 * (1.0 - 1e-4 * t)) {
        x = xn;
        mu = mn;
        res = rn;
        moved = true;
        break;
      }
    }
    ll = m.total_loglik(x, s);
    if (!moved) break;
  }
  if (!out.converged) out.converged = res.cwiseAbs().maxCoeff() <= 1e3 * opt.tol * (1.0 + std::abs(ll) / n);
  if (!out.converged) throw Error(ErrorCode::NoConvergence, "restricted Newton iterations did not converge");
  out.theta = x;
  out.multipliers = n * mu;
  out.loglik = ll;
  return out;
}

}  // namespace cldiv
