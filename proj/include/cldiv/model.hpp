#pragma once

#include "cldiv/core.hpp"
#include "cldiv/detail/numdiff.hpp"
#include "cldiv/phi.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cldiv {

// A composite likelihood: weighted sum of block log densities. Subclasses
// supply the blocks; analytic score, H, J and samplers are optional.
class CompositeModel {
 public:
  virtual ~CompositeModel() = default;

  virtual std::string name() const = 0;
  virtual Index obs_dim() const = 0;
  virtual Index param_dim() const = 0;
  virtual Index block_count() const = 0;
  virtual double block_weight(Index) const { return 1.0; }
  virtual double block_log_density(Index k, const Vector& theta, const Vector& y) const = 0;

  virtual std::vector<std::string> param_names() const {
    std::vector<std::string> names;
    for (Index i = 0; i < param_dim(); ++i) names.push_back("theta" + std::to_string(i));
    return names;
  }
  virtual std::vector<Interval> bounds() const { return std::vector<Interval>(param_dim()); }

  virtual bool admissible(const Vector& theta) const {
    if (theta.size() != param_dim()) return false;
    auto b = bounds();
    for (Index i = 0; i < theta.size(); ++i)
      if (!std::isfinite(theta[i]) || !b[i].contains(theta[i])) return false;
    return true;
  }

  virtual double log_density(const Vector& theta, const Vector& y) const {
    double s = 0.0;
    for (Index k = 0; k < block_count(); ++k) s += block_weight(k) * block_log_density(k, theta, y);
    return s;
  }

  virtual Vector score(const Vector& theta, const Vector& y) const {
    return detail::central_gradient([&](const Vector& t) { return log_density(t, y); }, theta);
  }

  // Sums over the sample; override when sufficient statistics make this cheap.
  virtual double total_loglik(const Vector& theta, const Sample& s) const {
    double acc = 0.0;
    for (Index i = 0; i < s.size(); ++i) acc += log_density(theta, s.y.row(i).transpose());
    return acc;
  }
  virtual Vector total_score(const Vector& theta, const Sample& s) const {
    Vector acc = Vector::Zero(param_dim());
    for (Index i = 0; i < s.size(); ++i) acc += score(theta, s.y.row(i).transpose());
    return acc;
  }
  // Hessian of the total composite log-likelihood.
  virtual Matrix total_hessian(const Vector& theta, const Sample& s) const {
    Matrix h = detail::central_jacobian([&](const Vector& t) { return total_score(t, s); }, theta);
    return 0.5 * (h + h.transpose());
  }

  virtual std::optional<Matrix> sensitivity(const Vector&) const { return std::nullopt; }
  virtual std::optional<Matrix> variability(const Vector&) const { return std::nullopt; }
  // Expected outer product of the score under the composite density; this is
  // the curvature of the composite divergence at coincident arguments.
  virtual std::optional<Matrix> composite_information(const Vector& theta) const { return sensitivity(theta); }

  virtual bool can_sample() const { return false; }
  virtual Sample sample(const Vector&, Index, std::uint64_t) const {
    throw Error(ErrorCode::NotImplemented, name() + " has no sampler");
  }
  // Draws from the normalized composite density (used by Monte Carlo divergences).
  virtual bool can_sample_composite() const { return false; }
  virtual Sample sample_composite(const Vector&, Index, std::uint64_t) const {
    throw Error(ErrorCode::NotImplemented, name() + " has no composite sampler");
  }

  virtual std::optional<double> closed_form_divergence(const Vector&, const Vector&, const PhiFamily&) const {
    return std::nullopt;
  }

  virtual Vector initial_guess(const Sample&) const {
    Vector t(param_dim());
    auto b = bounds();
    for (Index i = 0; i < t.size(); ++i) {
      bool lo = std::isfinite(b[i].lo), hi = std::isfinite(b[i].hi);
      t[i] = lo && hi ? 0.5 * (b[i].lo + b[i].hi) : lo ? b[i].lo + 1.0 : hi ? b[i].hi - 1.0 : 0.0;
    }
    return t;
  }
};

inline void check_theta(const CompositeModel& m, const Vector& theta) {
  if (theta.size() != m.param_dim())
    throw Error(ErrorCode::DimensionMismatch, "parameter vector has wrong length");
  if (!m.admissible(theta)) throw Error(ErrorCode::InadmissibleParameter, "parameter outside the model space");
}

inline void check_sample(const CompositeModel& m, const Sample& s) {
  if (s.dim() != m.obs_dim()) throw Error(ErrorCode::DimensionMismatch, "sample has wrong number of columns");
  if (s.size() < 1) throw Error(ErrorCode::InvalidData, "empty sample");
  if (!s.y.allFinite()) throw Error(ErrorCode::InvalidData, "sample contains non-finite values");
}

inline double composite_loglik(const CompositeModel& m, const Vector& theta, const Sample& s) {
  check_theta(m, theta);
  check_sample(m, s);
  return m.total_loglik(theta, s);
}

inline Vector composite_score(const CompositeModel& m, const Vector& theta, const Sample& s) {
  check_theta(m, theta);
  check_sample(m, s);
  return m.total_score(theta, s);
}

struct MatrixEstimate {
  Matrix value;
  bool singular = false;
};

inline bool near_singular(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  double mx = es.eigenvalues().cwiseAbs().maxCoeff();
  return !(es.eigenvalues().minCoeff() > 1e-12 * std::max(mx, 1e-300));
}

// (1/n) sum u u^T, optionally centered at the sample mean score.
inline MatrixEstimate empirical_variability(const CompositeModel& m, const Vector& theta, const Sample& s,
                                            bool centered = false) {
  check_theta(m, theta);
  check_sample(m, s);
  const Index p = m.param_dim();
  Matrix u(s.size(), p);
  for (Index i = 0; i < s.size(); ++i) u.row(i) = m.score(theta, s.y.row(i).transpose()).transpose();
  if (centered) u.rowwise() -= u.colwise().mean();
  Matrix j = (u.transpose() * u) / static_cast<double>(s.size());
  return {j, near_singular(j)};
}

// -(1/n) times the Hessian of the total composite log-likelihood.
inline MatrixEstimate empirical_sensitivity(const CompositeModel& m, const Vector& theta, const Sample& s) {
  check_theta(m, theta);
  check_sample(m, s);
  Matrix h = -m.total_hessian(theta, s) / static_cast<double>(s.size());
  return {h, near_singular(h)};
}

struct ConstraintSpec {
  Index r = 0;
  std::function<Vector(const Vector&)> g;
  std::function<Matrix(const Vector&)> jacobian;  // p x r, column j is grad g_j

  Vector value(const Vector& theta) const { return g(theta); }
  Matrix jac(const Vector& theta) const {
    if (jacobian) return jacobian(theta);
    Matrix jt = detail::central_jacobian(g, theta);
    return jt.transpose();
  }
};

inline void validate_constraint(const ConstraintSpec& c, Index p) {
  if (!c.g) throw Error(ErrorCode::InvalidConstraint, "constraint function missing");
  if (c.r < 1 || c.r >= p) throw Error(ErrorCode::InvalidConstraint, "constraint count must satisfy 0 < r < p");
}

// Linear constraints theta[idx[j]] = values[j].
inline ConstraintSpec fix_coordinates(Index p, std::vector<Index> idx, std::vector<double> values) {
  if (idx.size() != values.size()) throw Error(ErrorCode::InvalidConstraint, "index/value count mismatch");
  for (Index i : idx)
    if (i < 0 || i >= p) throw Error(ErrorCode::InvalidConstraint, "constrained index out of range");
  ConstraintSpec c;
  c.r = static_cast<Index>(idx.size());
  c.g = [idx, values](const Vector& t) {
    Vector out(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) out[j] = t[idx[j]] - values[j];
    return out;
  };
  c.jacobian = [idx, p](const Vector&) {
    Matrix gm = Matrix::Zero(p, idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) gm(idx[j], j) = 1.0;
    return gm;
  };
  return c;
}

// Plug-in H and J: analytic when the model has them, else empirical from the sample.
inline Matrix plugin_sensitivity(const CompositeModel& m, const Vector& theta, const Sample* s) {
  if (auto h = m.sensitivity(theta)) return *h;
  if (!s) throw Error(ErrorCode::NotImplemented, "no analytic H and no sample for an empirical estimate");
  return empirical_sensitivity(m, theta, *s).value;
}

inline Matrix plugin_variability(const CompositeModel& m, const Vector& theta, const Sample* s) {
  if (auto j = m.variability(theta)) return *j;
  if (!s) throw Error(ErrorCode::NotImplemented, "no analytic J and no sample for an empirical estimate");
  return empirical_variability(m, theta, *s).value;
}

inline Matrix plugin_composite_information(const CompositeModel& m, const Vector& theta, const Sample* s) {
  if (auto a = m.composite_information(theta)) return *a;
  return plugin_sensitivity(m, theta, s);
}

}  // namespace cldiv
