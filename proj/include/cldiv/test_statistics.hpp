#pragma once

#include "cldiv/asymptotics.hpp"
#include "cldiv/divergence.hpp"
#include "cldiv/estimation.hpp"
#include "cldiv/weighted_chisq.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <variant>

namespace cldiv {

// Moment-matched rescalings of a statistic with a weighted chi-square limit.
struct AdjustedSet {
  double t1 = 0.0;  // T / max weight,          ~ chi2_r
  double t2 = 0.0;  // T / mean weight,         ~ chi2_r
  double t3 = 0.0;  // T / (nu mean weight),    ~ chi2_{r/nu}
  double t4 = 0.0;  // (t2 - a) / b,            ~ chi2_r
  double nu = 1.0;
  double a = 0.0;
  double b = 1.0;
  double dof3 = 0.0;
  Index r = 0;
  double p1 = 1.0, p2 = 1.0, p3 = 1.0, p4 = 1.0;
};

struct TestOutcome {
  std::string label;
  double statistic = 0.0;
  SpectrumResult spectrum;
  double p_value = 1.0;
  double critical_value = 0.0;
  bool reject = false;
  bool domain_violation = false;
  std::optional<AdjustedSet> adjusted;
  Vector theta_hat;
  Vector theta_tilde;
};

struct TestOptions {
  double alpha = 0.05;
  DivergenceOptions divergence;
  NewtonOptions newton;
  bool with_adjusted = true;
};

using NullHypothesis = std::variant<Vector, ConstraintSpec>;

namespace detail {

inline double chisq_sf(double dof, double x) {
  if (x <= 0.0) return 1.0;
  if (x == kInf) return 0.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

inline void decide(TestOutcome& out, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidParameter, "alpha must lie in (0, 1)");
  auto w = out.spectrum.weights();
  out.critical_value = weighted_chisq_quantile(w, 1.0 - alpha);
  out.p_value = out.statistic == kInf ? 0.0 : weighted_chisq_sf(w, out.statistic);
  out.reject = out.statistic > out.critical_value;
}

}  // namespace detail

inline AdjustedSet adjust(double statistic, const SpectrumResult& spectrum) {
  auto w = spectrum.weights();
  if (w.empty()) throw Error(ErrorCode::InvalidParameter, "spectrum has no nonzero eigenvalue");
  AdjustedSet s;
  s.r = static_cast<Index>(w.size());
  double r = static_cast<double>(w.size());
  double mean = 0.0, mx = 0.0;
  for (double v : w) {
    mean += v / r;
    mx = std::max(mx, v);
  }
  double ss = 0.0;
  for (double v : w) ss += (v - mean) * (v - mean);
  s.nu = 1.0 + ss / (r * mean * mean);
  double c = 2.0 * ss / (mean * mean);
  s.b = std::sqrt(1.0 + c / (2.0 * r));
  s.a = r * (1.0 - s.b);
  s.dof3 = r / s.nu;
  s.t1 = statistic / mx;
  s.t2 = statistic / mean;
  s.t3 = statistic / (s.nu * mean);
  s.t4 = statistic == kInf ? kInf : (s.t2 - s.a) / s.b;
  s.p1 = detail::chisq_sf(r, s.t1);
  s.p2 = detail::chisq_sf(r, s.t2);
  s.p3 = detail::chisq_sf(s.dof3, s.t3);
  s.p4 = detail::chisq_sf(r, s.t4);
  return s;
}

namespace detail {

struct Fitted {
  Vector theta_hat;
  Vector theta_ref;
  SpectrumResult spectrum;
};

inline Fitted fit_simple(const CompositeModel& m, const Sample& s, const Vector& theta0, const TestOptions& opt) {
  check_theta(m, theta0);
  Fitted f;
  f.theta_hat = mcle(m, s, std::nullopt, opt.newton).theta;
  f.theta_ref = theta0;
  Matrix h = plugin_sensitivity(m, theta0, &s);
  Matrix j = plugin_variability(m, theta0, &s);
  f.spectrum = simple_null_spectrum(plugin_composite_information(m, theta0, &s), godambe(h, j));
  return f;
}

inline Fitted fit_composite(const CompositeModel& m, const Sample& s, const ConstraintSpec& c, const TestOptions& opt) {
  validate_constraint(c, m.param_dim());
  Fitted f;
  f.theta_hat = mcle(m, s, std::nullopt, opt.newton).theta;
  Vector start = f.theta_hat;
  f.theta_ref = restricted_mcle(m, s, c, start, opt.newton).theta;
  const Vector& t = f.theta_ref;
  Matrix h = plugin_sensitivity(m, t, &s);
  Matrix j = plugin_variability(m, t, &s);
  Matrix g = c.jac(t);
  auto blocks = constrained_blocks(h, g);
  f.spectrum = composite_null_spectrum(plugin_composite_information(m, t, &s), g, blocks.Q, godambe(h, j));
  return f;
}

inline TestOutcome divergence_outcome(const CompositeModel& m, const Sample& s, Fitted f, const HFunction& h,
                                      const PhiFamily& phi, const TestOptions& opt) {
  TestOutcome out;
  out.label = h.kind() == HFunction::Kind::Identity ? phi.label() : h.label() + "/" + phi.label();
  auto d = divergence(m, f.theta_hat, f.theta_ref, phi, opt.divergence);
  auto hv = hphi_divergence(h, d);
  out.domain_violation = hv.domain_violation;
  double scale = 2.0 * static_cast<double>(s.size()) / (phi.second_derivative_at_one() * h.derivative_at_zero());
  out.statistic = hv.value == kInf ? kInf : scale * hv.value;
  out.spectrum = f.spectrum;
  out.theta_hat = f.theta_hat;
  out.theta_tilde = f.theta_ref;
  detail::decide(out, opt.alpha);
  if (opt.with_adjusted && out.spectrum.k > 0) out.adjusted = adjust(out.statistic, out.spectrum);
  return out;
}

}  // namespace detail

inline TestOutcome simple_null_test(const CompositeModel& m, const Sample& s, const Vector& theta0,
                                    const PhiFamily& phi, const TestOptions& opt = {}) {
  return detail::divergence_outcome(m, s, detail::fit_simple(m, s, theta0, opt), HFunction::identity(), phi, opt);
}

inline TestOutcome composite_null_test(const CompositeModel& m, const Sample& s, const ConstraintSpec& c,
                                       const PhiFamily& phi, const TestOptions& opt = {}) {
  return detail::divergence_outcome(m, s, detail::fit_composite(m, s, c, opt), HFunction::identity(), phi, opt);
}

inline TestOutcome hphi_test(const CompositeModel& m, const Sample& s, const NullHypothesis& null,
                             const HFunction& h, const PhiFamily& phi, const TestOptions& opt = {}) {
  auto f = std::holds_alternative<Vector>(null) ? detail::fit_simple(m, s, std::get<Vector>(null), opt)
                                                : detail::fit_composite(m, s, std::get<ConstraintSpec>(null), opt);
  return detail::divergence_outcome(m, s, std::move(f), h, phi, opt);
}

// Composite likelihood ratio test 2 (cl(theta_hat) - cl(theta_tilde)).
inline TestOutcome clrt(const CompositeModel& m, const Sample& s, const ConstraintSpec& c, const TestOptions& opt = {}) {
  validate_constraint(c, m.param_dim());
  auto full = mcle(m, s, std::nullopt, opt.newton);
  auto restricted = restricted_mcle(m, s, c, full.theta, opt.newton);
  double gap = full.loglik - restricted.loglik;
  double tol = 1e-8 * std::max(1.0, std::abs(full.loglik));
  if (gap < -tol) throw Error(ErrorCode::NegativeGap, "restricted fit has larger composite likelihood");
  TestOutcome out;
  out.label = "clrt";
  out.statistic = 2.0 * std::max(gap, 0.0);
  const Vector& t = restricted.theta;
  Matrix h = plugin_sensitivity(m, t, &s);
  Matrix j = plugin_variability(m, t, &s);
  Matrix g = c.jac(t);
  auto blocks = constrained_blocks(h, g);
  out.spectrum = clrt_spectrum(h, g, blocks.Q, godambe(h, j));
  out.theta_hat = full.theta;
  out.theta_tilde = t;
  detail::decide(out, opt.alpha);
  if (opt.with_adjusted && out.spectrum.k > 0) out.adjusted = adjust(out.statistic, out.spectrum);
  return out;
}

struct PowerApproximation {
  double power = 0.0;
  double divergence = 0.0;
  double sigma = 0.0;
};

// Normal approximation to the power of the simple-null test at theta_star; the
// divergence gradient is taken by central differences in the first argument.
inline PowerApproximation simple_power(const CompositeModel& m, const Vector& theta_star, const Vector& theta0,
                                       const PhiFamily& phi, double n, double c_alpha, const Sample* s = nullptr,
                                       const DivergenceOptions& dopt = {}) {
  check_theta(m, theta_star);
  check_theta(m, theta0);
  PowerApproximation out;
  out.divergence = divergence(m, theta_star, theta0, phi, dopt).value;
  if (!(out.divergence > 0.0))
    throw Error(ErrorCode::DegenerateAlternative, "alternative has zero divergence from the null");
  Vector q = detail::central_gradient([&](const Vector& t) { return divergence(m, t, theta0, phi, dopt).value; },
                                      theta_star);
  Matrix gstar = godambe(plugin_sensitivity(m, theta0, s), plugin_variability(m, theta0, s));
  out.sigma = power_sigma(q, gstar);
  out.power = power_approx_simple(out.divergence, out.sigma, n, c_alpha, phi.second_derivative_at_one());
  return out;
}

}  // namespace cldiv
