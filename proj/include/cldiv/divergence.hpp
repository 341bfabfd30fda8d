#pragma once

#include "cldiv/model.hpp"
#include "cldiv/phi.hpp"

#include <optional>

namespace cldiv {

enum class DivergenceMethod { Auto, ClosedForm, Quadrature, MonteCarlo };

struct DivergenceOptions {
  DivergenceMethod method = DivergenceMethod::Auto;
  Index draws = 200000;
  std::uint64_t seed = 20240531;
};

struct DivergenceValue {
  double value = 0.0;
  DivergenceMethod method = DivergenceMethod::ClosedForm;
  std::optional<double> std_error;
  bool infinite() const { return value == kInf; }
};

// D_phi(theta1, theta2) = int CL(theta2, y) phi(CL(theta1, y) / CL(theta2, y)) dy.
inline DivergenceValue divergence(const CompositeModel& m, const Vector& theta1, const Vector& theta2,
                                  const PhiFamily& phi, const DivergenceOptions& opt = {}) {
  check_theta(m, theta1);
  check_theta(m, theta2);
  auto method = opt.method;
  if (method == DivergenceMethod::Auto || method == DivergenceMethod::ClosedForm) {
    if (auto v = m.closed_form_divergence(theta1, theta2, phi)) return {*v, DivergenceMethod::ClosedForm, std::nullopt};
    if (method == DivergenceMethod::ClosedForm)
      throw Error(ErrorCode::NotImplemented, m.name() + " has no closed form for " + phi.label());
    method = DivergenceMethod::MonteCarlo;
  }
  if (method == DivergenceMethod::Quadrature)
    throw Error(ErrorCode::NotImplemented, "quadrature divergence is not available; use MonteCarlo");
  if (!m.can_sample_composite())
    throw Error(ErrorCode::NotImplemented, m.name() + " cannot draw from its composite density");
  if (opt.draws < 2) throw Error(ErrorCode::InvalidParameter, "need at least two draws");

  Sample s = m.sample_composite(theta2, opt.draws, opt.seed);
  double mean = 0.0, m2 = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    Vector y = s.y.row(i).transpose();
    double lr = m.log_density(theta1, y) - m.log_density(theta2, y);
    double v = phi(std::exp(lr));
    if (!std::isfinite(v)) return {kInf, DivergenceMethod::MonteCarlo, std::nullopt};
    double d = v - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (v - mean);
  }
  double n = static_cast<double>(s.size());
  double se = std::sqrt(m2 / (n - 1.0) / n);
  if (!std::isfinite(mean) || mean > 1e300) return {kInf, DivergenceMethod::MonteCarlo, std::nullopt};
  return {mean, DivergenceMethod::MonteCarlo, se};
}

inline HValue hphi_divergence(const HFunction& h, const DivergenceValue& d) { return h(std::max(0.0, d.value)); }

}  // namespace cldiv
