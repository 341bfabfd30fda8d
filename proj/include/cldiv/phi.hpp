#pragma once

#include "cldiv/core.hpp"

#include <functional>
#include <optional>
#include <sstream>
#include <string>

namespace cldiv {

// User supplied convex generator; phi(1) must be 0.
struct CustomPhi {
  std::function<double(double)> phi;
  double phi2_at_one = 1.0;
  std::optional<double> at_zero;  // value of the t -> 0+ limit, if finite or known
  std::string name = "custom";
};

class PhiFamily {
 public:
  enum class Kind { CressieRead, KullbackLeibler, Custom };

  static PhiFamily cressie_read(double lambda) {
    if (!std::isfinite(lambda)) throw Error(ErrorCode::InvalidParameter, "lambda must be finite");
    PhiFamily f;
    f.kind_ = Kind::CressieRead;
    f.lambda_ = lambda;
    return f;
  }
  static PhiFamily kullback_leibler() {
    PhiFamily f;
    f.kind_ = Kind::KullbackLeibler;
    f.lambda_ = 0.0;
    return f;
  }
  static PhiFamily custom(CustomPhi c) {
    if (!c.phi) throw Error(ErrorCode::InvalidParameter, "custom phi needs a callable");
    if (!(c.phi2_at_one > 0.0)) throw Error(ErrorCode::InvalidParameter, "phi''(1) must be positive");
    PhiFamily f;
    f.kind_ = Kind::Custom;
    f.custom_ = std::move(c);
    return f;
  }

  Kind kind() const { return kind_; }
  bool is_power() const { return kind_ != Kind::Custom; }
  double lambda() const {
    if (kind_ == Kind::Custom) throw Error(ErrorCode::InvalidParameter, "custom phi has no lambda");
    return lambda_;
  }

  double operator()(double t) const {
    if (std::isnan(t) || t < 0.0) throw Error(ErrorCode::NonPositiveArgument, "phi argument must be >= 0");
    if (kind_ == Kind::Custom) {
      if (t == 0.0) {
        if (!custom_.at_zero) throw Error(ErrorCode::UndefinedLimit, "custom phi has no limit at 0");
        return *custom_.at_zero;
      }
      return custom_.phi(t);
    }
    return power_phi(lambda_, t);
  }

  double second_derivative_at_one() const {
    return kind_ == Kind::Custom ? custom_.phi2_at_one : 1.0;
  }

  std::string label() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::KullbackLeibler: return "kl";
      case Kind::Custom: return custom_.name;
      case Kind::CressieRead: os << "cr:" << lambda_; return os.str();
    }
    return "";
  }

  static double power_phi(double lambda, double t) {
    if (t == std::numeric_limits<double>::infinity()) return kInf;
    if (lambda == 0.0) return t == 0.0 ? 1.0 : t * std::log(t) - t + 1.0;
    if (lambda == -1.0) return t == 0.0 ? kInf : -std::log(t) + t - 1.0;
    if (t == 0.0) return lambda > -1.0 ? 1.0 / (lambda + 1.0) : kInf;
    return (std::pow(t, lambda + 1.0) - t - lambda * (t - 1.0)) / (lambda * (lambda + 1.0));
  }

 private:
  PhiFamily() = default;
  Kind kind_ = Kind::KullbackLeibler;
  double lambda_ = 0.0;
  CustomPhi custom_;
};

struct HValue {
  double value = 0.0;
  bool domain_violation = false;
};

struct CustomH {
  std::function<double(double)> h;
  double derivative_at_zero = 1.0;
  double sup_domain = kInf;  // h is defined on [0, sup_domain)
  std::string name = "custom";
};

// Increasing transform with h(0) = 0 applied to a phi-divergence.
class HFunction {
 public:
  enum class Kind { Identity, Renyi, SharmaMittal, Custom };

  static HFunction identity() { return HFunction(); }
  static HFunction renyi(double a) {
    if (!std::isfinite(a) || a == 0.0 || a == 1.0)
      throw Error(ErrorCode::InvalidParameter, "renyi order must differ from 0 and 1");
    HFunction h;
    h.kind_ = Kind::Renyi;
    h.a_ = a;
    return h;
  }
  static HFunction sharma_mittal(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || a == 1.0 || b == 1.0)
      throw Error(ErrorCode::InvalidParameter, "sharma-mittal orders must differ from 1");
    if (!(a > 0.0)) throw Error(ErrorCode::InvalidParameter, "sharma-mittal needs a > 0 so that h'(0) > 0");
    HFunction h;
    h.kind_ = Kind::SharmaMittal;
    h.a_ = a;
    h.b_ = b;
    return h;
  }
  static HFunction custom(CustomH c) {
    if (!c.h) throw Error(ErrorCode::InvalidParameter, "custom h needs a callable");
    if (!(c.derivative_at_zero > 0.0)) throw Error(ErrorCode::InvalidParameter, "h'(0) must be positive");
    HFunction h;
    h.kind_ = Kind::Custom;
    h.custom_ = std::move(c);
    return h;
  }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }

  double derivative_at_zero() const {
    switch (kind_) {
      case Kind::Identity: return 1.0;
      case Kind::Renyi: return 1.0;
      case Kind::SharmaMittal: return a_;
      case Kind::Custom: return custom_.derivative_at_zero;
    }
    return 1.0;
  }

  HValue operator()(double x) const {
    if (std::isnan(x) || x < 0.0) throw Error(ErrorCode::NonPositiveArgument, "h argument must be >= 0");
    switch (kind_) {
      case Kind::Identity: return {x, false};
      case Kind::Renyi: {
        double k = a_ * (a_ - 1.0);
        if (x == kInf) return {kInf, k < 0.0};
        double arg = k * x + 1.0;
        if (arg <= 0.0) return {kInf, true};
        return {std::log1p(k * x) / k, false};
      }
      case Kind::SharmaMittal: {
        double k = a_ * (a_ - 1.0);
        double e = (b_ - 1.0) / (a_ - 1.0);
        if (x == kInf) {
          if (k < 0.0) return {kInf, true};
          return {e > 0.0 ? kInf : -1.0 / (b_ - 1.0), false};
        }
        double arg = k * x + 1.0;
        if (arg <= 0.0) return {kInf, true};
        return {std::expm1(e * std::log1p(k * x)) / (b_ - 1.0), false};
      }
      case Kind::Custom:
        if (x >= custom_.sup_domain) return {kInf, true};
        return {custom_.h(x), false};
    }
    return {x, false};
  }

  std::string label() const {
    std::ostringstream os;
    switch (kind_) {
      case Kind::Identity: return "identity";
      case Kind::Renyi: os << "renyi:" << a_; return os.str();
      case Kind::SharmaMittal: os << "sharma-mittal:" << a_ << "," << b_; return os.str();
      case Kind::Custom: return custom_.name;
    }
    return "";
  }

 private:
  Kind kind_ = Kind::Identity;
  double a_ = 0.0;
  double b_ = 0.0;
  CustomH custom_;
};

}  // namespace cldiv
