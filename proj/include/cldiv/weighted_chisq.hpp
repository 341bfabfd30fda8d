#pragma once

#include "cldiv/core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <vector>

namespace cldiv {

namespace detail {

// Wynn's epsilon algorithm over a sequence of partial sums.
class WynnEpsilon {
 public:
  double push(double s) {
    std::vector<double> next(prev_.size() + 1);
    next[0] = s;
    double best = s;
    for (std::size_t k = 1; k < next.size(); ++k) {
      double diff = next[k - 1] - prev_[k - 1];
      double base = k >= 2 ? prev_[k - 2] : 0.0;
      if (diff == 0.0) {
        next.resize(k);
        break;
      }
      next[k] = base + 1.0 / diff;
    }
    // even columns hold the estimates
    for (std::size_t k = 0; k < next.size(); k += 2) best = next[k];
    prev_ = next;
    return best;
  }

 private:
  std::vector<double> prev_;
};

inline std::vector<double> clean_weights(const std::vector<double>& w) {
  if (w.empty()) throw Error(ErrorCode::InvalidParameter, "empty weight list");
  std::vector<double> out;
  for (double v : w) {
    if (!std::isfinite(v) || v <= 0.0) throw Error(ErrorCode::InvalidParameter, "weights must be finite and > 0");
    out.push_back(v);
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

inline bool all_equal(const std::vector<double>& w) {
  for (double v : w)
    if (std::abs(v - w.front()) > 1e-14 * w.front()) return false;
  return true;
}

// P(Q > x) by inversion of the characteristic function.
inline double imhof_sf(const std::vector<double>& w, double x) {
  auto integrand = [&](double u) {
    double theta = -0.5 * x * u, logrho = 0.0;
    for (double l : w) {
      theta += 0.5 * std::atan(l * u);
      logrho += 0.25 * std::log1p(l * l * u * u);
    }
    return std::sin(theta) / (u * std::exp(logrho));
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double lmax = w.front();
  double step = 2.0 * M_PI / x;
  // The non-oscillating head first.
  double head = std::max(step, 20.0 / lmax);
  head = std::ceil(head / step) * step;
  double total = GK::integrate(integrand, 0.0, head, 15, 1e-13);
  WynnEpsilon wynn;
  double est = wynn.push(total), last = est;
  double a = head;
  int stable = 0;
  for (int k = 0; k < 400; ++k) {
    double piece = GK::integrate(integrand, a, a + step, 10, 1e-13);
    a += step;
    total += piece;
    est = wynn.push(total);
    if (std::abs(est - last) <= 1e-13 * std::max(1.0, std::abs(est)))
      ++stable;
    else
      stable = 0;
    last = est;
    if (stable >= 3 && k > 6) break;
  }
  return 0.5 + est / M_PI;
}

}  // namespace detail

// P(sum w_i Z_i^2 <= x) for independent standard normals.
inline double weighted_chisq_cdf(const std::vector<double>& weights, double x) {
  auto w = detail::clean_weights(weights);
  if (std::isnan(x)) throw Error(ErrorCode::InvalidParameter, "x is NaN");
  if (x <= 0.0) return 0.0;
  if (x == kInf) return 1.0;
  if (detail::all_equal(w)) return boost::math::gamma_p(0.5 * w.size(), 0.5 * x / w.front());
  double sf = detail::imhof_sf(w, x);
  return std::clamp(1.0 - sf, 0.0, 1.0);
}

inline double weighted_chisq_sf(const std::vector<double>& weights, double x) {
  auto w = detail::clean_weights(weights);
  if (std::isnan(x)) throw Error(ErrorCode::InvalidParameter, "x is NaN");
  if (x <= 0.0) return 1.0;
  if (x == kInf) return 0.0;
  if (detail::all_equal(w)) return boost::math::gamma_q(0.5 * w.size(), 0.5 * x / w.front());
  return std::clamp(detail::imhof_sf(w, x), 0.0, 1.0);
}

inline double weighted_chisq_quantile(const std::vector<double>& weights, double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidParameter, "probability must lie in (0, 1)");
  auto w = detail::clean_weights(weights);
  if (detail::all_equal(w)) return 2.0 * w.front() * boost::math::gamma_p_inv(0.5 * w.size(), p);
  double mean = 0.0, var = 0.0;
  for (double v : w) {
    mean += v;
    var += 2.0 * v * v;
  }
  double hi = mean + 4.0 * std::sqrt(var);
  while (weighted_chisq_cdf(w, hi) < p) hi *= 2.0;
  double lo = 0.0;
  auto f = [&](double x) { return weighted_chisq_cdf(w, x) - p; };
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, -p, f(hi),
                                             boost::math::tools::eps_tolerance<double>(48), iters);
  return 0.5 * (r.first + r.second);
}

inline double weighted_chisq_cdf(const Vector& weights, double x) {
  return weighted_chisq_cdf(std::vector<double>(weights.data(), weights.data() + weights.size()), x);
}
inline double weighted_chisq_sf(const Vector& weights, double x) {
  return weighted_chisq_sf(std::vector<double>(weights.data(), weights.data() + weights.size()), x);
}
inline double weighted_chisq_quantile(const Vector& weights, double p) {
  return weighted_chisq_quantile(std::vector<double>(weights.data(), weights.data() + weights.size()), p);
}

}  // namespace cldiv
