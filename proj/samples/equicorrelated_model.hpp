#pragma once

#include "cldiv/cldiv.hpp"

// Trivariate normal, common mean mu, unit variances, common correlation rho.
// Pairwise composite likelihood over the three overlapping pairs; only the
// block densities are supplied, so score, H and J come from the generic code.
class EquicorrelatedModel : public cldiv::CompositeModel {
 public:
  std::string name() const override { return "equicorrelated3"; }
  cldiv::Index obs_dim() const override { return 3; }
  cldiv::Index param_dim() const override { return 2; }
  cldiv::Index block_count() const override { return 3; }
  std::vector<std::string> param_names() const override { return {"mu", "rho"}; }
  std::vector<cldiv::Interval> bounds() const override { return {{}, {-1.0, 1.0}}; }

  double block_log_density(cldiv::Index k, const cldiv::Vector& t, const cldiv::Vector& y) const override {
    static const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    double rho = t[1], w = 1.0 - rho * rho;
    double a = y[pairs[k][0]] - t[0], b = y[pairs[k][1]] - t[0];
    return -std::log(2.0 * M_PI) - 0.5 * std::log(w) - (a * a - 2.0 * rho * a * b + b * b) / (2.0 * w);
  }

  bool can_sample() const override { return true; }
  cldiv::Sample sample(const cldiv::Vector& t, cldiv::Index n, std::uint64_t seed) const override {
    cldiv::check_theta(*this, t);
    if (!(t[1] > -0.5 && t[1] < 1.0)) throw cldiv::Error(cldiv::ErrorCode::CholeskyFailure, "rho must lie in (-1/2, 1)");
    Eigen::Matrix3d s = Eigen::Matrix3d::Constant(t[1]);
    s.diagonal().setOnes();
    Eigen::Matrix3d l = s.llt().matrixL();
    auto rng = cldiv::substream(seed, 0);
    std::normal_distribution<double> z;
    cldiv::Sample out;
    out.y.resize(n, 3);
    for (cldiv::Index i = 0; i < n; ++i) {
      Eigen::Vector3d zz(z(rng), z(rng), z(rng));
      out.y.row(i) = (Eigen::Vector3d::Constant(t[0]) + l * zz).transpose();
    }
    return out;
  }

  cldiv::Vector initial_guess(const cldiv::Sample& s) const override {
    cldiv::Vector t(2);
    t[0] = s.y.mean();
    t[1] = 0.0;
    return t;
  }
};
