#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cldiv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ErrorCode {
  InvalidParameter,
  NonPositiveArgument,
  UndefinedLimit,
  DimensionMismatch,
  InadmissibleParameter,
  InvalidData,
  NotPositiveDefinite,
  SingularMatrix,
  RankDeficient,
  CholeskyFailure,
  NoConvergence,
  BoundaryHit,
  SingularKKT,
  InvalidConstraint,
  NegativeGap,
  NoAdmissibleRoot,
  DivergentIntegral,
  DegenerateAlternative,
  DegenerateRate,
  DegenerateBaseline,
  NotImplemented,
  Usage,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NonPositiveArgument: return "NonPositiveArgument";
    case ErrorCode::UndefinedLimit: return "UndefinedLimit";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InadmissibleParameter: return "InadmissibleParameter";
    case ErrorCode::InvalidData: return "InvalidData";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BoundaryHit: return "BoundaryHit";
    case ErrorCode::SingularKKT: return "SingularKKT";
    case ErrorCode::InvalidConstraint: return "InvalidConstraint";
    case ErrorCode::NegativeGap: return "NegativeGap";
    case ErrorCode::NoAdmissibleRoot: return "NoAdmissibleRoot";
    case ErrorCode::DivergentIntegral: return "DivergentIntegral";
    case ErrorCode::DegenerateAlternative: return "DegenerateAlternative";
    case ErrorCode::DegenerateRate: return "DegenerateRate";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
    case ErrorCode::NotImplemented: return "NotImplemented";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Observations, one row per sampling unit.
struct Sample {
  Matrix y;
  Index size() const { return y.rows(); }
  Index dim() const { return y.cols(); }
};

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double x) const { return x > lo && x < hi; }
};

inline bool is_symmetric(const Matrix& a, double tol = 1e-9) {
  if (a.rows() != a.cols()) return false;
  double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

inline void require_square(const Matrix& a, const char* name) {
  if (a.rows() != a.cols())
    throw Error(ErrorCode::DimensionMismatch, std::string(name) + " must be square");
}

}  // namespace cldiv
