#include "equicorrelated_model.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <sstream>

using namespace cldiv;

namespace {

Vector n4(double rho, double m1 = 0, double m2 = 0, double m3 = 0, double m4 = 0) {
  Vector t(5);
  t << m1, m2, m3, m4, rho;
  return t;
}

}  // namespace

TEST(CompositeLoglik, SumOfBivariateLogDensities) {
  Normal4Model m;
  Sample s = m.sample(n4(0.1, 1, 2, 3, 4), 50, 3);
  Vector t = n4(0.05, 0.9, 2.1, 3.2, 3.9);
  double expect = 0.0;
  for (Index i = 0; i < s.size(); ++i)
    expect += std::log(oracle::bvn_pdf(s.y(i, 0), s.y(i, 1), t[0], t[1], t[4])) +
              std::log(oracle::bvn_pdf(s.y(i, 2), s.y(i, 3), t[2], t[3], t[4]));
  EXPECT_NEAR(composite_loglik(m, t, s), expect, 1e-9);
}

TEST(CompositeScore, AnalyticMatchesFiniteDifferences) {
  Normal4Model m;
  Sample s = m.sample(n4(0.2), 200, 5);
  for (double rho : {-0.15, 0.0, 0.25, 0.6}) {
    Vector t = n4(rho, 0.1, -0.1, 0.05, 0.0);
    Vector fd = detail::central_gradient([&](const Vector& x) { return m.total_loglik(x, s); }, t);
    Vector an = composite_score(m, t, s);
    EXPECT_LE((fd - an).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, an.cwiseAbs().maxCoeff())) << rho;
    // per-observation score summed equals the fast path
    Vector sum = Vector::Zero(5);
    for (Index i = 0; i < s.size(); ++i) sum += m.score(t, s.y.row(i).transpose());
    EXPECT_LE((sum - an).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(CompositeHessian, AnalyticMatchesFiniteDifferences) {
  Normal4Model m;
  Sample s = m.sample(n4(-0.1, 1, 0, 0, 1), 150, 8);
  Vector t = n4(0.1, 0.9, 0.1, -0.2, 1.1);
  Matrix an = m.total_hessian(t, s);
  Matrix fd = detail::central_jacobian([&](const Vector& x) { return m.total_score(x, s); }, t);
  EXPECT_LE((an - fd).cwiseAbs().maxCoeff(), 1e-4 * an.cwiseAbs().maxCoeff());
}

TEST(EmpiricalMatrices, SensitivityAndVariabilityAtLargeN) {
  Normal4Model m;
  for (double rho : {-0.1, 0.2}) {
    Vector t = n4(rho);
    Sample s = m.sample(t, 100000, 17);
    auto h = empirical_sensitivity(m, t, s);
    auto j = empirical_variability(m, t, s);
    EXPECT_FALSE(h.singular);
    EXPECT_FALSE(j.singular);
    EXPECT_LE((h.value - normal4::h_matrix(rho)).cwiseAbs().maxCoeff(), 0.02) << rho;
    EXPECT_LE((j.value - normal4::j_matrix(rho)).cwiseAbs().maxCoeff(), 0.03) << rho;
  }
}

TEST(EmpiricalMatrices, CenteredDiffersByMeanScoreOuterProduct) {
  Normal4Model m;
  Vector t = n4(0.1);
  Sample s = m.sample(n4(0.1, 0.3, 0, 0, 0), 500, 2);
  auto un = empirical_variability(m, t, s, false).value;
  auto ce = empirical_variability(m, t, s, true).value;
  Vector ubar = m.total_score(t, s) / 500.0;
  EXPECT_LE((un - ce - ubar * ubar.transpose()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(EmpiricalMatrices, DegenerateSampleFlagsSingular) {
  Normal4Model m;
  Sample s;
  s.y = Matrix::Zero(10, 4);
  auto j = empirical_variability(m, n4(0.0), s);
  EXPECT_TRUE(j.singular);
}

TEST(GenericModel, FiniteDifferenceScoreAndEmpiricalInformation) {
  EquicorrelatedModel m;
  Vector t(2);
  t << 0.5, 0.3;
  Sample s = m.sample(t, 20000, 4);
  Vector u = composite_score(m, t, s);
  // the score has mean zero at the truth
  EXPECT_LE(std::abs(u[0]) / s.size(), 0.05);
  EXPECT_LE(std::abs(u[1]) / s.size(), 0.05);
  auto h = empirical_sensitivity(m, t, s).value;
  auto j = empirical_variability(m, t, s).value;
  // overlapping pairs: J exceeds H for the mean
  EXPECT_GT(j(0, 0), h(0, 0));
  EXPECT_TRUE(is_symmetric(h, 1e-8));
}

TEST(ModelChecks, DimensionAndAdmissibility) {
  Normal4Model m;
  Sample s;
  s.y = Matrix::Zero(3, 3);
  EXPECT_THROW(composite_loglik(m, n4(0.0), s), Error);
  s.y = Matrix::Zero(3, 4);
  try {
    composite_loglik(m, n4(1.2), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InadmissibleParameter);
  }
  EXPECT_THROW(composite_loglik(m, Vector::Zero(4), s), Error);
}

TEST(Constraints, FixCoordinatesAndValidation) {
  auto c = fix_coordinates(5, {4}, {0.2});
  EXPECT_EQ(c.r, 1);
  Vector t = n4(0.5);
  EXPECT_DOUBLE_EQ(c.value(t)[0], 0.3);
  Matrix g = c.jac(t);
  EXPECT_EQ(g.rows(), 5);
  EXPECT_EQ(g(4, 0), 1.0);
  EXPECT_THROW(validate_constraint(fix_coordinates(2, {0, 1}, {0, 0}), 2), Error);
  EXPECT_THROW(fix_coordinates(5, {7}, {0.0}), Error);
  // numeric Jacobian when none is given
  ConstraintSpec nl;
  nl.r = 1;
  nl.g = [](const Vector& x) { Vector v(1); v[0] = x[0] * x[0] - x[1]; return v; };
  Vector x(3);
  x << 2, 1, 0;
  Matrix gj = nl.jac(x);
  EXPECT_NEAR(gj(0, 0), 4.0, 1e-8);
  EXPECT_NEAR(gj(1, 0), -1.0, 1e-8);
}

TEST(SampleIO, RoundTripAndHeader) {
  Normal4Model m;
  Sample s = m.sample(n4(0.1), 25, 9);
  std::stringstream buf;
  write_sample(buf, s);
  Sample back = read_sample(buf, 4);
  EXPECT_EQ(back.y, s.y);

  std::stringstream hdr("y1,y2,y3,y4\n1,2,3,4\n\n5,6,7,8\n");
  Sample h = read_sample(hdr, 4, true);
  EXPECT_EQ(h.size(), 2);
  EXPECT_EQ(h.y(1, 3), 8.0);
}

TEST(SampleIO, Malformed) {
  std::stringstream ragged("1,2,3,4\n1,2,3\n");
  EXPECT_THROW(read_sample(ragged, 4), Error);
  std::stringstream text("1,2,x,4\n");
  EXPECT_THROW(read_sample(text, 4), Error);
  std::stringstream wide("1,2,3,4,5\n");
  EXPECT_THROW(read_sample(wide, 4), Error);
  std::stringstream hdr("y1,y2,y3,y4\n1,2,3,4\n");
  EXPECT_THROW(read_sample(hdr, 4, false), Error);
  try {
    read_sample(std::string("/nonexistent/dir/d.csv"), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/d.csv"), std::string::npos);
  }
}

TEST(Registry, Lookup) {
  auto m = make_model("normal4");
  EXPECT_EQ(m->param_dim(), 5);
  EXPECT_THROW(make_model("nope"), Error);
  register_model("equicorrelated3", [](const ModelOptions&) { return std::make_unique<EquicorrelatedModel>(); });
  EXPECT_EQ(make_model("equicorrelated3")->param_dim(), 2);
}
