#include <gtest/gtest.h>

#include <cmath>

#include "isometrize/cesaro.hpp"
#include "isometrize/random.hpp"
#include "oracles.hpp"

using namespace isometrize;

namespace {

ComplexMatrix mat2(Complex a, Complex b, Complex c, Complex d) {
  ComplexMatrix m(2, 2);
  m << a, b, c, d;
  return m;
}

ComplexMatrix diag(std::initializer_list<double> v) {
  RealVector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.cast<Complex>().asDiagonal();
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(OperatorCore, HermitianRejectsSkew) {
  EXPECT_EQ(code_of([] { HermitianMatrix h(mat2(1, 2, 0, 1)); }), ErrorCode::NotHermitian);
  EXPECT_EQ(code_of([] { HermitianMatrix h(ComplexMatrix(2, 3)); }), ErrorCode::NotSquare);
}

TEST(OperatorCore, SqrtSquaresBack) {
  Rng rng(3);
  for (int dim : {1, 2, 5, 8}) {
    ComplexMatrix g = random_gaussian(dim, dim, rng);
    ComplexMatrix psd = g.adjoint() * g;
    ComplexMatrix s = herm_sqrt(HermitianMatrix(psd)).matrix();
    EXPECT_LT(oracle::norm2(s * s - psd), 1e-10 * oracle::norm2(psd));
    EXPECT_GE(oracle::lambda_min(s), -1e-12);
    ComplexMatrix is = herm_inv_sqrt(HermitianMatrix(psd)).matrix();
    EXPECT_LT(oracle::norm2(is * psd * is - identity(dim)), 1e-8);
  }
}

TEST(OperatorCore, SqrtOfDiagonal) {
  ComplexMatrix s = herm_sqrt(HermitianMatrix(diag({4, 9, 0}))).matrix();
  EXPECT_LT(oracle::norm2(s - diag({2, 3, 0})), 1e-14);
  EXPECT_EQ(code_of([] { herm_sqrt(HermitianMatrix(diag({1, -1}))); }), ErrorCode::NotPSD);
  EXPECT_EQ(code_of([] { herm_inv_sqrt(HermitianMatrix(diag({1, 0}))); }), ErrorCode::Singular);
}

TEST(OperatorCore, NormsAndConditioning) {
  EXPECT_DOUBLE_EQ(op_norm(diag({1, -7, 3})), 7.0);
  EXPECT_NEAR(condition_number(diag({2, 20})), 10.0, 1e-12);
  EXPECT_EQ(code_of([] { condition_number(diag({1, 0})); }), ErrorCode::Singular);
  Rng rng(5);
  ComplexMatrix l = random_conditioned(6, 10.0, rng);
  EXPECT_NEAR(condition_number(l), 10.0, 1e-9);
  EXPECT_LT(unitary_residual(random_unitary(6, rng)), 1e-13);
  EXPECT_NEAR(isometry_residual(diag({2, 1})), 3.0, 1e-14);
}

TEST(OperatorCore, MatrixPowerMatchesRepeatedProduct) {
  Rng rng(7);
  ComplexMatrix t = random_conditioned(3, 3.0, rng);
  ComplexMatrix t_inv = t.inverse();
  for (int k : {0, 1, 2, 7, 13}) {
    EXPECT_LT(oracle::norm2(matrix_power(t, t_inv, k) - oracle::power(t, k)), 1e-9 * oracle::norm2(oracle::power(t, k)));
    EXPECT_LT(oracle::norm2(matrix_power(t, t_inv, -k) - oracle::power(t_inv, k)),
              1e-9 * oracle::norm2(oracle::power(t_inv, k)));
  }
}

TEST(Limit, DyadicAverageMatchesDirectSum) {
  Rng rng(11);
  ComplexMatrix t = random_conditioned(3, 2.0, rng);
  t /= op_norm(t);
  ComplexMatrix x = random_gaussian(3, 3, rng);
  x = x.adjoint() * x;
  for (int k : {0, 1, 3, 5}) {
    ComplexMatrix direct = ComplexMatrix::Zero(3, 3);
    for (int n = 0; n < (1 << k); ++n) direct += oracle::power(t, n).adjoint() * x * oracle::power(t, n);
    direct /= static_cast<double>(1 << k);
    EXPECT_LT(oracle::norm2(dyadic_average(dyadic_powers(t, k), x) - direct), 1e-12 * oracle::norm2(x));
  }
}

TEST(Limit, GrowthMonitor) {
  GrowthMonitor linear;
  for (std::int64_t n = 1; n <= 256; ++n) linear.observe(n, static_cast<double>(n));
  EXPECT_TRUE(linear.divergent());
  EXPECT_DOUBLE_EQ(linear.last_ratio(), 2.0);

  GrowthMonitor flat;
  for (std::int64_t n = 1; n <= 256; ++n) flat.observe(n, 3.0 + 1.0 / static_cast<double>(n));
  EXPECT_FALSE(flat.divergent());

  GrowthMonitor zero;
  for (std::int64_t n = 1; n <= 256; ++n) zero.observe(n, 0.0);
  EXPECT_FALSE(zero.divergent());

  GrowthMonitor cap;
  cap.observe(1, 1e13);
  EXPECT_TRUE(cap.divergent());
  EXPECT_TRUE(cap.capped());

  EXPECT_EQ(scaled_policy({}, 16).min_dyadic, 4);
  EXPECT_EQ(scaled_policy({}, 4096).min_dyadic, 16);
  EXPECT_EQ(floor_log2(1), 0);
  EXPECT_EQ(floor_log2(1023), 9);
  EXPECT_EQ(floor_log2(1024), 10);
}

TEST(Cesaro, AverageMatchesDirectSum) {
  Rng rng(13);
  ComplexMatrix t = random_conditioned(4, 4.0, rng) * random_unitary(4, rng);
  t /= op_norm(t);
  for (int n : {1, 2, 9, 30}) {
    ComplexMatrix ours = cesaro_average(t, n).matrix();
    EXPECT_LT(oracle::norm2(ours - oracle::cesaro(t, n)), 1e-12);
  }
}

TEST(Cesaro, SymmetricAverageMatchesDirectSum) {
  Rng rng(17);
  ComplexMatrix l = random_conditioned(3, 5.0, rng);
  ComplexMatrix t = l * random_unitary(3, rng) * l.inverse();
  for (int n : {1, 4, 12}) EXPECT_LT(oracle::norm2(symmetric_average(t, n).matrix() - oracle::symmetric(t, n)), 1e-10);
}

TEST(Cesaro, ClosedFormInvolution) {
  // T^2 = I, so A_N = (I + T*T)/2 for even N.
  ComplexMatrix t = mat2(0, 2, 0.5, 0);
  SimilarityCertificate c = isometrize::isometrize(t);
  EXPECT_LT(oracle::norm2(c.gram - diag({0.625, 2.5})), 1e-12);
  EXPECT_LT(oracle::norm2(c.transform - diag({std::sqrt(0.625), std::sqrt(2.5)})), 1e-12);
  EXPECT_LT(oracle::norm2(c.conjugated - mat2(0, 1, 1, 0)), 1e-12);
  EXPECT_LE(c.residual, 1e-12);
  EXPECT_NEAR(c.condition_number, 2.0, 1e-12);
  EXPECT_NEAR(c.bounds.M_sq, 2.5, 1e-12);
}

TEST(Cesaro, IdentityAndUnitaryAreFixed) {
  SimilarityCertificate c = isometrize::isometrize(identity(3));
  EXPECT_LT(oracle::norm2(c.transform - identity(3)), 1e-14);
  Rng rng(19);
  ComplexMatrix u = random_unitary(4, rng);
  SimilarityCertificate cu = isometrize::isometrize(u);
  EXPECT_LT(oracle::norm2(cu.gram - identity(4)), 1e-10);
}

TEST(Cesaro, JordanBlockDiverges) {
  ComplexMatrix j = mat2(1, 1, 0, 1);
  // T^n = [[1,n],[0,1]] so T*^n T^n = [[1,n],[n,1+n^2]].
  auto a = [](int n) {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    for (int k = 0; k < n; ++k) s += mat2(1, k, k, 1.0 + double(k) * k);
    return ComplexMatrix(s / double(n));
  };
  EXPECT_LT(oracle::norm2(cesaro_average(j, 64).matrix() - a(64)), 1e-9 * oracle::norm2(a(64)));
  EXPECT_GE(oracle::lambda_max(a(64)) / oracle::lambda_max(a(32)), 3.0);
  BoundsEstimate b = estimate_bounds(j, 4096);
  EXPECT_TRUE(b.divergent);
  try {
    isometrize::isometrize(j);
    FAIL();
  } catch (const HypothesisFailed& e) {
    EXPECT_TRUE(e.contains(Hypothesis::DivergentUpperBound));
  }
}

TEST(Cesaro, ContractionCollapses) {
  try {
    isometrize::isometrize(diag({0.5}));
    FAIL();
  } catch (const HypothesisFailed& e) {
    EXPECT_TRUE(e.contains(Hypothesis::LowerBoundCollapse));
    EXPECT_TRUE(e.contains(Hypothesis::EigenvalueModulus));
  }
  EigenCheck eig = eigen_unimodular_check(diag({0.5}));
  ASSERT_EQ(eig.offenders.size(), 1u);
  EXPECT_NEAR(std::abs(eig.offenders[0]), 0.5, 1e-15);
}

TEST(Cesaro, BoundsOfConjugatedUnitary) {
  Rng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    ComplexMatrix l = random_conditioned(4, 6.0, rng);
    ComplexMatrix t = l * random_unitary(4, rng) * l.inverse();
    BoundsEstimate b = estimate_bounds(t, 512);
    EXPECT_FALSE(b.divergent);
    EXPECT_FALSE(b.lower_collapse);
    // A_64 by direct summation must sit inside the scanned range.
    ComplexMatrix a = oracle::cesaro(t, 64);
    EXPECT_LE(oracle::lambda_max(a), b.M_sq * (1 + 1e-9));
    EXPECT_GE(oracle::lambda_min(a), b.m_sq * (1 - 1e-9));
    SimilarityCertificate c = isometrize::isometrize(t);
    EXPECT_LE(c.residual, 1e-8);
    EXPECT_LE(c.condition_number, std::sqrt(c.bounds.M_sq / c.bounds.m_sq) * (1 + 1e-6));
    EXPECT_LE(oracle::norm2(t.adjoint() * c.gram * t - c.gram), 1e-8 * oracle::norm2(c.gram));
  }
}

TEST(Cesaro, InvalidHorizon) {
  CesaroOptions o;
  o.n_max = 4;
  EXPECT_EQ(code_of([&] { isometrize::isometrize(identity(2), o); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { isometrize::isometrize(ComplexMatrix(2, 3)); }), ErrorCode::NotSquare);
  EXPECT_EQ(code_of([] { limit_gram(mat2(1, 1, 0, 1), 1e-8, 4096); }), ErrorCode::Diverged);
}

TEST(Cesaro, KCondition) {
  Rng rng(29);
  ComplexMatrix u = random_unitary(3, rng);
  EXPECT_TRUE(k_condition_check(u, identity(3), 1.0, 64).holds);
  KConditionResult r = k_condition_check(u, identity(3), 2.0, 64);
  EXPECT_FALSE(r.holds);
  EXPECT_EQ(r.first_violation, 1);
  EXPECT_NEAR(r.worst, -1.0, 1e-12);
  // diag(1, 0.5): A_N = diag(1, (1 - 4^-N) / (0.75 N)), so K = e1 e1* works with m = 1.
  ComplexMatrix k = diag({1, 0});
  EXPECT_TRUE(k_condition_check(diag({1, 0.5}), k, 1.0, 128).holds);
  EXPECT_FALSE(k_condition_check(diag({1, 0.5}), identity(2), 0.5, 128).holds);
  EXPECT_EQ(code_of([] { k_condition_check(identity(2), identity(3), 1.0, 8); }), ErrorCode::DimensionMismatch);
}

TEST(Expansive, UnitarySucceedsAndDoublingDiverges) {
  Rng rng(31);
  ComplexMatrix u = random_unitary(3, rng);
  ExpansiveCertificate c = expansive_isometrize(u, 64);
  EXPECT_TRUE(c.monotone);
  EXPECT_LE(c.invariance_residual, 1e-9);
  EXPECT_LE(unitary_residual(u), 1e-6);
  EXPECT_EQ(code_of([] { expansive_isometrize(2.0 * identity(2), 4096); }), ErrorCode::Diverged);
  EXPECT_EQ(code_of([] { expansive_isometrize(diag({1, 0.5}), 64); }), ErrorCode::NotExpansive);
}

TEST(Expansive, AveragesIncrease) {
  // For T*T >= I the summands T*^j T^j increase, hence so does A_n.
  ComplexMatrix t = mat2(1.2, 0.3, 0, 1.1);
  for (int n = 1; n < 20; ++n) {
    ComplexMatrix step = oracle::cesaro(t, n + 2) - oracle::cesaro(t, n + 1);
    EXPECT_GE(oracle::lambda_min(step), -1e-12 * oracle::lambda_max(oracle::cesaro(t, n + 2)));
  }
  EXPECT_EQ(code_of([&] { expansive_isometrize(t, 4096); }), ErrorCode::Diverged);
}

TEST(SzNagy, ConjugatedUnitaryIsCertifiedUnitary) {
  Rng rng(37);
  for (int dim : {2, 3, 5}) {
    ComplexMatrix l = random_conditioned(dim, 8.0, rng);
    ComplexMatrix t = l * random_unitary(dim, rng) * l.inverse();
    SimilarityCertificate c = sznagy_unitarize(t, 1024);
    EXPECT_EQ(c.kind, SimilarityKind::Unitary);
    EXPECT_LE(c.residual, 1e-8);
    EXPECT_LE(unitary_residual(c.transform * t * c.transform.inverse()), 1e-8);
  }
}

TEST(SzNagy, RejectsEachDirection) {
  try {
    sznagy_unitarize(diag({2, 1}), 1024);
    FAIL();
  } catch (const PowerUnbounded& e) {
    EXPECT_EQ(e.direction(), PowerDirection::Forward);
  }
  try {
    sznagy_unitarize(diag({0.5, 1}), 1024);
    FAIL();
  } catch (const PowerUnbounded& e) {
    EXPECT_EQ(e.direction(), PowerDirection::Backward);
  }
  EXPECT_EQ(code_of([] { sznagy_unitarize(diag({1, 0}), 64); }), ErrorCode::Singular);
}

TEST(Decay, PowerNormOverN) {
  Rng rng(41);
  // ||U^N||^2 / N = 1/N, worst on the tail [32, 64] at N = 32.
  EXPECT_NEAR(decay_check(random_unitary(3, rng), 64), 1.0 / 32.0, 1e-12);
  // Jordan block: ||T^N||^2 grows like N^2, so the statistic grows like N.
  EXPECT_GT(decay_check(mat2(1, 1, 0, 1), 256), 100.0);
  EXPECT_EQ(decay_check(ComplexMatrix::Zero(2, 2), 8), 0.0);
}
