#include "test_support.hpp"

using namespace covrate;
using covrate::testing::diag;

TEST(SymEig, IdentityHasUnitSpectrum) {
  const SymEig e = sym_eig_desc(Matrix::Identity(2, 2));
  EXPECT_TRUE(e.values.isApprox(Vector::Ones(2)));
  EXPECT_LT(max_abs(e.reconstruct() - Matrix::Identity(2, 2)), 1e-14);
}

TEST(SymEig, DiagonalInputIsSortedDescending) {
  const SymEig e = sym_eig_desc(diag({1, 2}));
  EXPECT_DOUBLE_EQ(e.values(0), 2.0);
  EXPECT_DOUBLE_EQ(e.values(1), 1.0);
  EXPECT_NEAR(std::abs(e.U(0, 1)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(e.U(1, 0)), 1.0, 1e-14);
}

TEST(SymEig, RandomReconstruction) {
  Rng rng(11, 0);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = random_spd(rng, 4);
    const SymEig e = sym_eig_desc(a);
    EXPECT_LT(max_abs(e.U.transpose() * e.values.asDiagonal() * e.U - a), 1e-10);
  }
}

TEST(PrincipalSqrt, Examples) {
  EXPECT_LT(max_abs(principal_sqrt(SpdMatrix(Matrix::Identity(3, 3))).matrix() - Matrix::Identity(3, 3)), 1e-14);
  EXPECT_LT(max_abs(principal_sqrt(SpdMatrix(diag({4, 9}))).matrix() - diag({2, 3})), 1e-14);
  Rng rng(12, 0);
  const Matrix a = random_spd(rng, 5);
  const Matrix s = principal_sqrt(SpdMatrix(a)).matrix();
  EXPECT_LT(max_abs(s * s - a), 1e-9);
  EXPECT_LT(max_abs(inverse_principal_sqrt(SpdMatrix(a)) * s - Matrix::Identity(5, 5)), 1e-9);
}

TEST(SpdMatrix, RejectsBadInput) {
  Matrix ns(2, 2);
  ns << 1, 0.5, 0.2, 1;
  try {
    SpdMatrix bad(ns);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonSymmetric);
  }
  try {
    SpdMatrix bad(diag({1, -1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotSpd);
  }
  EXPECT_FALSE(SpdMatrix::is_spd(diag({1, 0})));
}

TEST(JointDiagonalize, IdentityPair) {
  const JointDiag jd = joint_diagonalize(SpdMatrix(Matrix::Identity(2, 2)), SpdMatrix(Matrix::Identity(2, 2)));
  EXPECT_NEAR(std::abs(jd.V.determinant()), 1.0, 1e-14);
  EXPECT_TRUE(jd.lambda.isApprox(Vector::Ones(2)));
  EXPECT_TRUE(jd.lambda_prime.isApprox(Vector::Ones(2)));
}

TEST(JointDiagonalize, CrossedDiagonals) {
  const Matrix s1 = diag({2, 1}), s2 = diag({1, 2});
  const JointDiag jd = joint_diagonalize(SpdMatrix(s1), SpdMatrix(s2));
  EXPECT_NEAR(jd.lambda(0), 2.0, 1e-14);
  EXPECT_NEAR(jd.lambda(1), 1.0, 1e-14);
  EXPECT_NEAR(jd.lambda_prime(0), 4.0, 1e-13);
  EXPECT_NEAR(jd.lambda_prime(1), 0.5, 1e-14);
  EXPECT_LT(max_abs(jd.V * s1 * jd.V.transpose() - Matrix(jd.lambda.asDiagonal())), 1e-13);
  EXPECT_LT(max_abs(jd.V * s2 * jd.V.transpose() - Matrix(jd.lambda_prime.asDiagonal())), 1e-13);
  EXPECT_NEAR(jd.V.determinant(), 1.0, 1e-13);
}

TEST(JointDiagonalize, RandomPairProperties) {
  Rng rng(13, 0);
  for (int t = 0; t < 25; ++t) {
    const Matrix s1 = random_spd(rng, 5), s2 = random_spd(rng, 5);
    const JointDiag jd = joint_diagonalize(SpdMatrix(s1), SpdMatrix(s2));
    const Matrix d1 = jd.V * s1 * jd.V.transpose();
    const Matrix d2 = jd.V * s2 * jd.V.transpose();
    EXPECT_LT(max_abs(d1 - Matrix(jd.lambda.asDiagonal())), 1e-9 * jd.lambda.maxCoeff());
    EXPECT_LT(max_abs(d2 - Matrix(jd.lambda_prime.asDiagonal())), 1e-9 * jd.lambda_prime.maxCoeff());
    EXPECT_NEAR(jd.V.determinant(), 1.0, 1e-9);
    for (Index i = 1; i < 5; ++i) EXPECT_GE(jd.lambda(i - 1), jd.lambda(i));
    EXPECT_LT(max_abs(jd.V * jd.V_inv - Matrix::Identity(5, 5)), 1e-9);
  }
}

TEST(MatrixMin, Examples) {
  Rng rng(14, 0);
  const Matrix s = random_spd(rng, 3);
  EXPECT_LT(max_abs(matrix_min(SpdMatrix(s), SpdMatrix(s)).matrix() - s), 1e-10);
  EXPECT_LT(max_abs(matrix_min(SpdMatrix(diag({2, 1})), SpdMatrix(diag({1, 2}))).matrix() - Matrix::Identity(2, 2)),
            1e-13);
  for (int t = 0; t < 10; ++t) {
    const Matrix a = random_spd(rng, 4);
    const Matrix b = a + random_spd(rng, 4, 0.01);
    EXPECT_LT(max_abs(matrix_min(SpdMatrix(a), SpdMatrix(b)).matrix() - a), 1e-9 * a.norm());
    EXPECT_LT(max_abs(matrix_min(SpdMatrix(b), SpdMatrix(a)).matrix() - a), 1e-9 * a.norm());
  }
}

TEST(MatrixMin, DominatedByBothArguments) {
  Rng rng(15, 0);
  for (int t = 0; t < 20; ++t) {
    const Matrix s1 = random_spd(rng, 3), s2 = random_spd(rng, 3);
    const Matrix m = matrix_min(SpdMatrix(s1), SpdMatrix(s2)).matrix();
    EXPECT_TRUE(psd_leq(m, s1));
    EXPECT_TRUE(psd_leq(m, s2));
  }
}

TEST(PsdLeq, Examples) {
  const Matrix i = Matrix::Identity(3, 3);
  EXPECT_TRUE(psd_leq(i, 2 * i));
  EXPECT_FALSE(psd_leq(2 * i, i));
  EXPECT_TRUE(psd_leq(i, i));
  EXPECT_THROW(psd_leq(i, Matrix::Identity(2, 2)), Error);
}

TEST(ConstrainedDetOracle, Examples) {
  const Matrix i = Matrix::Identity(2, 2);
  EXPECT_NEAR(constrained_det_oracle(SpdMatrix(i), SpdMatrix(i), 2000, 1), 1.0, 1e-12);
  EXPECT_NEAR(constrained_det_oracle(SpdMatrix(diag({2, 1})), SpdMatrix(diag({1, 2})), 2000, 1), 1.0, 1e-12);
}

TEST(ConstrainedDetOracle, SearchApproachesButNeverBeatsMin) {
  Rng rng(16, 0);
  const Matrix s1 = random_spd(rng, 2), s2 = random_spd(rng, 2);
  const double target = matrix_min(SpdMatrix(s1), SpdMatrix(s2)).matrix().determinant();
  const DetSearchResult r = constrained_det_search(SpdMatrix(s1), SpdMatrix(s2), 100000, 3);
  EXPECT_LE(r.search_best, target * (1.0 + 1e-9));
  EXPECT_GE(r.search_best, 0.99 * target);
  EXPECT_NEAR(r.candidate, target, 1e-9 * target);
}

TEST(ConstrainedDetOracle, RejectsLargeDimension) {
  const Matrix i = Matrix::Identity(5, 5);
  EXPECT_THROW(constrained_det_oracle(SpdMatrix(i), SpdMatrix(i), 10, 1), Error);
}

TEST(Bisect, FindsRootAndReportsBadBracket) {
  EXPECT_NEAR(bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0), std::sqrt(2.0), 1e-12);
  try {
    bisect([](double x) { return x * x + 1.0; }, 0.0, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BracketFailure);
  }
}
