#include "fairmix/linalg.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

using namespace fairmix;

namespace {

// Singular values as square roots of the eigenvalues of Z^T Z, descending.
Vector gram_singular_values(const Matrix& z) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(z.transpose() * z);
  Vector ev = eig.eigenvalues().reverse();
  return ev.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

TEST(RankKSvd, IdentityTwoByTwo) {
  const auto svd = rank_k_svd(Matrix::Identity(2, 2), 2);
  EXPECT_NEAR(svd.singular(0), 1.0, 1e-14);
  EXPECT_NEAR(svd.singular(1), 1.0, 1e-14);
  EXPECT_LT((svd.reconstruct() - Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(RankKSvd, RankOneOuterProductExact) {
  Vector a(2), b(2);
  a << 1, 2;
  b << 3, 4;
  const Matrix z = a * b.transpose();
  const auto svd = rank_k_svd(z, 1);
  EXPECT_LT((z - svd.reconstruct()).norm(), 1e-12);
  EXPECT_NEAR(svd.singular(0), a.norm() * b.norm(), 1e-12);
}

TEST(RankKSvd, MatchesGramEigenvalues) {
  Rng rng(1);
  const Matrix z = test::random_matrix(rng, 6, 4);
  const auto svd = rank_k_svd(z, 2);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(z.transpose() * z);
  EXPECT_NEAR(svd.singular(0) * svd.singular(0), eig.eigenvalues()(3), 1e-8);
  EXPECT_NEAR(svd.singular(1) * svd.singular(1), eig.eigenvalues()(2), 1e-8);
}

TEST(RankKSvd, FactorsAreOrthonormalAndSorted) {
  Rng rng(2);
  for (const auto& [n, p] : std::vector<std::pair<Index, Index>>{{40, 5}, {5, 40}, {9, 9}, {7, 3}}) {
    const Matrix z = test::random_matrix(rng, n, p);
    const Index k = std::min(n, p);
    const auto svd = rank_k_svd(z, k);
    EXPECT_LT((svd.left.transpose() * svd.left - Matrix::Identity(k, k)).norm(), 1e-12);
    EXPECT_LT((svd.right.transpose() * svd.right - Matrix::Identity(k, k)).norm(), 1e-12);
    for (Index j = 1; j < k; ++j) EXPECT_GE(svd.singular(j - 1), svd.singular(j));
    EXPECT_LT((svd.reconstruct() - z).norm(), 1e-11 * (1.0 + z.norm()));
  }
}

TEST(RankKSvd, TallPathUsesQrAndAgrees) {
  Rng rng(3);
  const Matrix z = test::random_matrix(rng, 300, 6);
  SvdOptions no_qr;
  no_qr.qr_ratio = 1e9;
  const auto a = rank_k_svd(z, 4);
  const auto b = rank_k_svd(z, 4, no_qr);
  EXPECT_LT((a.singular - b.singular).norm(), 1e-11);
  EXPECT_LT((a.reconstruct() - b.reconstruct()).norm(), 1e-10);
  EXPECT_LT((a.right - b.right).norm(), 1e-9);
}

TEST(RankKSvd, SignConventionLargestRightEntryPositive) {
  Rng rng(4);
  const auto svd = rank_k_svd(test::random_matrix(rng, 8, 5), 3);
  for (Index j = 0; j < 3; ++j) {
    Index arg = 0;
    svd.right.col(j).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(svd.right(arg, j), 0.0);
  }
}

TEST(RankKSvd, RankDeficientInput) {
  Rng rng(5);
  const Matrix base = test::random_matrix(rng, 10, 2);
  Matrix z(10, 4);
  z << base, base.col(0) + base.col(1), 2.0 * base.col(0);
  const auto svd = rank_k_svd(z, 4);
  EXPECT_NEAR(svd.singular(2), 0.0, 1e-10);
  EXPECT_NEAR(svd.singular(3), 0.0, 1e-10);
  EXPECT_LT((svd.left.transpose() * svd.left - Matrix::Identity(4, 4)).norm(), 1e-10);
  EXPECT_LT((svd.reconstruct() - z).norm(), 1e-10);
}

TEST(RankKSvd, ZeroMatrix) {
  const auto svd = rank_k_svd(Matrix::Zero(5, 3), 2);
  EXPECT_EQ(svd.singular.norm(), 0.0);
  EXPECT_LT((svd.left.transpose() * svd.left - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(RankKSvd, RejectsBadK) {
  const Matrix z = Matrix::Ones(4, 3);
  EXPECT_THROW(rank_k_svd(z, 0), std::invalid_argument);
  EXPECT_THROW(rank_k_svd(z, 4), std::invalid_argument);
}

TEST(RankKSvd, RejectsNonFinite) {
  Matrix z = Matrix::Ones(3, 3);
  z(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(rank_k_svd(z, 1), std::invalid_argument);
}

TEST(RankKSvd, FloatScalar) {
  Rng rng(6);
  const Eigen::MatrixXf z = test::random_matrix(rng, 12, 4).cast<float>();
  const auto svd = rank_k_svd(z, 4);
  EXPECT_LT((svd.reconstruct() - z).norm(), 1e-4f);
}

TEST(RankKSvdProperty, SingularValuesMatchEigenOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(8));
    const Index p = 1 + static_cast<Index>(rng.below(8));
    const Matrix z = test::random_matrix(rng, n, p, -3.0, 3.0);
    const Index m = std::min(n, p);
    const auto svd = rank_k_svd(z, m);
    const Vector oracle = gram_singular_values(z).head(m);
    for (Index j = 0; j < m; ++j) EXPECT_NEAR(svd.singular(j), oracle(j), 1e-8) << n << "x" << p;
  }
}

TEST(RankKSvdProperty, EckartYoungBeatsRandomChallengers) {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + static_cast<Index>(rng.below(7));
    const Index p = 2 + static_cast<Index>(rng.below(7));
    const Matrix z = test::random_matrix(rng, n, p);
    const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min(n, p))));
    const double best = (z - rank_k_svd(z, k).reconstruct()).norm();
    for (int c = 0; c < 1000; ++c) {
      const Matrix challenger = test::random_matrix(rng, n, k) * test::random_matrix(rng, k, p);
      ASSERT_LE(best, (z - challenger).norm() + 1e-12);
    }
    // small perturbations of the optimum never help either
    const Matrix nudged = rank_k_svd(z, k).reconstruct() + 1e-3 * test::random_matrix(rng, n, k) *
                                                               test::random_matrix(rng, k, p);
    EXPECT_LE(best, (z - rank_k_svd(nudged, k).reconstruct()).norm() + 1e-12);
  }
}

TEST(ExplainedVariance, HandValues) {
  Vector d(2);
  d << 2, 1;
  const Vector ev = explained_variance(d);
  EXPECT_DOUBLE_EQ(ev(0), 0.8);
  EXPECT_DOUBLE_EQ(ev(1), 1.0);
  d << 2, 0;
  const Vector single = explained_variance(d);
  EXPECT_DOUBLE_EQ(single(0), 1.0);
  EXPECT_DOUBLE_EQ(single(1), 1.0);
}

TEST(ExplainedVariance, RejectsIncreasing) {
  Vector d(2);
  d << 3, 4;
  EXPECT_THROW(explained_variance(d), std::invalid_argument);
}

TEST(ExplainedVariance, RejectsAllZeroAndEmpty) {
  EXPECT_THROW(explained_variance(Vector::Zero(3)), std::invalid_argument);
  EXPECT_THROW(explained_variance(Vector(0)), std::invalid_argument);
}

TEST(Projector, MeanProjector) {
  const Index n = 5;
  const Matrix p = projector(Matrix::Ones(n, 1));
  EXPECT_LT((p - Matrix::Constant(n, n, 1.0 / n)).norm(), 1e-14);
}

TEST(Projector, CoordinateProjector) {
  const Matrix s = Matrix::Identity(4, 4).leftCols(2);
  Vector d(4);
  d << 1, 1, 0, 0;
  EXPECT_LT((projector(s) - Matrix(d.asDiagonal())).norm(), 1e-14);
}

TEST(Projector, TraceEqualsRank) {
  Rng rng(9);
  EXPECT_NEAR(projector(test::random_matrix(rng, 5, 2)).trace(), 2.0, 1e-10);
}

TEST(Projector, RankDeficientRejected) {
  Matrix s(4, 2);
  s << 1, 1, 0, 0, 1, 1, 0, 0;
  EXPECT_THROW(projector(s), NumericalError);
  EXPECT_THROW(projector(Matrix::Ones(1, 2)), NumericalError);
}

TEST(ProjectorProperty, Laws) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + static_cast<Index>(rng.below(10));
    const Index c = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(std::min<Index>(n - 1, 4))));
    const Matrix s = trial % 2 ? test::random_matrix(rng, n, c) : test::random_binary(rng, n, c);
    Eigen::FullPivLU<Matrix> lu(s);
    if (lu.rank() < c) continue;
    const Matrix p = projector(s);
    const Matrix i = Matrix::Identity(n, n);
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(((i - p) * s).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(p.trace(), static_cast<double>(c), 1e-10);
  }
}

TEST(ColumnSpace, ResidualizeMatchesDenseAcrossBlocks) {
  Rng rng(11);
  const Matrix s = test::random_binary(rng, 30, 2) + Matrix::Identity(30, 2);
  const ColumnSpace<double> space(s);
  const Matrix x = test::random_matrix(rng, 30, 10);
  const Matrix dense = (Matrix::Identity(30, 30) - space.dense()) * x;
  EXPECT_LT((space.residualize(x, 3) - dense).norm(), 1e-12);
  EXPECT_LT((space.residualize(x) - dense).norm(), 1e-12);
  EXPECT_LT((space.project(x) + space.residualize(x) - x).norm(), 1e-12);
  EXPECT_GT(space.gram_rcond(), kGramRcondThreshold);
}

TEST(ColumnSpace, RowMismatchRejected) {
  const ColumnSpace<double> space(Matrix::Ones(4, 1));
  EXPECT_THROW(space.residualize(Matrix::Ones(3, 2)), std::invalid_argument);
}
