#include <gtest/gtest.h>

#include <cmath>

#include "rou/error.hpp"
#include "rou/linalg.hpp"
#include "test_support.hpp"

using namespace rou;
using rou::testing::Draws;

namespace {

double max_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

}  // namespace

TEST(Matrix, RejectsRaggedAndNonFinite) {
  EXPECT_THROW(Matrix::from_rows({{1.0, 2.0}, {3.0}}), Error);
  EXPECT_THROW(Matrix::from_rows({{1.0, NAN}, {0.0, 1.0}}), Error);
  EXPECT_THROW(Matrix::from_rows({{1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}}), Error);
}

TEST(SymPart, Examples) {
  const Matrix s = Matrix::from_rows({{2.0, 1.0}, {1.0, 3.0}});
  EXPECT_EQ(sym_part(s), s);
  EXPECT_EQ(sym_part(Matrix::from_rows({{0.0, 3.0}, {-3.0, 0.0}})), Matrix(2));
  EXPECT_EQ(sym_part(Matrix::from_rows({{1.0, 2.0}, {0.0, 1.0}})), Matrix::from_rows({{1.0, 1.0}, {1.0, 1.0}}));
}

TEST(SymPart, ExactlySymmetric) {
  Draws d(1);
  for (int k = 0; k < 20; ++k) {
    const Matrix s = sym_part(d.gaussian(5));
    EXPECT_EQ(s, s.transpose());
  }
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm(Matrix::identity(3)), 1.0, 1e-15);
  EXPECT_NEAR(spectral_norm(Matrix::diagonal({3.0, -5.0})), 5.0, 1e-14);
  EXPECT_NEAR(spectral_norm(Matrix::from_rows({{0.0, 2.0}, {0.0, 0.0}})), 2.0, 1e-14);
}

TEST(SpectralNorm, MatchesSvdOracle) {
  Draws d(2);
  for (int k = 0; k < 100; ++k) {
    const std::size_t r = d.index(1, 12);
    const Matrix a = d.gaussian(r, d.uniform(0.01, 100.0));
    const double oracle = rou::testing::eigen_spectral_norm(a);
    EXPECT_NEAR(spectral_norm(a), oracle, 1e-10 * oracle) << "r=" << r;
  }
}

TEST(SpectralNorm, TinyAndHugeEntries) {
  const Matrix tiny = Matrix::from_rows({{1e-200, 2e-200}, {0.0, 1e-200}});
  EXPECT_NEAR(spectral_norm(tiny) / rou::testing::eigen_spectral_norm(Matrix::from_rows({{1, 2}, {0, 1}})), 1e-200,
              1e-210);
  const Matrix huge = Matrix::from_rows({{1e200, 0.0}, {0.0, -3e200}});
  EXPECT_NEAR(spectral_norm(huge), 3e200, 1e190);
}

TEST(LogNorm, Examples) {
  EXPECT_NEAR(log_norm(Matrix::identity(2) * -1.0), -1.0, 1e-15);
  EXPECT_NEAR(log_norm(Matrix::from_rows({{0.0, 3.0}, {-3.0, 0.0}})), 0.0, 1e-15);
  EXPECT_NEAR(log_norm(Matrix::from_rows({{1.0, 2.0}, {0.0, 1.0}})), 2.0, 1e-14);
}

TEST(LogNorm, MatchesEigensolverOracle) {
  Draws d(3);
  for (int k = 0; k < 100; ++k) {
    const std::size_t r = d.index(1, 12);
    const Matrix a = d.gaussian(r, 3.0);
    const double oracle = rou::testing::eigen_log_norm(a);
    EXPECT_NEAR(log_norm(a), oracle, 1e-10 * (1.0 + std::abs(oracle)));
  }
}

TEST(LogNorm, Properties) {
  Draws d(4);
  for (int k = 0; k < 100; ++k) {
    const std::size_t r = d.index(1, 8);
    const Matrix a = d.gaussian(r);
    const double mu = log_norm(a);
    EXPECT_LE(mu, spectral_norm(a) * (1.0 + 1e-12));
    const double c = d.uniform(-5.0, 5.0);
    Matrix shifted = a;
    for (std::size_t i = 0; i < r; ++i) shifted(i, i) += c;
    EXPECT_NEAR(log_norm(shifted), mu + c, 1e-10 * (1.0 + std::abs(mu + c)));
    const Matrix s = sym_part(a);
    Vector x(r);
    for (double& v : x) v = d.normal();
    const double nx = norm2(x);
    for (double& v : x) v /= nx;
    EXPECT_LE(dot(x, s * x), mu + 1e-9);
  }
}

TEST(SymEigen, ReconstructsMatrix) {
  Draws d(5);
  for (int k = 0; k < 30; ++k) {
    const std::size_t r = d.index(1, 10);
    const Matrix s = sym_part(d.gaussian(r));
    const SymEigen e = sym_eigen(s);
    Matrix rec(r);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j)
        for (std::size_t q = 0; q < r; ++q) rec(i, j) += e.vectors(i, q) * e.values[q] * e.vectors(j, q);
    EXPECT_LT(max_diff(rec, s), 1e-12 * (1.0 + s.max_abs()));
    for (std::size_t q = 1; q < r; ++q) EXPECT_GE(e.values[q - 1], e.values[q]);
  }
}

TEST(PrincipalSqrt, Examples) {
  EXPECT_LT(max_diff(principal_sqrt(Matrix::identity(3)).matrix(), Matrix::identity(3)), 1e-15);
  EXPECT_LT(max_diff(principal_sqrt(Matrix::diagonal({4.0, 9.0})).matrix(), Matrix::diagonal({2.0, 3.0})), 1e-14);
  // [[2,1],[1,2]] has eigenvectors (1,1)/sqrt2, (1,-1)/sqrt2 with eigenvalues 3, 1.
  const Matrix s = principal_sqrt(Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}})).matrix();
  const double p = 0.5 * (std::sqrt(3.0) + 1.0);
  const double q = 0.5 * (std::sqrt(3.0) - 1.0);
  EXPECT_LT(max_diff(s, Matrix::from_rows({{p, q}, {q, p}})), 1e-14);
}

TEST(PrincipalSqrt, SquaresBackAndIsSymmetric) {
  Draws d(6);
  for (int k = 0; k < 50; ++k) {
    const std::size_t r = d.index(1, 10);
    const Matrix g = d.gaussian(r);
    const Matrix b = g * g.transpose();
    const Matrix s = principal_sqrt(b).matrix();
    EXPECT_EQ(s, s.transpose());
    EXPECT_LE(spectral_norm(s * s - b), 1e-10 * (1.0 + spectral_norm(b)));
  }
}

TEST(PrincipalSqrt, RejectsIndefinite) {
  try {
    principal_sqrt(Matrix::diagonal({1.0, -0.5}));
    FAIL() << "expected NotPsd";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPsd);
  }
  EXPECT_THROW(PsdMatrix(Matrix::from_rows({{1.0, 0.5}, {0.0, 1.0}})), Error);
}

TEST(MatrixExp, Examples) {
  Draws d(7);
  EXPECT_EQ(matrix_exp(d.gaussian(3), 0.0), Matrix::identity(3));
  const Matrix e = matrix_exp(Matrix::diagonal({-1.0, -2.0}), 1.0);
  EXPECT_NEAR(e(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(e(1, 1), std::exp(-2.0), 1e-15);
  EXPECT_EQ(e(0, 1), 0.0);
  EXPECT_LT(max_diff(matrix_exp(Matrix::from_rows({{0.0, 1.0}, {0.0, 0.0}}), 1.0),
                     Matrix::from_rows({{1.0, 1.0}, {0.0, 1.0}})),
            1e-15);
}

TEST(MatrixExp, MatchesEigenOracle) {
  Draws d(8);
  for (int k = 0; k < 50; ++k) {
    const std::size_t r = d.index(1, 8);
    const Matrix a = d.gaussian(r, d.uniform(0.1, 2.0));
    const double t = d.uniform(0.0, 3.0);
    // Oracle: eigen-decomposition route on a (complex) diagonalizable matrix.
    Eigen::EigenSolver<Eigen::MatrixXd> es(rou::testing::to_eigen(a) * t);
    const Eigen::MatrixXcd v = es.eigenvectors();
    const Eigen::VectorXcd l = es.eigenvalues().array().exp();
    const Eigen::MatrixXd oracle = (v * l.asDiagonal() * v.inverse()).real();
    const Matrix got = matrix_exp(a, t);
    EXPECT_LT(max_diff(got, rou::testing::from_eigen(oracle)), 1e-9 * (1.0 + oracle.cwiseAbs().maxCoeff()));
  }
}

TEST(MatrixExp, Semigroup) {
  Draws d(9);
  for (int k = 0; k < 50; ++k) {
    const std::size_t r = d.index(1, 6);
    Matrix a = d.gaussian(r);
    a *= d.uniform(0.1, 5.0) / spectral_norm(a);
    const double s = d.uniform(0.0, 2.0);
    const double t = d.uniform(0.0, 2.0);
    const Matrix lhs = matrix_exp(a, s) * matrix_exp(a, t);
    const Matrix rhs = matrix_exp(a, s + t);
    EXPECT_LT(spectral_norm(lhs - rhs), 1e-8 * std::max(1.0, spectral_norm(rhs)));
  }
}

TEST(Inverse, RoundTrip) {
  Draws d(10);
  for (int k = 0; k < 30; ++k) {
    const std::size_t r = d.index(1, 8);
    const Matrix a = d.gaussian(r) + Matrix::identity(r) * 4.0;
    EXPECT_LT(max_diff(inverse(a) * a, Matrix::identity(r)), 1e-12);
  }
  EXPECT_THROW(inverse(Matrix(2)), Error);
}

TEST(Lyapunov, Examples) {
  const PsdMatrix p = solve_lyapunov(Matrix::identity(2) * -1.0, PsdMatrix(Matrix::identity(2) * 2.0));
  EXPECT_LT(max_diff(p.matrix(), Matrix::identity(2)), 1e-13);
  const PsdMatrix s = solve_lyapunov(Matrix::from_rows({{-1.0}}), PsdMatrix(Matrix::from_rows({{2.0}})));
  EXPECT_NEAR(s.matrix()(0, 0), 1.0, 1e-14);
}

TEST(Lyapunov, ResidualOnRandomStableMatrices) {
  Draws d(11);
  for (int k = 0; k < 50; ++k) {
    const std::size_t r = d.index(1, 8);
    const Matrix a = d.stable(r, d.uniform(0.05, 2.0));
    const Matrix g = d.gaussian(r);
    const PsdMatrix b(g * g.transpose());
    const Matrix p = solve_lyapunov(a, b).matrix();
    const Matrix residual = a * p + p * a.transpose() + b.matrix();
    EXPECT_LE(spectral_norm(residual), 1e-9 * (1.0 + spectral_norm(b.matrix())));
  }
}

TEST(Lyapunov, RejectsNonHurwitz) {
  try {
    solve_lyapunov(Matrix::from_rows({{0.0, 1.0}, {-1.0, 0.0}}), PsdMatrix(Matrix::identity(2)));
    FAIL() << "expected NotHurwitz";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotHurwitz);
  }
  EXPECT_THROW(solve_lyapunov(Matrix::identity(2) * 0.5, PsdMatrix(Matrix::identity(2))), Error);
}
