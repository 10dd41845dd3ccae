#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include "h2mm/errors.hpp"
#include "h2mm/matrix_equations.hpp"
#include "test_util.hpp"

using namespace h2mm;
using h2mm::testing::random_matrix;
using h2mm::testing::random_stable;
using h2mm::testing::rel_diff;

namespace {

Matrix mat(int r, int c, std::initializer_list<double> v) {
  Matrix m(r, c);
  auto it = v.begin();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = *it++;
  return m;
}

// (I kron A - S^T kron I) vec(X) = -vec(rhs).
Matrix kron_sylvester(const Matrix& a, const Matrix& s, const Matrix& rhs) {
  const int n = static_cast<int>(a.rows());
  const int k = static_cast<int>(s.rows());
  const Matrix op = Eigen::kroneckerProduct(Matrix::Identity(k, k), a) -
                    Eigen::kroneckerProduct(s.transpose(), Matrix::Identity(n, n));
  const Vector x = op.fullPivLu().solve(-rhs.reshaped());
  return x.reshaped(n, k);
}

void expect_code(ErrorCode code, const std::function<void()>& f) {
  try {
    f();
    FAIL() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(Sylvester, ScalarCases) {
  EXPECT_NEAR(solve_sylvester(mat(1, 1, {-1}), mat(1, 1, {0}), mat(1, 1, {1}))(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(solve_sylvester(mat(1, 1, {-2}), mat(1, 1, {1}), mat(1, 1, {3}))(0, 0), 1.0, 1e-15);
}

TEST(Sylvester, DiagonalMatchesResolventColumns) {
  const Matrix a = mat(2, 2, {-1, 0, 0, -2});
  const Matrix s = mat(2, 2, {0, 0, 0, 1});
  const Matrix b = mat(2, 1, {1, 1});
  const Matrix l = mat(1, 2, {1, 1});
  const Matrix pi = solve_sylvester(a, s, b * l);
  EXPECT_LT(rel_diff(pi, mat(2, 2, {1, 0.5, 0.5, 1.0 / 3})), 1e-14);
}

TEST(Sylvester, KroneckerOracleRandom) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + trial % 7;
    const int k = 1 + (trial * 3) % 5;
    const Matrix a = random_stable(n, rng);
    Matrix s = random_matrix(k, k, rng);  // complex pairs and mixed signs
    s.diagonal().array() += 1.0;
    const Matrix rhs = random_matrix(n, k, rng);
    const Matrix x = solve_sylvester(a, s, rhs);
    EXPECT_LT(rel_diff(x, kron_sylvester(a, s, rhs)), 1e-10) << "trial " << trial;
    EXPECT_LT((a * x - x * s + rhs).norm(), 1e-11 * (1 + rhs.norm() + x.norm()));
  }
}

TEST(Sylvester, JordanBlockRhs) {
  const Matrix a = mat(2, 2, {-1, 1, 0, -3});
  const Matrix s = mat(2, 2, {0, 1, 0, 0});
  const Matrix rhs = mat(2, 2, {1, 0, 2, 0});
  EXPECT_LT(rel_diff(solve_sylvester(a, s, rhs), kron_sylvester(a, s, rhs)), 1e-13);
}

TEST(Sylvester, SharedSchurForms) {
  std::mt19937_64 rng(5);
  const SchurForm a(random_stable(5, rng));
  const SchurForm s(random_matrix(3, 3, rng));
  for (int i = 0; i < 3; ++i) {
    const Matrix rhs = random_matrix(5, 3, rng);
    EXPECT_LT(rel_diff(solve_sylvester(a, s, rhs),
                       kron_sylvester(a.matrix(), s.matrix(), rhs)),
              1e-10);
  }
}

TEST(Sylvester, OverlappingSpectraRejected) {
  expect_code(ErrorCode::kSpectraOverlap, [] {
    solve_sylvester(mat(1, 1, {-1}), mat(1, 1, {-1}), mat(1, 1, {1}));
  });
  expect_code(ErrorCode::kNonFinite, [] {
    solve_sylvester(mat(1, 1, {NAN}), mat(1, 1, {0}), mat(1, 1, {1}));
  });
}

TEST(Lyapunov, ClosedForms) {
  EXPECT_NEAR(solve_lyapunov_ctrl(mat(1, 1, {-1}), mat(1, 1, {1}))(0, 0), 0.5, 1e-15);
  EXPECT_LT((solve_lyapunov_ctrl(-Matrix::Identity(2, 2), Matrix::Identity(2, 2)) -
             0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);
  EXPECT_NEAR(solve_lyapunov_obs(mat(1, 1, {-1}), mat(1, 1, {1}))(0, 0), 0.5, 1e-15);
  EXPECT_LT((solve_lyapunov_obs(-Matrix::Identity(2, 2), Matrix::Identity(2, 2)) -
             0.5 * Matrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(Lyapunov, KroneckerOracle) {
  const Matrix a = mat(2, 2, {-1, 1, 0, -2});
  const Matrix q = Matrix::Identity(2, 2);
  const Matrix op = Eigen::kroneckerProduct(Matrix::Identity(2, 2), a) +
                    Eigen::kroneckerProduct(a, Matrix::Identity(2, 2));
  const Matrix w_ref = Vector(op.fullPivLu().solve(-q.reshaped())).reshaped(2, 2);
  const Matrix w = solve_lyapunov_ctrl(a, q);
  EXPECT_LT(rel_diff(w, w_ref), 1e-14);
  EXPECT_LT((w - w.transpose()).norm(), 1e-16);
}

TEST(Lyapunov, RandomObservabilityResidual) {
  std::mt19937_64 rng(3);
  const Matrix a = random_stable(4, rng);
  const Matrix c = random_matrix(2, 4, rng);
  const Matrix q = c.transpose() * c;
  const Matrix m = solve_lyapunov_obs(a, q);
  EXPECT_LT((a.transpose() * m + m * a + q).norm(), 1e-10 * (1 + m.norm() * a.norm()));
  const Matrix op = Eigen::kroneckerProduct(a.transpose(), Matrix::Identity(4, 4)) +
                    Eigen::kroneckerProduct(Matrix::Identity(4, 4), a.transpose());
  const Matrix ref = Vector(op.fullPivLu().solve(-q.reshaped())).reshaped(4, 4);
  EXPECT_LT(rel_diff(m, ref), 1e-10);
}

TEST(Lyapunov, Preconditions) {
  expect_code(ErrorCode::kUnstableMatrix, [] {
    solve_lyapunov_ctrl(mat(1, 1, {0.5}), mat(1, 1, {1}));
  });
  expect_code(ErrorCode::kNonSymmetricInput, [] {
    solve_lyapunov_obs(-Matrix::Identity(2, 2), mat(2, 2, {1, 1, 0, 1}));
  });
}

TEST(Spectrum, Examples) {
  const SpectrumReport r = spectrum(mat(2, 2, {-1, 1, -0.5, 0}));
  EXPECT_TRUE(r.is_stable);
  EXPECT_NEAR(r.spectral_abscissa, -0.5, 1e-14);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(r.eigenvalues(i).real(), -0.5, 1e-14);
    EXPECT_NEAR(std::abs(r.eigenvalues(i).imag()), 0.5, 1e-14);
  }
  EXPECT_FALSE(spectrum(Matrix::Identity(2, 2)).is_stable);
  const SpectrumReport j = spectrum(mat(2, 2, {0, 1, 0, 0}));
  EXPECT_FALSE(j.is_stable);
  EXPECT_EQ(j.spectral_abscissa, 0.0);
}

TEST(PolePlacement, ScalarAndCompanion) {
  const CVector t1 = CVector::Constant(1, Complex(-5, 0));
  EXPECT_NEAR(place_poles(mat(1, 1, {0}), mat(1, 1, {1}), t1)(0, 0), 5.0, 1e-12);
  CVector t2(2);
  t2 << Complex(-1, 0), Complex(-2, 0);
  const Matrix g = place_poles(mat(2, 2, {0, 1, 0, 0}), mat(1, 2, {1, 0}), t2);
  EXPECT_LT((g - mat(2, 1, {3, 2})).norm(), 1e-12);
}

TEST(PolePlacement, RandomObservablePairs) {
  std::mt19937_64 rng(17);
  for (int m = 1; m <= 2; ++m) {
    const Matrix s = random_matrix(4, 4, rng);
    const Matrix l = random_matrix(m, 4, rng);
    CVector t(4);
    t << Complex(-1, 0.5), Complex(-1, -0.5), Complex(-2, 0), Complex(-3, 0);
    const Matrix g = place_poles(s, l, t);
    const CVector e = spectrum(s - g * l).eigenvalues;
    for (int i = 0; i < 4; ++i) {
      double best = 1e9;
      for (int j = 0; j < 4; ++j) best = std::min(best, std::abs(e(j) - t(i)));
      EXPECT_LT(best, 1e-8) << "m=" << m;
    }
  }
}

TEST(PolePlacement, Errors) {
  const CVector t = CVector::Constant(2, Complex(-1, 0));
  expect_code(ErrorCode::kNotObservable, [&] {
    place_poles(Matrix::Identity(2, 2), mat(1, 2, {1, 1}), t);
  });
  CVector unpaired(2);
  unpaired << Complex(-1, 1), Complex(-2, 0);
  expect_code(ErrorCode::kInvalidArgument, [&] {
    place_poles(mat(2, 2, {0, 1, 0, 0}), mat(1, 2, {1, 0}), unpaired);
  });
}

TEST(Observability, Ranks) {
  EXPECT_EQ(observability_rank(mat(1, 2, {1, 0}), mat(2, 2, {0, 1, 0, 0})), 2);
  EXPECT_EQ(observability_rank(mat(1, 2, {0, 0}), mat(2, 2, {3, 1, 2, 0})), 0);
  EXPECT_EQ(observability_rank(mat(1, 2, {1, 1}), Matrix::Identity(2, 2)), 1);
  EXPECT_EQ(controllability_rank(mat(2, 2, {0, 1, 0, 0}), mat(2, 1, {0, 1})), 2);
}
