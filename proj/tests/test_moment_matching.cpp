#include <gtest/gtest.h>

#include "h2mm/errors.hpp"
#include "h2mm/h2_optimizer.hpp"
#include "h2mm/moment_matching.hpp"
#include "test_util.hpp"

using namespace h2mm;
using namespace h2mm::testing;

namespace {

LtiSystem scalar() {
  return LtiSystem(Matrix::Constant(1, 1, -1), Matrix::Ones(1, 1),
                   Matrix::Ones(1, 1));
}

LtiSystem diag12() {
  Matrix a(2, 2);
  a << -1, 0, 0, -2;
  return LtiSystem(a, Matrix::Ones(2, 1), Matrix::Ones(1, 2));
}

CVector pts(std::initializer_list<Complex> v) {
  CVector c(static_cast<int>(v.size()));
  int i = 0;
  for (Complex z : v) c(i++) = z;
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kInvalidArgument;
}

InterpolationData jordan_zero() {
  InterpolationData d{Matrix(2, 2), Matrix(1, 2)};
  d.S << 0, 1, 0, 0;
  d.L << 1, 0;
  return d;
}

}  // namespace

TEST(Krylov, RightScalarAndDiagonal) {
  const KrylovBasis k1 = krylov_right(scalar(), pts({0.0}), CMatrix::Ones(1, 1));
  EXPECT_NEAR(k1.basis(0, 0), 1.0, 1e-15);
  const KrylovBasis k2 = krylov_right(diag12(), pts({0.0, 1.0}), CMatrix::Ones(1, 2));
  Matrix v(2, 2);
  v << 1, 0.5, 0.5, 1.0 / 3;
  EXPECT_LT((k2.basis - v).norm(), 1e-14);
}

TEST(Krylov, ConjugatePairSpansComplexColumns) {
  Matrix a(2, 2);
  a << -1, 2, -2, -1;
  const LtiSystem sys(a, Matrix::Ones(2, 1), Matrix::Ones(1, 2));
  const CVector p = pts({Complex(0, 1), Complex(0, -1)});
  const KrylovBasis k = krylov_right(sys, p, CMatrix::Ones(1, 2));
  EXPECT_EQ(k.basis.rows(), 2);
  EXPECT_EQ(k.basis.cols(), 2);
  for (int j = 0; j < 2; ++j) {
    const CMatrix r = (p(j) * CMatrix::Identity(2, 2) - a.cast<Complex>());
    const CVector col = r.partialPivLu().solve(CVector::Ones(2));
    const CMatrix vc = k.basis.cast<Complex>() * k.realification;
    EXPECT_LT((vc.col(j) - col).norm(), 1e-12);
  }
  // Real generator: A V T + B L = V T S.
  const Matrix pi = k.basis * k.T;
  EXPECT_LT((a * pi + sys.B() * k.L - pi * k.S).norm(), 1e-12);
}

TEST(Krylov, HigherOrderScalar) {
  const KrylovBasis k = krylov_right_higher(scalar(), pts({0.0}), {2}, CMatrix::Ones(1, 1));
  EXPECT_LT((k.basis - Matrix::Ones(1, 2)).norm(), 1e-14);
  const Matrix pi = k.basis * k.T;
  EXPECT_LT((scalar().A() * pi + scalar().B() * k.L - pi * k.S).norm(), 1e-12);
}

TEST(Krylov, HigherOrderCartResidual) {
  const LtiSystem sys = cart_pendulum();
  const KrylovBasis k = krylov_right_higher(sys, pts({0.0, Complex(0.5, 1), Complex(0.5, -1)}),
                                            {2, 1, 1}, CMatrix::Ones(1, 3));
  const Matrix pi = k.basis * k.T;
  EXPECT_LT((sys.A() * pi + sys.B() * k.L - pi * k.S).norm(), 1e-10 * (1 + pi.norm()));
  const KrylovBasis k1 = krylov_right_higher(diag12(), pts({0.0, 1.0}), {1, 1}, CMatrix::Ones(1, 2));
  const KrylovBasis k2 = krylov_right(diag12(), pts({0.0, 1.0}), CMatrix::Ones(1, 2));
  EXPECT_EQ(k1.basis, k2.basis);
}

TEST(Krylov, LeftMirrorsRight) {
  const KrylovBasis w = krylov_left(scalar(), pts({0.0}), CMatrix::Ones(1, 1));
  EXPECT_NEAR(w.basis(0, 0), 1.0, 1e-15);
  Matrix a(3, 3);
  a << -2, 1, 0, 1, -3, 1, 0, 1, -4;
  Matrix b(3, 1);
  b << 1, 2, 0.5;
  const LtiSystem sym(a, b, b.transpose());
  const CVector p = pts({0.0, 0.7});
  const KrylovBasis r = krylov_right(sym, p, CMatrix::Ones(1, 2));
  const KrylovBasis l = krylov_left(sym, p, CMatrix::Ones(2, 1));
  EXPECT_LT((r.basis - l.basis).norm(), 1e-14);
}

TEST(Krylov, Errors) {
  EXPECT_EQ(code_of([] { krylov_right(scalar(), pts({-1.0}), CMatrix::Ones(1, 1)); }),
            ErrorCode::kPointOnSpectrum);
  // Two points with identical resolvent columns for a 1-state system.
  EXPECT_EQ(code_of([] { krylov_right(scalar(), pts({0.0, 1.0}), CMatrix::Ones(1, 2)); }),
            ErrorCode::kRankDeficient);
  EXPECT_EQ(code_of([] { krylov_right(diag12(), pts({0.0, 0.0}), CMatrix::Ones(1, 2)); }),
            ErrorCode::kInvalidArgument);
}

TEST(Moments, RightExamples) {
  const MomentSet m1 = moments_right(scalar(), {Matrix::Zero(1, 1), Matrix::Ones(1, 1)});
  EXPECT_NEAR(m1.value(0, 0), 1.0, 1e-15);
  const LtiSystem sys = cart_pendulum();
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 0.3;
  s(1, 1) = 1.7;
  const MomentSet m2 = moments_right(sys, {s, Matrix::Ones(1, 2)});
  EXPECT_NEAR(m2.value(0, 0), eval_transfer(sys, 0.3).value(0, 0).real(), 1e-12);
  EXPECT_NEAR(m2.value(0, 1), eval_transfer(sys, 1.7).value(0, 0).real(), 1e-12);
}

TEST(Moments, JordanGivesDerivative) {
  const LtiSystem sys = cart_pendulum();
  const MomentSet m = moments_right(sys, jordan_zero());
  const double h = 1e-5;
  const double d = (eval_transfer(sys, h).value(0, 0).real() -
                    eval_transfer(sys, -h).value(0, 0).real()) / (2 * h);
  EXPECT_NEAR(m.value(0, 0), eval_transfer(sys, 0.0).value(0, 0).real(), 1e-12);
  // Unit-first Jordan pattern: second column is K'(0), i.e. minus the first moment.
  EXPECT_NEAR(m.value(0, 1), d, 1e-7);
  EXPECT_NEAR(m.value(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.value(0, 1), -1.0, 1e-12);
}

TEST(Moments, RightErrors) {
  EXPECT_EQ(code_of([] {
              moments_right(diag12(), {Matrix::Identity(2, 2), Matrix::Ones(1, 2)});
            }),
            ErrorCode::kNotObservable);
  EXPECT_EQ(code_of([] {
              moments_right(scalar(), {Matrix::Constant(1, 1, -1), Matrix::Ones(1, 1)});
            }),
            ErrorCode::kSpectraOverlap);
}

TEST(Moments, LeftExamples) {
  const MomentSet m1 = moments_left(scalar(), {Matrix::Zero(1, 1), Matrix::Ones(1, 1)});
  EXPECT_NEAR(m1.value(0, 0), 1.0, 1e-15);
  const LtiSystem sys = cart_pendulum();
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 0.4;
  q(1, 1) = 2.0;
  const MomentSet m2 = moments_left(sys, {q, Matrix::Ones(2, 1)});
  EXPECT_NEAR(m2.value(0, 0), eval_transfer(sys, 0.4).value(0, 0).real(), 1e-12);
  EXPECT_NEAR(m2.value(1, 0), eval_transfer(sys, 2.0).value(0, 0).real(), 1e-12);
  const Matrix& ups = m2.projection;
  EXPECT_LT((q * ups - ups * sys.A() - Matrix::Ones(2, 1) * sys.C()).norm(), 1e-10 * (1 + ups.norm()));
}

TEST(Family, ReferenceRow1Model) {
  const LtiSystem sys = cart_pendulum();
  const InterpolationData d = jordan_zero();
  const MomentSet ms = moments_right(sys, d);
  Matrix g(2, 1);
  g << 1, 0.5;
  const ReducedModel rm = assemble_family_right(d, g, ms);
  Matrix f(2, 2);
  f << -1, 1, -0.5, 0;
  EXPECT_LT((rm.F - f).norm(), 1e-15);
  Matrix h(1, 2);
  h << 1, -1;
  EXPECT_LT((rm.H - h).norm(), 1e-12);
  EXPECT_TRUE(rm.stable);
  const InterpolationReport rep = check_interpolation(sys, rm, d, 1e-6);
  EXPECT_TRUE(rep.passed);
  EXPECT_LE(rep.max_residual, 1e-6);
  EXPECT_EQ(rep.entries.size(), 2u);
}

TEST(Family, ZeroGainAndPlacement) {
  const LtiSystem sys = cart_pendulum();
  const InterpolationData d = jordan_zero();
  const MomentSet ms = moments_right(sys, d);
  EXPECT_EQ(assemble_family_right(d, Matrix::Zero(2, 1), ms).F, d.S);
  CVector t(2);
  t << Complex(-1, 0), Complex(-2, 0);
  const ReducedModel rm = assemble_family_right(d, place_poles(d.S, d.L, t), ms);
  CVector e = spectrum(rm.F).eigenvalues;
  std::vector<double> re{e(0).real(), e(1).real()};
  std::sort(re.begin(), re.end());
  EXPECT_NEAR(re[0], -2, 1e-10);
  EXPECT_NEAR(re[1], -1, 1e-10);
  EXPECT_THROW(assemble_family_right(d, Matrix::Zero(3, 1), ms), Error);
}

TEST(Family, PerturbedOutputDetected) {
  const LtiSystem sys = cart_pendulum();
  const InterpolationData d = jordan_zero();
  const MomentSet ms = moments_right(sys, d);
  Matrix g(2, 1);
  g << 1, 0.5;
  ReducedModel rm = assemble_family_right(d, g, ms);
  rm.H.array() += 0.1;
  const InterpolationReport rep = check_interpolation(sys, rm, d, 1e-6);
  EXPECT_FALSE(rep.passed);
  EXPECT_GT(rep.max_residual, 1e-3);
}

TEST(Family, LeftInterpolates) {
  std::mt19937_64 rng(4);
  const LtiSystem sys = random_system(5, 2, 2, rng);
  Matrix q = Matrix::Zero(2, 2);
  q(0, 0) = 0.5;
  q(1, 1) = 1.5;
  const DualInterpolationData d{q, random_matrix(2, 2, rng)};
  const MomentSet ms = moments_left(sys, d);
  const ReducedModel h0 = assemble_family_left(d, Matrix::Zero(2, 2), ms);
  EXPECT_EQ(h0.F, q);
  const Matrix h = place_poles(q.transpose(), d.R.transpose(), default_targets(2)).transpose();
  const ReducedModel rm = assemble_family_left(d, h, ms);
  EXPECT_TRUE(rm.stable);
  const InterpolationReport rep = check_interpolation_left(sys, rm, d, 1e-8);
  EXPECT_TRUE(rep.passed) << rep.max_residual;
}

TEST(Family, ComplexPairInterpolation) {
  const LtiSystem sys = cart_pendulum();
  const CVector p = pts({Complex(0.1, 0.4), Complex(0.1, -0.4)});
  const InterpolationData d = interpolation_from_points(p, {1, 1}, CMatrix::Ones(1, 2));
  const MomentSet ms = moments_right(sys, d);
  const ReducedModel rm = assemble_family_right(d, place_poles(d.S, d.L, default_targets(2)), ms);
  const InterpolationReport rep = check_interpolation(sys, rm, d, 1e-8);
  EXPECT_TRUE(rep.passed) << rep.max_residual;
  CVector e = spectrum(d.S).eigenvalues;
  EXPECT_NEAR(std::abs(e(0).imag()), 0.4, 1e-14);
}

TEST(Points, GroupingAndClusters) {
  CVector distinct;
  std::vector<int> mult;
  group_points(pts({0.0, 1.0, 0.0, 2.0}), &distinct, &mult);
  ASSERT_EQ(distinct.size(), 3);
  EXPECT_EQ(mult, (std::vector<int>{2, 1, 1}));
  cluster_eigenvalues(pts({1.0, 1.0 + 1e-9, 3.0}), &distinct, &mult);
  EXPECT_EQ(distinct.size(), 2);
  EXPECT_EQ(mult[0], 2);
}
