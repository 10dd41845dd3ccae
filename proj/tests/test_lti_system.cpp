#include <gtest/gtest.h>

#include <cmath>

#include "h2mm/errors.hpp"
#include "h2mm/lti_system.hpp"
#include "test_util.hpp"

using namespace h2mm;
using namespace h2mm::testing;

namespace {

LtiSystem scalar() {
  return LtiSystem(Matrix::Constant(1, 1, -1), Matrix::Ones(1, 1),
                   Matrix::Ones(1, 1));
}

ReducedModel row1_model() {
  ReducedModel rm;
  rm.F.resize(2, 2);
  rm.F << -1, 1, -0.5, 0;
  rm.G.resize(2, 1);
  rm.G << 1, 0.5;
  rm.H.resize(1, 2);
  rm.H << 1, -1;
  return rm;
}

}  // namespace

TEST(LtiSystem, RejectsBadShapes) {
  EXPECT_THROW(LtiSystem(Matrix::Zero(2, 2), Matrix::Zero(3, 1), Matrix::Zero(1, 2)),
               Error);
  EXPECT_THROW(LtiSystem(Matrix::Constant(1, 1, NAN), Matrix::Ones(1, 1),
                         Matrix::Ones(1, 1)),
               Error);
}

TEST(Transfer, ScalarValues) {
  EXPECT_NEAR(std::abs(eval_transfer(scalar(), 0.0).value(0, 0) - 1.0), 0.0, 1e-15);
  const Complex k = eval_transfer(scalar(), Complex(0, 1)).value(0, 0);
  EXPECT_NEAR(k.real(), 0.5, 1e-15);
  EXPECT_NEAR(k.imag(), -0.5, 1e-15);
}

TEST(Transfer, CartDcGain) {
  const LtiSystem sys = cart_pendulum();
  const Matrix x = sys.A().fullPivLu().solve(-sys.B());
  const Complex k0 = eval_transfer(sys, 0.0).value(0, 0);
  EXPECT_NEAR(k0.real(), (sys.C() * x)(0, 0), 1e-12);
  EXPECT_EQ(k0.imag(), 0.0);
}

TEST(Transfer, SingularResolvent) {
  try {
    eval_transfer(scalar(), -1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kResolventSingular);
  }
}

TEST(Gramians, ScalarAndZeroInput) {
  const Gramians g = gramians(scalar());
  EXPECT_NEAR(g.W(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(g.M(0, 0), 0.5, 1e-15);
  const LtiSystem z(Matrix::Constant(1, 1, -1), Matrix::Zero(1, 1), Matrix::Ones(1, 1));
  EXPECT_EQ(gramians(z).W.norm(), 0.0);
  EXPECT_EQ(h2_norm(z), 0.0);
}

TEST(Gramians, CartResiduals) {
  const LtiSystem sys = cart_pendulum();
  const Gramians g = gramians(sys);
  const double scale = sys.A().norm() * g.W.norm() + sys.B().squaredNorm();
  EXPECT_LT((sys.A() * g.W + g.W * sys.A().transpose() +
             sys.B() * sys.B().transpose()).norm(), 1e-10 * scale);
  EXPECT_LT((sys.A().transpose() * g.M + g.M * sys.A() +
             sys.C().transpose() * sys.C()).norm(), 1e-10 * (1 + sys.A().norm() * g.M.norm()));
}

TEST(H2Norm, ScalarConventions) {
  EXPECT_NEAR(h2_norm(scalar()), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(h2_norm(scalar(), H2Convention::kUnnormalized),
              std::sqrt(0.5 * 2 * M_PI), 1e-14);
  EXPECT_NEAR(h2_norm_quadrature(scalar()), std::sqrt(0.5), 1e-3 * std::sqrt(0.5));
}

TEST(H2Norm, UnstableRejected) {
  const LtiSystem u(Matrix::Constant(1, 1, 0.1), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  EXPECT_THROW(h2_norm(u), Error);
  EXPECT_THROW(h2_norm_quadrature(u), Error);
}

TEST(H2Norm, QuadratureAgreesOnRandomSystems) {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 5; ++k) {
    const LtiSystem sys = random_system(5, 2, 2, rng);
    EXPECT_NEAR(h2_norm_quadrature(sys) / h2_norm(sys), 1.0, 5e-3);
  }
}

TEST(ErrorSystem, SelfDifferenceIsZero) {
  std::mt19937_64 rng(2);
  const LtiSystem sys = random_system(4, 1, 1, rng);
  ReducedModel rm;
  rm.F = sys.A();
  rm.G = sys.B();
  rm.H = sys.C();
  EXPECT_EQ(h2_norm(build_error_system(sys, rm)), 0.0);
}

TEST(ErrorSystem, EmptyModelGivesSystemNorm) {
  const LtiSystem sys = cart_pendulum();
  ReducedModel rm;
  rm.F.resize(0, 0);
  rm.G.resize(0, 1);
  rm.H.resize(1, 0);
  const ErrorRealization e = build_error_system(sys, rm);
  EXPECT_EQ(e.Ae.rows(), 6);
  EXPECT_NEAR(h2_norm(e), h2_norm(sys), 1e-14);
}

TEST(ErrorSystem, DimensionMismatch) {
  ReducedModel rm = row1_model();
  rm.G.resize(2, 2);
  rm.G.setOnes();
  EXPECT_THROW(build_error_system(cart_pendulum(), rm), Error);
}

TEST(ErrorSystem, Row1ModelNorm) {
  const ErrorRealization e = build_error_system(cart_pendulum(), row1_model());
  EXPECT_EQ(e.Ae.rows(), 8);
  const double un = h2_norm(e, H2Convention::kUnnormalized);
  EXPECT_NEAR(un, 1.391, 0.02 * 1.391);
  EXPECT_NEAR(h2_norm(e.as_system()), h2_norm(e), 1e-10);
  const ErrorGramians g = error_gramians(e);
  EXPECT_NEAR((e.Be.transpose() * g.M * e.Be).trace() * 2 * M_PI, un * un, 1e-9);
}

TEST(ErrorGramians, ScalarPairKroneckerValues) {
  const LtiSystem sys = scalar();
  ReducedModel rm;
  rm.F = Matrix::Constant(1, 1, -2);
  rm.G = Matrix::Ones(1, 1);
  rm.H = Matrix::Ones(1, 1);
  const ErrorGramians g = error_gramians(build_error_system(sys, rm));
  Matrix w(2, 2);
  w << 0.5, 1.0 / 3, 1.0 / 3, 0.25;
  EXPECT_LT((g.W - w).norm(), 1e-15);
}

TEST(ErrorGramians, TwoGramianIdentityAndSolverBlocks) {
  std::mt19937_64 rng(9);
  const LtiSystem sys = random_system(5, 2, 3, rng);
  ReducedModel rm;
  rm.F = random_stable(2, rng);
  rm.G = random_matrix(2, 2, rng);
  rm.H = random_matrix(3, 2, rng);
  const ErrorRealization e = build_error_system(sys, rm);
  const ErrorGramians g = error_gramians(e);
  const double tw = (e.Ce * g.W * e.Ce.transpose()).trace();
  const double tm = (e.Be.transpose() * g.M * e.Be).trace();
  EXPECT_NEAR(tw / tm, 1.0, 1e-10);
  const ErrorGramianSolver solver(sys);
  const ErrorGramians h = solver.assemble(solver.solve(rm.F, rm.G, rm.H));
  EXPECT_LT(rel_diff(h.W, g.W), 1e-10);
  EXPECT_LT(rel_diff(h.M, g.M), 1e-10);
}

TEST(ErrorGramians, UnstableBlockNamed) {
  ReducedModel rm = row1_model();
  rm.F(0, 0) = 1.0;
  try {
    error_gramians(build_error_system(cart_pendulum(), rm));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnstableMatrix);
    EXPECT_NE(std::string(e.what()).find('F'), std::string::npos) << e.what();
  }
}
