#pragma once

#include <memory>
#include <optional>

#include "h2mm/matrix_equations.hpp"
#include "h2mm/reduced_model.hpp"

namespace h2mm {

/// Dense continuous-time state-space system (A, B, C).
class LtiSystem {
 public:
  LtiSystem(Matrix a, Matrix b, Matrix c);

  const Matrix& A() const { return a_; }
  const Matrix& B() const { return b_; }
  const Matrix& C() const { return c_; }
  int n() const { return static_cast<int>(a_.rows()); }
  int m() const { return static_cast<int>(b_.cols()); }
  int p() const { return static_cast<int>(c_.rows()); }

 private:
  Matrix a_;
  Matrix b_;
  Matrix c_;
};

struct TransferSample {
  Complex s;
  CMatrix value;
};

/// K(s) = C (sI - A)^{-1} B via an LU solve.
TransferSample eval_transfer(const LtiSystem& sys, Complex s);

struct Gramians {
  Matrix W;  // A W + W A^T + B B^T = 0
  Matrix M;  // A^T M + M A + C^T C = 0
};

Gramians gramians(const LtiSystem& sys);

/// Normalized: ||K||^2 = (1/2pi) int trace(K K^*) dw = trace(C W C^T).
/// Unnormalized drops the 1/2pi, which scales the norm by sqrt(2 pi).
enum class H2Convention { kNormalized, kUnnormalized };

double h2_norm(const LtiSystem& sys,
               H2Convention conv = H2Convention::kNormalized);

/// Frequency-domain oracle: adaptive Simpson on log-spaced panels over
/// [0, omega_max] (the integrand is even) plus the ||CB||^2/omega tail.
double h2_norm_quadrature(const LtiSystem& sys, double omega_max, int samples,
                          H2Convention conv = H2Convention::kNormalized);
double h2_norm_quadrature(const LtiSystem& sys,
                          H2Convention conv = H2Convention::kNormalized);

struct ErrorRealization {
  Matrix Ae;
  Matrix Be;
  Matrix Ce;
  int n = 0;
  int nu = 0;
  std::optional<Matrix> Pi;

  LtiSystem as_system() const { return LtiSystem(Ae, Be, Ce); }
  Matrix A() const { return Ae.topLeftCorner(n, n); }
  Matrix F() const { return Ae.bottomRightCorner(nu, nu); }
  Matrix B() const { return Be.topRows(n); }
  Matrix G() const { return Be.bottomRows(nu); }
  Matrix C() const { return Ce.leftCols(n); }
  Matrix H() const { return -Ce.rightCols(nu); }
};

/// Ae = blkdiag(A, F), Be = [B; G], Ce = [C, -H].
ErrorRealization build_error_system(const LtiSystem& sys,
                                    const ReducedModel& model);

struct ErrorGramians {
  Matrix W;
  Matrix M;
  int n = 0;
  int nu = 0;

  Matrix W11() const { return W.topLeftCorner(n, n); }
  Matrix W12() const { return W.topRightCorner(n, nu); }
  Matrix W22() const { return W.bottomRightCorner(nu, nu); }
  Matrix M11() const { return M.topLeftCorner(n, n); }
  Matrix M12() const { return M.topRightCorner(n, nu); }
  Matrix M22() const { return M.bottomRightCorner(nu, nu); }
};

ErrorGramians error_gramians(const ErrorRealization& err);

/// H2 norm of K - K_hat computed blockwise. Identical inputs cancel exactly,
/// so a system compared with itself gives 0.
double h2_norm(const ErrorRealization& err,
               H2Convention conv = H2Convention::kNormalized);

/// Blockwise error-Gramian solver for a fixed full-order system. The n x n
/// blocks W11 and M11 and the Schur forms of A are computed once; each call
/// only solves the coupling and reduced-order blocks.
class ErrorGramianSolver {
 public:
  explicit ErrorGramianSolver(const LtiSystem& sys);

  struct Blocks {
    Matrix W12, W22, M12, M22;
    double trace_w = 0.0;  // trace(Ce W Ce^T)
    double trace_m = 0.0;  // trace(Be^T M Be)
  };

  /// Throws UnstableMatrix when F is not stable.
  Blocks solve(const Matrix& f, const Matrix& g, const Matrix& h) const;
  ErrorGramians assemble(const Blocks& b) const;

  const LtiSystem& system() const { return sys_; }
  const Matrix& W11() const { return w11_; }
  const Matrix& M11() const { return m11_; }
  const SchurForm& schur_a() const { return *a_; }
  const SchurForm& schur_at() const { return *at_; }

 private:
  LtiSystem sys_;
  std::shared_ptr<SchurForm> a_, at_, minus_a_, minus_at_;
  Matrix w11_, m11_;
};

}  // namespace h2mm
