#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace h2mm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

struct SpectrumReport {
  CVector eigenvalues;
  double spectral_abscissa = 0.0;
  bool is_stable = false;
};

/// Eigenvalues, spectral abscissa and the strict stability test
/// max Re(lambda) < -margin.
SpectrumReport spectrum(const Matrix& a, double margin = 0.0);

/// Throws NonFinite when any entry is NaN or Inf.
void require_finite(const Matrix& m, const char* name);

/// Smallest distance between two eigenvalue sets (infinity if one is empty).
double spectral_gap(const CVector& x, const CVector& y);

/// Real Schur factorization A = U T U^T, kept so that several Sylvester
/// solves against the same coefficient can share it.
class SchurForm {
 public:
  explicit SchurForm(const Matrix& a);

  int size() const { return static_cast<int>(a_.rows()); }
  const Matrix& matrix() const { return a_; }
  const Matrix& U() const { return u_; }
  const Matrix& T() const { return t_; }
  const CVector& eigenvalues() const { return eig_; }
  /// Start index of every diagonal block of T, followed by size().
  const std::vector<int>& blocks() const { return blocks_; }
  double norm() const { return norm_; }

 private:
  Matrix a_;
  Matrix u_;
  Matrix t_;
  CVector eig_;
  std::vector<int> blocks_;
  double norm_ = 0.0;
};

/// Solves A X - X S = -rhs (so A X + rhs = X S) by Bartels-Stewart.
Matrix solve_sylvester(const SchurForm& a, const SchurForm& s,
                       const Matrix& rhs);
Matrix solve_sylvester(const Matrix& a, const Matrix& s, const Matrix& rhs);

/// A W + W A^T + Q = 0, A stable, Q symmetric.
Matrix solve_lyapunov_ctrl(const Matrix& a, const Matrix& q);
/// A^T M + M A + Q = 0, A stable, Q symmetric.
Matrix solve_lyapunov_obs(const Matrix& a, const Matrix& q);

/// Real G placing the eigenvalues of S - G L at targets. Targets must be
/// closed under conjugation.
Matrix place_poles(const Matrix& s, const Matrix& l, const CVector& targets);

Matrix observability_matrix(const Matrix& l, const Matrix& s);
int observability_rank(const Matrix& l, const Matrix& s);
int controllability_rank(const Matrix& q, const Matrix& r);

/// Numerical rank with the usual max(rows, cols) * eps * sigma_max cut.
int numerical_rank(const Matrix& m);

}  // namespace h2mm
