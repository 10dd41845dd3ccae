#include "h2mm/matrix_equations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "h2mm/errors.hpp"

namespace h2mm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Solves T Y - Y R = C where T and R are upper quasi-triangular.
Matrix quasi_triangular_sylvester(const Matrix& t, const std::vector<int>& tb,
                                  const Matrix& r, const std::vector<int>& rb,
                                  const Matrix& c) {
  const int n = static_cast<int>(t.rows());
  Matrix y = Matrix::Zero(n, r.rows());
  for (size_t l = 0; l + 1 < rb.size(); ++l) {
    const int c0 = rb[l];
    const int cs = rb[l + 1] - c0;
    for (size_t kk = tb.size() - 1; kk-- > 0;) {
      const int r0 = tb[kk];
      const int rs = tb[kk + 1] - r0;
      const int tail = n - r0 - rs;
      Matrix rhs = c.block(r0, c0, rs, cs);
      if (tail > 0) {
        rhs.noalias() -= t.block(r0, r0 + rs, rs, tail) *
                         y.block(r0 + rs, c0, tail, cs);
      }
      if (c0 > 0) {
        rhs.noalias() += y.block(r0, 0, rs, c0) * r.block(0, c0, c0, cs);
      }
      // Small Kronecker system: (I (x) T_kk - R_ll^T (x) I) vec(Y) = vec(rhs).
      const int k = rs * cs;
      Matrix kron = Matrix::Zero(k, k);
      const Matrix tkk = t.block(r0, r0, rs, rs);
      const Matrix rll = r.block(c0, c0, cs, cs);
      for (int j = 0; j < cs; ++j) {
        kron.block(j * rs, j * rs, rs, rs) += tkk;
        for (int i = 0; i < cs; ++i) {
          kron.block(j * rs, i * rs, rs, rs) -=
              rll(i, j) * Matrix::Identity(rs, rs);
        }
      }
      Vector b = Eigen::Map<const Vector>(rhs.data(), k);
      Vector sol = kron.fullPivLu().solve(b);
      y.block(r0, c0, rs, cs) = Eigen::Map<const Matrix>(sol.data(), rs, cs);
    }
  }
  return y;
}

Matrix sylvester_pass(const SchurForm& a, const SchurForm& s,
                      const Matrix& rhs) {
  const Matrix c = -(a.U().transpose() * rhs * s.U());
  const Matrix y = quasi_triangular_sylvester(a.T(), a.blocks(), s.T(),
                                              s.blocks(), c);
  return a.U() * y * s.U().transpose();
}

void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(name) + " must be square");
  }
}

bool is_symmetric(const Matrix& q) {
  const double scale = std::max(1.0, q.norm());
  return (q - q.transpose()).norm() <= 1e-10 * scale;
}

Matrix lyapunov(const Matrix& a, const Matrix& q) {
  require_square(a, "A");
  if (q.rows() != a.rows() || q.cols() != a.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "Q must match A");
  }
  require_finite(a, "A");
  require_finite(q, "Q");
  if (!is_symmetric(q)) {
    throw Error(ErrorCode::kNonSymmetricInput, "Q is not symmetric");
  }
  SchurForm sa(a);
  for (int i = 0; i < sa.eigenvalues().size(); ++i) {
    if (!(sa.eigenvalues()(i).real() < 0.0)) {
      throw Error(ErrorCode::kUnstableMatrix,
                  "Lyapunov coefficient has an eigenvalue with Re >= 0");
    }
  }
  SchurForm sb(Matrix(-a.transpose()));
  Matrix w = solve_sylvester(sa, sb, q);
  return 0.5 * (w + w.transpose());
}

Vector real_poly(const CVector& roots) {
  CVector c = CVector::Zero(roots.size() + 1);
  c(0) = 1.0;
  for (int k = 0; k < roots.size(); ++k) {
    for (int i = k + 1; i >= 1; --i) c(i) -= roots(k) * c(i - 1);
  }
  return c.real();
}

// Single-output Ackermann: eigenvalues of S - g l are the roots of p.
Vector ackermann(const Matrix& s, const Matrix& l, const Vector& p) {
  const int nu = static_cast<int>(s.rows());
  Matrix ps = Matrix::Identity(nu, nu);
  for (int k = 1; k <= nu; ++k) {
    ps = ps * s + p(k) * Matrix::Identity(nu, nu);
  }
  const Matrix obs = observability_matrix(l, s);
  Vector e = Vector::Zero(nu);
  e(nu - 1) = 1.0;
  return ps * obs.colPivHouseholderQr().solve(e);
}

double condition(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double lo = sv(sv.size() - 1);
  return lo > 0.0 ? sv(0) / lo : kInf;
}

double placement_error(const CVector& got, const CVector& want) {
  std::vector<bool> used(got.size(), false);
  double worst = 0.0;
  for (int i = 0; i < want.size(); ++i) {
    int best = -1;
    double dist = kInf;
    for (int j = 0; j < got.size(); ++j) {
      if (used[j]) continue;
      const double d = std::abs(got(j) - want(i));
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
    if (best < 0) return kInf;
    used[best] = true;
    worst = std::max(worst, dist);
  }
  return worst;
}

}  // namespace

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kNonFinite,
                std::string(name) + " has NaN or Inf entries");
  }
}

SpectrumReport spectrum(const Matrix& a, double margin) {
  require_square(a, "matrix");
  require_finite(a, "matrix");
  SpectrumReport rep;
  if (a.rows() == 0) {
    rep.spectral_abscissa = -kInf;
    rep.is_stable = true;
    return rep;
  }
  Eigen::EigenSolver<Matrix> es(a, false);
  rep.eigenvalues = es.eigenvalues();
  rep.spectral_abscissa = rep.eigenvalues.real().maxCoeff();
  rep.is_stable = rep.spectral_abscissa < -margin;
  return rep;
}

double spectral_gap(const CVector& x, const CVector& y) {
  double gap = kInf;
  for (int i = 0; i < x.size(); ++i) {
    for (int j = 0; j < y.size(); ++j) {
      gap = std::min(gap, std::abs(x(i) - y(j)));
    }
  }
  return gap;
}

SchurForm::SchurForm(const Matrix& a) : a_(a) {
  require_square(a, "Schur input");
  require_finite(a, "Schur input");
  const int n = static_cast<int>(a.rows());
  norm_ = a.norm();
  eig_.resize(n);
  blocks_.clear();
  if (n == 0) {
    blocks_.push_back(0);
    return;
  }
  Eigen::RealSchur<Matrix> schur(a);
  u_ = schur.matrixU();
  t_ = schur.matrixT();
  int i = 0;
  while (i < n) {
    blocks_.push_back(i);
    if (i + 1 < n && t_(i + 1, i) != 0.0) {
      const double p = 0.5 * (t_(i, i) + t_(i + 1, i + 1));
      const double q = 0.5 * (t_(i, i) - t_(i + 1, i + 1));
      const Complex disc =
          std::sqrt(Complex(q * q + t_(i, i + 1) * t_(i + 1, i), 0.0));
      eig_(i) = p + disc;
      eig_(i + 1) = p - disc;
      i += 2;
    } else {
      eig_(i) = t_(i, i);
      ++i;
    }
  }
  blocks_.push_back(n);
}

Matrix solve_sylvester(const SchurForm& a, const SchurForm& s,
                       const Matrix& rhs) {
  if (rhs.rows() != a.size() || rhs.cols() != s.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "Sylvester right-hand side has the wrong shape");
  }
  require_finite(rhs, "Sylvester right-hand side");
  if (a.size() == 0 || s.size() == 0) return Matrix::Zero(rhs.rows(), rhs.cols());
  const double tol = 1e-8 * std::max(a.norm(), s.norm());
  const double gap = spectral_gap(a.eigenvalues(), s.eigenvalues());
  if (gap < tol || gap == 0.0) {
    throw Error(ErrorCode::kSpectraOverlap,
                "eigenvalue gap " + std::to_string(gap) + " below tolerance");
  }
  Matrix x = sylvester_pass(a, s, rhs);
  // One step of iterative refinement when the residual is not at roundoff.
  const Matrix res = a.matrix() * x - x * s.matrix() + rhs;
  const double scale = a.norm() * x.norm() + x.norm() * s.norm() + rhs.norm();
  if (res.norm() > 1e-14 * scale) x += sylvester_pass(a, s, res);
  return x;
}

Matrix solve_sylvester(const Matrix& a, const Matrix& s, const Matrix& rhs) {
  require_square(a, "A");
  require_square(s, "S");
  return solve_sylvester(SchurForm(a), SchurForm(s), rhs);
}

Matrix solve_lyapunov_ctrl(const Matrix& a, const Matrix& q) {
  return lyapunov(a, q);
}

Matrix solve_lyapunov_obs(const Matrix& a, const Matrix& q) {
  require_square(a, "A");
  return lyapunov(a.transpose(), q);
}

Matrix observability_matrix(const Matrix& l, const Matrix& s) {
  require_square(s, "S");
  if (l.cols() != s.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "L must have nu columns");
  }
  const int nu = static_cast<int>(s.rows());
  const int m = static_cast<int>(l.rows());
  Matrix obs(m * nu, nu);
  Matrix row = l;
  for (int k = 0; k < nu; ++k) {
    obs.block(k * m, 0, m, nu) = row;
    row = row * s;
  }
  return obs;
}

int numerical_rank(const Matrix& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > tol) ++rank;
  }
  return rank;
}

int observability_rank(const Matrix& l, const Matrix& s) {
  return numerical_rank(observability_matrix(l, s));
}

int controllability_rank(const Matrix& q, const Matrix& r) {
  require_square(q, "Q");
  if (r.rows() != q.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "R must have nu rows");
  }
  return observability_rank(r.transpose(), q.transpose());
}

Matrix place_poles(const Matrix& s, const Matrix& l, const CVector& targets) {
  require_square(s, "S");
  require_finite(s, "S");
  require_finite(l, "L");
  const int nu = static_cast<int>(s.rows());
  const int m = static_cast<int>(l.rows());
  if (l.cols() != nu || targets.size() != nu) {
    throw Error(ErrorCode::kDimensionMismatch,
                "place_poles needs L with nu columns and nu targets");
  }
  for (int i = 0; i < nu; ++i) {
    const Complex t = targets(i);
    if (t.imag() == 0.0) continue;
    bool paired = false;
    for (int j = 0; j < nu && !paired; ++j) {
      paired = std::abs(targets(j) - std::conj(t)) <= 1e-12 * (1.0 + std::abs(t));
    }
    if (!paired) {
      throw Error(ErrorCode::kInvalidArgument,
                  "complex targets must come in conjugate pairs");
    }
  }
  if (observability_rank(l, s) < nu) {
    throw Error(ErrorCode::kNotObservable, "(L, S) is not observable");
  }
  const Vector p = real_poly(targets);

  auto try_single = [&](const Matrix& base, const Vector& w,
                        Matrix* g) -> bool {
    const Matrix lw = w.transpose() * l;
    const Matrix obs = observability_matrix(lw, base);
    if (numerical_rank(obs) < nu || condition(obs) > 1e10) return false;
    *g = ackermann(base, lw, p) * w.transpose();
    return true;
  };

  Matrix g;
  bool found = false;
  if (m == 1) {
    found = try_single(s, Vector::Ones(1), &g);
    if (!found) g = ackermann(s, l, p);
    found = true;
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  std::vector<Vector> candidates;
  if (!found) {
    for (int i = 0; i < m; ++i) candidates.push_back(Vector::Unit(m, i));
    candidates.push_back(Vector::Ones(m));
    for (int k = 0; k < 8; ++k) {
      Vector w(m);
      for (int i = 0; i < m; ++i) w(i) = normal(rng);
      candidates.push_back(w);
    }
    for (const Vector& w : candidates) {
      if (try_single(s, w, &g)) {
        found = true;
        break;
      }
    }
  }
  // Non-cyclic S: a preliminary output injection makes S - G0 L cyclic.
  for (int attempt = 0; !found && attempt < 8; ++attempt) {
    Matrix g0(nu, m);
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < m; ++j) g0(i, j) = normal(rng);
    }
    g0 *= (1.0 + s.norm()) / (1.0 + l.norm());
    const Matrix base = s - g0 * l;
    for (const Vector& w : candidates) {
      Matrix g1;
      if (try_single(base, w, &g1)) {
        g = g0 + g1;
        found = true;
        break;
      }
    }
  }
  if (!found) {
    throw Error(ErrorCode::kPlacementFailed,
                "no single-output reduction found");
  }
  const CVector got = spectrum(s - g * l).eigenvalues;
  const double err = placement_error(got, targets);
  const double scale = 1.0 + targets.cwiseAbs().maxCoeff();
  if (!(err <= 1e-6 * scale)) {
    throw Error(ErrorCode::kPlacementFailed,
                "placed spectrum misses targets by " + std::to_string(err));
  }
  return g;
}

}  // namespace h2mm
