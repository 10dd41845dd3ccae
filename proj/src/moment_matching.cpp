#include "h2mm/moment_matching.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "h2mm/errors.hpp"

namespace h2mm {

namespace {

using ErrorFn = std::function<CMatrix(Complex)>;

bool is_real_point(Complex s) {
  return std::abs(s.imag()) <= 1e-12 * (1.0 + std::abs(s));
}

std::vector<int> block_starts(const std::vector<int>& mult) {
  std::vector<int> start{0};
  for (int j : mult) start.push_back(start.back() + j);
  return start;
}

void check_point_list(const CVector& points, const std::vector<int>& mult,
                      const CMatrix& directions) {
  if (static_cast<int>(mult.size()) != points.size() ||
      directions.cols() != points.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "need one multiplicity and one direction per point");
  }
  for (int j : mult) {
    if (j < 1) {
      throw Error(ErrorCode::kInvalidArgument, "multiplicities must be >= 1");
    }
  }
  for (int i = 0; i < points.size(); ++i) {
    for (int j = i + 1; j < points.size(); ++j) {
      if (std::abs(points(i) - points(j)) <= 1e-12 * (1.0 + std::abs(points(i)))) {
        throw Error(ErrorCode::kInvalidArgument,
                    "points must be distinct (use multiplicities)");
      }
    }
  }
}

// Complex-to-real change of basis J with Pi_complex = Pi_real * J.
CMatrix realification(const CVector& points, const std::vector<int>& mult,
                      const CMatrix& directions) {
  const std::vector<int> start = block_starts(mult);
  const int nu = start.back();
  CMatrix jm = CMatrix::Zero(nu, nu);
  std::vector<bool> done(points.size(), false);
  const Complex i1(0.0, 1.0);
  for (int a = 0; a < points.size(); ++a) {
    if (done[a]) continue;
    const Complex s = points(a);
    if (is_real_point(s)) {
      if (directions.col(a).imag().norm() >
          1e-12 * (1.0 + directions.col(a).norm())) {
        throw Error(ErrorCode::kInvalidArgument,
                    "real points need real tangent directions");
      }
      for (int k = 0; k < mult[a]; ++k) jm(start[a] + k, start[a] + k) = 1.0;
      done[a] = true;
      continue;
    }
    int b = -1;
    for (int c = 0; c < points.size(); ++c) {
      if (c == a || done[c]) continue;
      const bool conj_point =
          std::abs(points(c) - std::conj(s)) <= 1e-10 * (1.0 + std::abs(s));
      const bool conj_dir =
          (directions.col(c) - directions.col(a).conjugate()).norm() <=
          1e-10 * (1.0 + directions.col(a).norm());
      if (conj_point && conj_dir && mult[c] == mult[a]) {
        b = c;
        break;
      }
    }
    if (b < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "complex points must come in conjugate pairs with "
                  "conjugate directions");
    }
    // The member with positive imaginary part supplies the real part column.
    int x = a, y = b;
    if (s.imag() < 0.0) std::swap(x, y);
    for (int k = 0; k < mult[a]; ++k) {
      const int px = start[x] + k;
      const int py = start[y] + k;
      jm(px, px) = 1.0;
      jm(px, py) = 1.0;
      jm(py, px) = i1;
      jm(py, py) = -i1;
    }
    done[a] = done[b] = true;
  }
  return jm;
}

void complex_generator(const CVector& points, const std::vector<int>& mult,
                       const CMatrix& directions, CMatrix* s, CMatrix* l) {
  const std::vector<int> start = block_starts(mult);
  const int nu = start.back();
  *s = CMatrix::Zero(nu, nu);
  *l = CMatrix::Zero(directions.rows(), nu);
  for (int i = 0; i < points.size(); ++i) {
    for (int k = 0; k < mult[i]; ++k) {
      (*s)(start[i] + k, start[i] + k) = points(i);
      if (k > 0) (*s)(start[i] + k - 1, start[i] + k) = 1.0;
    }
    l->col(start[i]) = directions.col(i);
  }
}

Matrix take_real(const CMatrix& m, const char* what) {
  if (m.imag().norm() > 1e-8 * (1.0 + m.norm())) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " did not realify");
  }
  return m.real();
}

void check_points_off_spectrum(const CVector& points, const Matrix& a,
                               const char* which) {
  const CVector eig = spectrum(a).eigenvalues;
  const double tol = 1e-8 * (1.0 + a.norm());
  for (int i = 0; i < points.size(); ++i) {
    for (int j = 0; j < eig.size(); ++j) {
      if (std::abs(points(i) - eig(j)) <= tol) {
        throw Error(ErrorCode::kPointOnSpectrum,
                    std::string("interpolation point lies on the spectrum of ") +
                        which);
      }
    }
  }
}

KrylovBasis krylov_impl(const Matrix& a, const Matrix& b, const CVector& points,
                        const std::vector<int>& mult,
                        const CMatrix& directions, bool allow_wide = false) {
  check_point_list(points, mult, directions);
  if (directions.rows() != b.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "tangent directions must have one entry per input");
  }
  check_points_off_spectrum(points, a, "A");
  const int n = static_cast<int>(a.rows());
  const std::vector<int> start = block_starts(mult);
  const int nu = start.back();
  // Higher-order moment columns may outnumber the states; such a basis is
  // still a valid Sylvester solution, only not a projection.
  if (nu > n && !allow_wide) {
    throw Error(ErrorCode::kRankDeficient, "more columns than states");
  }
  CMatrix vc(n, nu);
  Vector signs(nu);
  for (int i = 0; i < points.size(); ++i) {
    CMatrix res = -a.cast<Complex>();
    res.diagonal().array() += points(i);
    Eigen::PartialPivLU<CMatrix> lu(res);
    if (!(lu.rcond() > 1e-14)) {
      throw Error(ErrorCode::kPointOnSpectrum, "resolvent is singular");
    }
    CVector v = lu.solve(b.cast<Complex>() * directions.col(i));
    for (int k = 0; k < mult[i]; ++k) {
      vc.col(start[i] + k) = v;
      signs(start[i] + k) = (k % 2 == 0) ? 1.0 : -1.0;
      if (k + 1 < mult[i]) v = lu.solve(v);
    }
  }
  KrylovBasis kb;
  kb.points = points;
  kb.multiplicities = mult;
  kb.directions = directions;
  kb.realification = realification(points, mult, directions);
  const CMatrix jinv = kb.realification.inverse();
  kb.basis = take_real(vc * jinv, "Krylov basis");
  kb.T = signs.asDiagonal();
  CMatrix sc, lc;
  complex_generator(points, mult, directions, &sc, &lc);
  kb.S = take_real(kb.realification * sc * jinv, "signal matrix");
  kb.L = take_real(lc * jinv, "tangent matrix");

  if (nu > n) return kb;
  Eigen::JacobiSVD<Matrix> svd(kb.basis);
  const Vector& sv = svd.singularValues();
  if (numerical_rank(kb.basis) < nu || sv(nu - 1) == 0.0) {
    throw Error(ErrorCode::kRankDeficient, "Krylov basis loses rank");
  }
  if (sv(0) / sv(nu - 1) > 1e12) {
    throw Error(ErrorCode::kClusteredPoints,
                "Krylov basis condition exceeds 1e12");
  }
  return kb;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

double binomial(int n, int k) {
  return factorial(n) / (factorial(k) * factorial(n - k));
}

// Central difference of order q, step scaled to the point.
CMatrix derivative(const ErrorFn& e, Complex s, int q) {
  if (q == 0) return e(s);
  const double scale = 1.0 + std::abs(s);
  const double h =
      scale * (q == 1 ? 1e-6
                      : std::pow(std::numeric_limits<double>::epsilon(),
                                 1.0 / (q + 2)));
  CMatrix acc;
  for (int i = 0; i <= q; ++i) {
    const CMatrix v = e(s + Complex((0.5 * q - i) * h, 0.0));
    const double w = ((i % 2) ? -1.0 : 1.0) * binomial(q, i);
    if (i == 0) {
      acc = w * v;
    } else {
      acc += w * v;
    }
  }
  return acc / std::pow(h, q);
}

InterpolationReport tangential_check(const ErrorFn& e, const Matrix& s,
                                     const Matrix& l, double tol) {
  InterpolationReport rep;
  const int nu = static_cast<int>(s.rows());
  if (nu == 0) {
    rep.passed = true;
    return rep;
  }
  Eigen::EigenSolver<Matrix> es(s, false);
  CVector pts;
  std::vector<int> mult;
  cluster_eigenvalues(es.eigenvalues(), &pts, &mult);
  const CMatrix sc = s.cast<Complex>();
  const CMatrix lc = l.cast<Complex>();
  const double null_tol = 1e-6 * (1.0 + s.norm());
  for (int c = 0; c < pts.size(); ++c) {
    const Complex pt = pts(c);
    CMatrix nmat = sc;
    nmat.diagonal().array() -= pt;
    Eigen::JacobiSVD<CMatrix> svd(nmat, Eigen::ComputeFullU |
                                            Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    int dim = 0;
    for (int i = 0; i < sv.size(); ++i) {
      if (sv(i) <= null_tol) ++dim;
    }
    const int k = mult[c];
    if (dim >= k) {
      for (int j = 0; j < k; ++j) {
        CVector dir = lc * svd.matrixV().col(nu - 1 - j);
        const double dn = dir.norm();
        if (dn > 0.0) dir /= dn;
        const double r = (e(pt) * dir).norm();
        rep.entries.push_back({pt, 0, r});
      }
    } else if (dim == 1) {
      svd.setThreshold(null_tol / std::max(sv(0), null_tol));
      std::vector<CVector> chain{svd.matrixV().col(nu - 1)};
      for (int q = 1; q < k; ++q) chain.push_back(svd.solve(chain.back()));
      const double dn = (lc * chain[0]).norm();
      const double scale = dn > 0.0 ? 1.0 / dn : 1.0;
      std::vector<CVector> dirs;
      for (const CVector& x : chain) dirs.push_back(scale * (lc * x));
      std::vector<CMatrix> ders;
      for (int q = 0; q < k; ++q) ders.push_back(derivative(e, pt, q));
      for (int q = 1; q <= k; ++q) {
        CVector acc = CVector::Zero(ders[0].rows());
        for (int i = 1; i <= q; ++i) {
          acc += ders[q - i] * dirs[i - 1] / factorial(q - i);
        }
        rep.entries.push_back({pt, q - 1, acc.norm()});
      }
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "unsupported Jordan structure in the signal generator");
    }
  }
  for (const auto& en : rep.entries) {
    rep.max_residual = std::max(rep.max_residual, en.residual);
  }
  rep.passed = rep.max_residual <= tol;
  return rep;
}

}  // namespace

void cluster_eigenvalues(const CVector& eig, CVector* points,
                         std::vector<int>* mult) {
  std::vector<Complex> sums;
  mult->clear();
  std::vector<Complex> reps;
  for (int i = 0; i < eig.size(); ++i) {
    bool placed = false;
    for (size_t c = 0; c < reps.size(); ++c) {
      if (std::abs(eig(i) - reps[c]) <= 1e-6 * (1.0 + std::abs(reps[c]))) {
        sums[c] += eig(i);
        ++(*mult)[c];
        reps[c] = sums[c] / static_cast<double>((*mult)[c]);
        placed = true;
        break;
      }
    }
    if (!placed) {
      reps.push_back(eig(i));
      sums.push_back(eig(i));
      mult->push_back(1);
    }
  }
  points->resize(static_cast<int>(reps.size()));
  for (size_t c = 0; c < reps.size(); ++c) (*points)(c) = reps[c];
}

void group_points(const CVector& raw, CVector* points, std::vector<int>* mult) {
  std::vector<Complex> uniq;
  mult->clear();
  for (int i = 0; i < raw.size(); ++i) {
    bool found = false;
    for (size_t u = 0; u < uniq.size(); ++u) {
      if (raw(i) == uniq[u]) {
        ++(*mult)[u];
        found = true;
        break;
      }
    }
    if (!found) {
      uniq.push_back(raw(i));
      mult->push_back(1);
    }
  }
  points->resize(static_cast<int>(uniq.size()));
  for (size_t u = 0; u < uniq.size(); ++u) (*points)(u) = uniq[u];
}

InterpolationData interpolation_from_points(const CVector& points,
                                            const std::vector<int>& mult,
                                            const CMatrix& directions) {
  check_point_list(points, mult, directions);
  const CMatrix jm = realification(points, mult, directions);
  const CMatrix jinv = jm.inverse();
  CMatrix sc, lc;
  complex_generator(points, mult, directions, &sc, &lc);
  InterpolationData d;
  d.S = take_real(jm * sc * jinv, "signal matrix");
  d.L = take_real(lc * jinv, "tangent matrix");
  return d;
}

KrylovBasis krylov_right(const LtiSystem& sys, const CVector& points,
                         const CMatrix& directions) {
  return krylov_impl(sys.A(), sys.B(), points,
                     std::vector<int>(points.size(), 1), directions);
}

KrylovBasis krylov_right_higher(const LtiSystem& sys, const CVector& points,
                                const std::vector<int>& mult,
                                const CMatrix& directions) {
  return krylov_impl(sys.A(), sys.B(), points, mult, directions, true);
}

KrylovBasis krylov_left(const LtiSystem& sys, const CVector& points,
                        const CMatrix& directions) {
  if (directions.rows() != points.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "left directions must be one row per point");
  }
  return krylov_impl(sys.A().transpose(), sys.C().transpose(), points,
                     std::vector<int>(points.size(), 1),
                     directions.transpose());
}

MomentSet moments_right(const LtiSystem& sys, const InterpolationData& data) {
  const int nu = static_cast<int>(data.S.rows());
  if (data.S.cols() != nu || data.L.cols() != nu ||
      data.L.rows() != sys.m()) {
    throw Error(ErrorCode::kDimensionMismatch, "S must be nu x nu, L m x nu");
  }
  if (observability_rank(data.L, data.S) < nu) {
    throw Error(ErrorCode::kNotObservable, "(L, S) is not observable");
  }
  MomentSet ms;
  ms.kind = MomentKind::kRight;
  ms.projection = solve_sylvester(sys.A(), data.S, sys.B() * data.L);
  ms.value = sys.C() * ms.projection;
  cluster_eigenvalues(spectrum(data.S).eigenvalues, &ms.points,
                      &ms.multiplicities);
  return ms;
}

MomentSet moments_left(const LtiSystem& sys,
                       const DualInterpolationData& data) {
  const int nu = static_cast<int>(data.Q.rows());
  if (data.Q.cols() != nu || data.R.rows() != nu ||
      data.R.cols() != sys.p()) {
    throw Error(ErrorCode::kDimensionMismatch, "Q must be nu x nu, R nu x p");
  }
  if (controllability_rank(data.Q, data.R) < nu) {
    throw Error(ErrorCode::kNotControllable, "(Q, R) is not controllable");
  }
  MomentSet ms;
  ms.kind = MomentKind::kLeft;
  const Matrix x = solve_sylvester(Matrix(sys.A().transpose()),
                                   Matrix(data.Q.transpose()),
                                   sys.C().transpose() * data.R.transpose());
  ms.projection = x.transpose();
  ms.value = ms.projection * sys.B();
  cluster_eigenvalues(spectrum(data.Q).eigenvalues, &ms.points,
                      &ms.multiplicities);
  return ms;
}

ReducedModel assemble_family_right(const InterpolationData& data,
                                   const Matrix& g, const MomentSet& moments) {
  const int nu = static_cast<int>(data.S.rows());
  if (g.rows() != nu || g.cols() != data.L.rows() ||
      moments.value.cols() != nu || moments.kind != MomentKind::kRight) {
    throw Error(ErrorCode::kDimensionMismatch,
                "G must be nu x m and moments must be right moments");
  }
  ReducedModel rm;
  rm.F = data.S - g * data.L;
  rm.G = g;
  rm.H = moments.value;
  rm.right = RightProvenance{data.S, data.L, moments.projection,
                             Matrix::Identity(nu, nu)};
  const SpectrumReport fs = spectrum(rm.F);
  rm.stable = fs.is_stable;
  const double tol = 1e-8 * std::max(rm.F.norm(), data.S.norm());
  rm.spectra_disjoint =
      spectral_gap(fs.eigenvalues, spectrum(data.S).eigenvalues) > tol;
  return rm;
}

ReducedModel assemble_family_left(const DualInterpolationData& data,
                                  const Matrix& h, const MomentSet& moments) {
  const int nu = static_cast<int>(data.Q.rows());
  if (h.cols() != nu || h.rows() != data.R.cols() ||
      moments.value.rows() != nu || moments.kind != MomentKind::kLeft) {
    throw Error(ErrorCode::kDimensionMismatch,
                "H must be p x nu and moments must be left moments");
  }
  ReducedModel rm;
  rm.F = data.Q - data.R * h;
  rm.G = moments.value;
  rm.H = h;
  rm.left = LeftProvenance{data.Q, data.R, moments.projection};
  const SpectrumReport fs = spectrum(rm.F);
  rm.stable = fs.is_stable;
  const double tol = 1e-8 * std::max(rm.F.norm(), data.Q.norm());
  rm.spectra_disjoint =
      spectral_gap(fs.eigenvalues, spectrum(data.Q).eigenvalues) > tol;
  return rm;
}

InterpolationReport check_interpolation(const LtiSystem& sys,
                                        const ReducedModel& model,
                                        const InterpolationData& data,
                                        double tol) {
  const LtiSystem red(model.F, model.G, model.H);
  const CVector pts = spectrum(data.S).eigenvalues;
  check_points_off_spectrum(pts, sys.A(), "A");
  check_points_off_spectrum(pts, model.F, "F");
  const ErrorFn e = [&](Complex s) -> CMatrix {
    return eval_transfer(sys, s).value - eval_transfer(red, s).value;
  };
  try {
    return tangential_check(e, data.S, data.L, tol);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::kResolventSingular) {
      throw Error(ErrorCode::kPointOnSpectrum, err.what());
    }
    throw;
  }
}

InterpolationReport check_interpolation_left(const LtiSystem& sys,
                                             const ReducedModel& model,
                                             const DualInterpolationData& data,
                                             double tol) {
  const LtiSystem red(model.F, model.G, model.H);
  const CVector pts = spectrum(data.Q).eigenvalues;
  check_points_off_spectrum(pts, sys.A(), "A");
  check_points_off_spectrum(pts, model.F, "F");
  const ErrorFn e = [&](Complex s) -> CMatrix {
    return (eval_transfer(sys, s).value - eval_transfer(red, s).value)
        .transpose();
  };
  try {
    return tangential_check(e, data.Q.transpose(), data.R.transpose(), tol);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::kResolventSingular) {
      throw Error(ErrorCode::kPointOnSpectrum, err.what());
    }
    throw;
  }
}

}  // namespace h2mm
