#include "h2mm/lti_system.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "h2mm/errors.hpp"

namespace h2mm {

namespace {

void require_stable(const SchurForm& s, const char* what) {
  for (int i = 0; i < s.eigenvalues().size(); ++i) {
    if (!(s.eigenvalues()(i).real() < 0.0)) {
      throw Error(ErrorCode::kUnstableMatrix, std::string(what) +
                                                  " has an eigenvalue with "
                                                  "nonnegative real part");
    }
  }
}

double apply_convention(double normalized, H2Convention conv) {
  if (conv == H2Convention::kUnnormalized) {
    return normalized * std::sqrt(2.0 * std::numbers::pi);
  }
  return normalized;
}

void check_traces(double tw, double tm, double scale) {
  const double tol =
      1e-8 * std::max(std::abs(tw), std::abs(tm)) + 1e-13 * scale;
  if (!(std::abs(tw - tm) <= tol)) {
    throw Error(ErrorCode::kGramianMismatch,
                "trace(C W C^T) = " + std::to_string(tw) +
                    " but trace(B^T M B) = " + std::to_string(tm));
  }
}

double simpson(const std::function<double(double)>& fn, double a, double b,
               double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = fn(lm);
  const double frm = fn(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson(fn, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(fn, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

LtiSystem::LtiSystem(Matrix a, Matrix b, Matrix c)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)) {
  if (a_.rows() != a_.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "A must be square");
  }
  if (b_.rows() != a_.rows() || c_.cols() != a_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "B must have n rows and C must have n columns");
  }
  require_finite(a_, "A");
  require_finite(b_, "B");
  require_finite(c_, "C");
}

TransferSample eval_transfer(const LtiSystem& sys, Complex s) {
  const int n = sys.n();
  TransferSample out{s, CMatrix::Zero(sys.p(), sys.m())};
  if (n == 0) return out;
  CMatrix res = -sys.A().cast<Complex>();
  res.diagonal().array() += s;
  Eigen::PartialPivLU<CMatrix> lu(res);
  const double rc = lu.rcond();
  if (!(rc > 1e-14)) {
    throw Error(ErrorCode::kResolventSingular,
                "sI - A is singular or too ill-conditioned");
  }
  out.value = sys.C().cast<Complex>() * lu.solve(sys.B().cast<Complex>());
  return out;
}

Gramians gramians(const LtiSystem& sys) {
  Gramians g;
  g.W = solve_lyapunov_ctrl(sys.A(), sys.B() * sys.B().transpose());
  g.M = solve_lyapunov_obs(sys.A(), sys.C().transpose() * sys.C());
  return g;
}

double h2_norm(const LtiSystem& sys, H2Convention conv) {
  const Gramians g = gramians(sys);
  const double tw = (sys.C() * g.W * sys.C().transpose()).trace();
  const double tm = (sys.B().transpose() * g.M * sys.B()).trace();
  const double scale = sys.C().squaredNorm() * g.W.norm() +
                       sys.B().squaredNorm() * g.M.norm();
  check_traces(tw, tm, scale);
  return apply_convention(std::sqrt(std::max(tw, 0.0)), conv);
}

double h2_norm_quadrature(const LtiSystem& sys, H2Convention conv) {
  const SpectrumReport rep = spectrum(sys.A());
  const double rho =
      rep.eigenvalues.size() ? rep.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  return h2_norm_quadrature(sys, 1e4 * (1.0 + rho), 200, conv);
}

double h2_norm_quadrature(const LtiSystem& sys, double omega_max, int samples,
                          H2Convention conv) {
  if (samples < 100) {
    throw Error(ErrorCode::kInvalidArgument, "quadrature needs >= 100 samples");
  }
  const SpectrumReport rep = spectrum(sys.A());
  if (!rep.is_stable) {
    throw Error(ErrorCode::kUnstableMatrix, "quadrature needs a stable A");
  }
  if (sys.n() == 0 || sys.B().norm() == 0.0 || sys.C().norm() == 0.0) {
    return 0.0;
  }
  auto fn = [&](double w) {
    return eval_transfer(sys, Complex(0.0, w)).value.squaredNorm();
  };
  const double lam_min = rep.eigenvalues.cwiseAbs().minCoeff();
  const double w_lo = std::min(1e-3 * lam_min, 1e-3 * omega_max);
  std::vector<double> grid{0.0};
  const double ratio = std::log(omega_max / w_lo) / (samples - 1);
  for (int k = 0; k < samples; ++k) grid.push_back(w_lo * std::exp(ratio * k));
  grid.back() = omega_max;

  double total = 0.0;
  double fa = fn(grid[0]);
  for (size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k];
    const double b = grid[k + 1];
    const double fb = fn(b);
    const double fm = fn(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = 1e-10 * std::abs(whole) + 1e-300;
    total += simpson(fn, a, b, fa, fm, fb, whole, tol, 40);
    fa = fb;
  }
  const Matrix cb = sys.C() * sys.B();
  total += cb.squaredNorm() / omega_max;
  // Even integrand: the full line is twice the half line.
  const double normalized = std::sqrt(2.0 * total / (2.0 * std::numbers::pi));
  return apply_convention(normalized, conv);
}

ErrorRealization build_error_system(const LtiSystem& sys,
                                    const ReducedModel& model) {
  const int n = sys.n();
  const int nu = model.order();
  if (model.F.cols() != nu || model.G.rows() != nu ||
      model.H.cols() != nu || (nu > 0 && (model.G.cols() != sys.m() ||
                                          model.H.rows() != sys.p()))) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model dimensions do not match the system");
  }
  ErrorRealization e;
  e.n = n;
  e.nu = nu;
  e.Ae = Matrix::Zero(n + nu, n + nu);
  e.Ae.topLeftCorner(n, n) = sys.A();
  e.Ae.bottomRightCorner(nu, nu) = model.F;
  e.Be = Matrix::Zero(n + nu, sys.m());
  e.Be.topRows(n) = sys.B();
  if (nu > 0) e.Be.bottomRows(nu) = model.G;
  e.Ce = Matrix::Zero(sys.p(), n + nu);
  e.Ce.leftCols(n) = sys.C();
  if (nu > 0) e.Ce.rightCols(nu) = -model.H;
  if (model.right) e.Pi = model.right->Pi;
  return e;
}

ErrorGramianSolver::ErrorGramianSolver(const LtiSystem& sys) : sys_(sys) {
  a_ = std::make_shared<SchurForm>(sys.A());
  require_stable(*a_, "A");
  at_ = std::make_shared<SchurForm>(Matrix(sys.A().transpose()));
  minus_a_ = std::make_shared<SchurForm>(Matrix(-sys.A()));
  minus_at_ = std::make_shared<SchurForm>(Matrix(-sys.A().transpose()));
  w11_ = solve_sylvester(*a_, *minus_at_, sys.B() * sys.B().transpose());
  m11_ = solve_sylvester(*at_, *minus_a_, sys.C().transpose() * sys.C());
}

ErrorGramianSolver::Blocks ErrorGramianSolver::solve(const Matrix& f,
                                                     const Matrix& g,
                                                     const Matrix& h) const {
  const Matrix& b = sys_.B();
  const Matrix& c = sys_.C();
  const int nu = static_cast<int>(f.rows());
  if (f.cols() != nu || g.rows() != nu || h.cols() != nu ||
      (nu > 0 && (g.cols() != b.cols() || h.rows() != c.rows()))) {
    throw Error(ErrorCode::kDimensionMismatch, "reduced blocks mismatch");
  }
  Blocks out;
  const double t11w = (c * w11_ * c.transpose()).trace();
  const double t11m = (b.transpose() * m11_ * b).trace();
  if (nu == 0) {
    out.W12 = Matrix::Zero(sys_.n(), 0);
    out.M12 = Matrix::Zero(sys_.n(), 0);
    out.W22 = Matrix::Zero(0, 0);
    out.M22 = Matrix::Zero(0, 0);
    out.trace_w = t11w;
    out.trace_m = t11m;
    return out;
  }
  const SchurForm sf(f);
  require_stable(sf, "F");
  const SchurForm sft(Matrix(f.transpose()));
  const SchurForm smf(Matrix(-f));
  const SchurForm smft(Matrix(-f.transpose()));
  out.W12 = solve_sylvester(*a_, smft, b * g.transpose());
  out.W22 = solve_sylvester(sf, smft, g * g.transpose());
  out.M12 = solve_sylvester(*at_, smf, -(c.transpose() * h));
  out.M22 = solve_sylvester(sft, smf, h.transpose() * h);
  out.trace_w = t11w - 2.0 * (c * out.W12 * h.transpose()).trace() +
                (h * out.W22 * h.transpose()).trace();
  out.trace_m = t11m + 2.0 * (b.transpose() * out.M12 * g).trace() +
                (g.transpose() * out.M22 * g).trace();
  return out;
}

ErrorGramians ErrorGramianSolver::assemble(const Blocks& blk) const {
  const int n = sys_.n();
  const int nu = static_cast<int>(blk.W22.rows());
  ErrorGramians eg;
  eg.n = n;
  eg.nu = nu;
  eg.W.resize(n + nu, n + nu);
  eg.M.resize(n + nu, n + nu);
  eg.W.topLeftCorner(n, n) = 0.5 * (w11_ + w11_.transpose());
  eg.M.topLeftCorner(n, n) = 0.5 * (m11_ + m11_.transpose());
  if (nu > 0) {
    eg.W.topRightCorner(n, nu) = blk.W12;
    eg.W.bottomLeftCorner(nu, n) = blk.W12.transpose();
    eg.W.bottomRightCorner(nu, nu) = 0.5 * (blk.W22 + blk.W22.transpose());
    eg.M.topRightCorner(n, nu) = blk.M12;
    eg.M.bottomLeftCorner(nu, n) = blk.M12.transpose();
    eg.M.bottomRightCorner(nu, nu) = 0.5 * (blk.M22 + blk.M22.transpose());
  }
  return eg;
}

ErrorGramians error_gramians(const ErrorRealization& err) {
  const LtiSystem sys(err.A(), err.B(), err.C());
  const ErrorGramianSolver solver(sys);
  return solver.assemble(solver.solve(err.F(), err.G(), err.H()));
}

double h2_norm(const ErrorRealization& err, H2Convention conv) {
  const LtiSystem sys(err.A(), err.B(), err.C());
  const ErrorGramianSolver solver(sys);
  const ErrorGramianSolver::Blocks blk =
      solver.solve(err.F(), err.G(), err.H());
  const ErrorGramians eg = solver.assemble(blk);
  const double scale =
      err.Ce.squaredNorm() * eg.W.norm() + err.Be.squaredNorm() * eg.M.norm();
  check_traces(blk.trace_w, blk.trace_m, scale);
  return apply_convention(std::sqrt(std::max(blk.trace_w, 0.0)), conv);
}

}  // namespace h2mm
