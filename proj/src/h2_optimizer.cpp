#include "h2mm/h2_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>

#include "h2mm/errors.hpp"

namespace h2mm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point {
  DecisionVars vars;
  Evaluation ev;
};

bool recoverable(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kInfeasiblePoint:
    case ErrorCode::kUnstableMatrix:
    case ErrorCode::kSpectraOverlap:
    case ErrorCode::kNonFinite:
      return true;
    default:
      return false;
  }
}

bool try_evaluate(const DecisionVars& v, const FixedStructure& fs,
                  Evaluation* out) {
  if (!v.S.allFinite() || !v.G.allFinite() || !is_feasible(v, fs)) {
    return false;
  }
  try {
    *out = evaluate(v, fs, true);
  } catch (const Error& e) {
    if (recoverable(e)) return false;
    throw;
  }
  return std::isfinite(out->f) && out->gradient.allFinite();
}

double abscissa(const DecisionVars& v, const FixedStructure& fs) {
  return spectrum(v.XL(fs)).spectral_abscissa;
}

// Stationarity block P calL^T + Q calE^T (P1) or -P L^T + Q (P2).
Matrix stationarity(const Matrix& w12, const Matrix& w22, const Matrix& m12,
                    const Matrix& m22, const DecisionVars& v,
                    const FixedStructure& fs) {
  const Matrix& b = fs.system().B();
  const Matrix p = m12.transpose() * w12 + m22 * w22;
  const Matrix q = m12.transpose() * b + m22 * v.G;
  const Matrix gg = -p * fs.L().transpose() + q;
  if (v.variant == Problem::kP2) return gg;
  Matrix out(fs.nu(), fs.nu() + fs.m());
  out << p, gg;
  return out;
}

struct ErrorMatrices {
  Matrix ae, be, ce;
};

ErrorMatrices error_matrices(const DecisionVars& v, const FixedStructure& fs,
                             const Matrix& c_v) {
  const LtiSystem& sys = fs.system();
  const int n = sys.n();
  const int nu = fs.nu();
  ErrorMatrices e;
  e.ae = Matrix::Zero(n + nu, n + nu);
  e.ae.topLeftCorner(n, n) = sys.A();
  e.ae.bottomRightCorner(nu, nu) = v.XL(fs);
  e.be.resize(n + nu, sys.m());
  e.be << sys.B(), v.G;
  e.ce.resize(sys.p(), n + nu);
  e.ce << sys.C(), -c_v;
  return e;
}

IterateReport make_report(int k, double f, double gn, double kkt, double absc,
                          bool accepted, double step) {
  IterateReport r;
  r.iteration = k;
  r.f = f;
  r.gradient_norm = gn;
  r.kkt_residual = kkt;
  r.spectral_abscissa = absc;
  r.accepted = accepted;
  r.step = step;
  return r;
}

double inner(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace

const char* to_string(Status s) {
  switch (s) {
    case Status::kConverged: return "converged";
    case Status::kMaxIterations: return "max_iterations";
    case Status::kLineSearchStalled: return "line_search_stalled";
    case Status::kDiverged: return "diverged";
  }
  return "unknown";
}

double KktResidual::max() const { return std::max({r_m, r_w, r_x}); }

FixedStructure FixedStructure::problem1(const LtiSystem& sys, const Matrix& l,
                                        const Matrix& c_v, CvMode mode) {
  const int nu = static_cast<int>(l.cols());
  const int m = static_cast<int>(l.rows());
  if (m != sys.m() || c_v.rows() != sys.p() || c_v.cols() != nu) {
    throw Error(ErrorCode::kDimensionMismatch,
                "L must be m x nu and C_V must be p x nu");
  }
  require_finite(c_v, "C_V");
  FixedStructure fs;
  fs.problem_ = Problem::kP1;
  fs.mode_ = mode;
  fs.solver_ = std::make_shared<const ErrorGramianSolver>(sys);
  fs.l_ = l;
  fs.call_.resize(nu + m, nu);
  fs.call_ << Matrix::Identity(nu, nu), -l;
  fs.cale_.resize(nu + m, m);
  fs.cale_ << Matrix::Zero(nu, m), Matrix::Identity(m, m);
  fs.c_v_ = c_v;
  return fs;
}

FixedStructure FixedStructure::problem2(const LtiSystem& sys, const Matrix& s,
                                        const Matrix& l, const Matrix& c_v) {
  if (s.rows() != l.cols() || s.cols() != l.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "S must be nu x nu");
  }
  FixedStructure fs = problem1(sys, l, c_v, CvMode::kFrozen);
  fs.problem_ = Problem::kP2;
  fs.s_fixed_ = s;
  return fs;
}

FixedStructure FixedStructure::with_mode(CvMode mode) const {
  FixedStructure fs = *this;
  if (problem_ == Problem::kP1) fs.mode_ = mode;
  return fs;
}

Matrix DecisionVars::unknown() const {
  if (variant == Problem::kP2) return G;
  return X();
}

void DecisionVars::set_unknown(const Matrix& x) {
  if (variant == Problem::kP2) {
    G = x;
    return;
  }
  const int nu = static_cast<int>(S.rows());
  S = x.leftCols(nu);
  G = x.rightCols(x.cols() - nu);
}

Matrix DecisionVars::X() const {
  Matrix x(S.rows(), S.cols() + G.cols());
  x << S, G;
  return x;
}

DecisionVars make_vars_p1(const Matrix& s, const Matrix& g) {
  if (s.rows() != s.cols() || g.rows() != s.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "S nu x nu and G nu x m");
  }
  return DecisionVars{Problem::kP1, s, g};
}

DecisionVars make_vars_p2(const FixedStructure& fs, const Matrix& g) {
  if (fs.problem() != Problem::kP2 || g.rows() != fs.nu() ||
      g.cols() != fs.m()) {
    throw Error(ErrorCode::kDimensionMismatch, "G must be nu x m");
  }
  return DecisionVars{Problem::kP2, fs.S_fixed(), g};
}

bool is_feasible(const DecisionVars& vars, const FixedStructure& fs) {
  return spectrum(vars.XL(fs)).is_stable;
}

Matrix output_map(const DecisionVars& vars, const FixedStructure& fs) {
  if (fs.problem() == Problem::kP2 || fs.mode() == CvMode::kFrozen) {
    return fs.C_V();
  }
  const LtiSystem& sys = fs.system();
  const Matrix pi = solve_sylvester(fs.solver().schur_a(), SchurForm(vars.S),
                                    sys.B() * fs.L());
  return sys.C() * pi;
}

ReducedModel model_at(const DecisionVars& vars, const FixedStructure& fs) {
  ReducedModel rm;
  rm.F = vars.XL(fs);
  rm.G = vars.G;
  rm.H = output_map(vars, fs);
  const LtiSystem& sys = fs.system();
  Matrix pi;
  if (fs.mode() == CvMode::kRefresh || fs.problem() == Problem::kP2) {
    try {
      pi = solve_sylvester(sys.A(), vars.S, sys.B() * fs.L());
    } catch (const Error&) {
      pi.resize(0, 0);
    }
  }
  rm.right = RightProvenance{vars.S, fs.L(), pi,
                             Matrix::Identity(fs.nu(), fs.nu())};
  const SpectrumReport sf = spectrum(rm.F);
  rm.stable = sf.is_stable;
  rm.spectra_disjoint =
      spectral_gap(sf.eigenvalues, spectrum(vars.S).eigenvalues) >
      1e-8 * std::max(rm.F.norm(), vars.S.norm());
  return rm;
}

Evaluation evaluate(const DecisionVars& vars, const FixedStructure& fs,
                    bool with_gradient) {
  if (vars.S.rows() != fs.nu() || vars.G.rows() != fs.nu() ||
      vars.G.cols() != fs.m()) {
    throw Error(ErrorCode::kDimensionMismatch, "decision variable shape");
  }
  if (!is_feasible(vars, fs)) {
    throw Error(ErrorCode::kInfeasiblePoint, "S - G L is not stable");
  }
  const LtiSystem& sys = fs.system();
  const bool refresh =
      fs.problem() == Problem::kP1 && fs.mode() == CvMode::kRefresh;
  Evaluation ev;
  Matrix pi;
  std::unique_ptr<SchurForm> schur_s;
  if (refresh) {
    schur_s = std::make_unique<SchurForm>(vars.S);
    pi = solve_sylvester(fs.solver().schur_a(), *schur_s, sys.B() * fs.L());
    ev.c_v = sys.C() * pi;
  } else {
    ev.c_v = fs.C_V();
  }
  const ErrorGramianSolver::Blocks blk =
      fs.solver().solve(vars.XL(fs), vars.G, ev.c_v);
  ev.f = blk.trace_m;
  ev.gramians = fs.solver().assemble(blk);
  if (!with_gradient) return ev;
  const ErrorGramians& eg = ev.gramians;
  ev.gradient =
      2.0 * stationarity(eg.W12(), eg.W22(), eg.M12(), eg.M22(), vars, fs);
  if (refresh) {
    // d f / d C_V, pulled back through A Pi + B L = Pi S.
    const Matrix gamma = -2.0 * (sys.C() * eg.W12() - ev.c_v * eg.W22());
    const Matrix lambda = sys.C().transpose() * gamma;
    const Matrix psi = solve_sylvester(
        fs.solver().schur_at(), SchurForm(Matrix(vars.S.transpose())), -lambda);
    ev.gradient.leftCols(fs.nu()) += pi.transpose() * psi;
  }
  return ev;
}

double objective_f(const DecisionVars& vars, const FixedStructure& fs) {
  return evaluate(vars, fs, false).f;
}

Matrix gradient_f(const DecisionVars& vars, const FixedStructure& fs) {
  return evaluate(vars, fs, true).gradient;
}

KktResidual kkt_residual(const Matrix& w, const Matrix& m,
                         const DecisionVars& vars, const FixedStructure& fs) {
  const int n = fs.system().n();
  const int nu = fs.nu();
  if (w.rows() != n + nu || w.cols() != n + nu || m.rows() != n + nu ||
      m.cols() != n + nu) {
    throw Error(ErrorCode::kDimensionMismatch, "W and M must be (n+nu)^2");
  }
  const ErrorMatrices e = error_matrices(vars, fs, output_map(vars, fs));
  KktResidual r;
  r.r_m = (e.ae.transpose() * m + m * e.ae + e.ce.transpose() * e.ce).norm();
  r.r_w = (e.ae * w + w * e.ae.transpose() + e.be * e.be.transpose()).norm();
  r.r_x = stationarity(w.topRightCorner(n, nu), w.bottomRightCorner(nu, nu),
                       m.topRightCorner(n, nu), m.bottomRightCorner(nu, nu),
                       vars, fs)
              .norm();
  return r;
}

DecisionVars project_positive(const DecisionVars& vars,
                              const FixedStructure& fs) {
  DecisionVars out = vars;
  out.G = out.G.cwiseMax(0.0);
  if (out.variant == Problem::kP2) return out;
  const Matrix gl = out.G * fs.L();
  for (int i = 0; i < out.S.rows(); ++i) {
    for (int j = 0; j < out.S.cols(); ++j) {
      if (i != j) out.S(i, j) = std::max(out.S(i, j), gl(i, j));
    }
  }
  return out;
}

OptimizeResult run_pm(const DecisionVars& x0, const FixedStructure& fs_in,
                      const OptimizerConfig& cfg) {
  if (!(cfg.alpha > 0.0) || !(cfg.alpha0 > 0.0) || !(cfg.tol_grad > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step and tolerance must be > 0");
  }
  const FixedStructure fs = fs_in.with_mode(cfg.mode);
  DecisionVars x = cfg.positivity ? project_positive(x0, fs) : x0;
  Evaluation ev;
  if (!try_evaluate(x, fs, &ev)) {
    throw Error(ErrorCode::kInfeasibleStart,
                "initial S - G L is not stable");
  }
  OptimizeResult res;
  res.status = Status::kMaxIterations;
  double gn = ev.gradient.norm();
  res.history.push_back(make_report(0, ev.f, gn, 0.5 * gn, abscissa(x, fs),
                                    true, 0.0));
  Matrix prev_x, prev_g;
  double alpha = cfg.step == StepRule::kFixed ? cfg.alpha : cfg.alpha0;
  int k = 0;
  for (;;) {
    if (gn <= cfg.tol_grad * (1.0 + std::abs(ev.f))) {
      res.status = Status::kConverged;
      break;
    }
    if (k >= cfg.max_iters) break;
    const Matrix xu = x.unknown();
    const Matrix& g = ev.gradient;
    if (cfg.step == StepRule::kArmijo) {
      alpha = cfg.alpha0;
      if (cfg.bb_trial && prev_x.size() > 0) {
        const Matrix s = xu - prev_x;
        const Matrix y = g - prev_g;
        const double sy = inner(s, y);
        alpha = sy > 0.0 ? inner(s, s) / sy : 2.0 * alpha;
        alpha = std::clamp(alpha, 1e-10, 1e6);
      }
    } else {
      alpha = cfg.alpha;
    }
    DecisionVars trial = x;
    Evaluation tev;
    bool ok = false;
    while (alpha >= 1e-16) {
      trial.set_unknown(xu - alpha * g);
      if (cfg.positivity) trial = project_positive(trial, fs);
      if (try_evaluate(trial, fs, &tev)) {
        if (cfg.step == StepRule::kFixed) {
          ok = true;
          break;
        }
        const double decrease = inner(g, trial.unknown() - xu);
        if (tev.f <= ev.f + cfg.armijo_c * decrease && tev.f <= ev.f) {
          ok = true;
          break;
        }
      }
      alpha *= cfg.shrink;
    }
    if (!ok) {
      res.status = Status::kLineSearchStalled;
      break;
    }
    ++k;
    prev_x = xu;
    prev_g = g;
    x = trial;
    ev = std::move(tev);
    gn = ev.gradient.norm();
    res.history.push_back(make_report(k, ev.f, gn, 0.5 * gn, abscissa(x, fs),
                                      true, alpha));
  }
  res.vars = x;
  res.iterations = k;
  res.f = ev.f;
  res.gradient_norm = gn;
  res.W = ev.gramians.W;
  res.M = ev.gramians.M;
  res.kkt = kkt_residual(res.W, res.M, x, fs);
  res.stable = is_feasible(x, fs);
  return res;
}

OptimizeResult run_kkt(const DecisionVars& x0, const Matrix& w0,
                       const Matrix& m0, const FixedStructure& fs_in,
                       const OptimizerConfig& cfg) {
  if (!(cfg.alpha > 0.0) || !(cfg.tol_kkt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step and tolerance must be > 0");
  }
  // The KKT system is stated for a fixed output map.
  const FixedStructure fs = fs_in.with_mode(CvMode::kFrozen);
  const int n = fs.system().n();
  const int nu = fs.nu();

  struct State {
    Matrix w, m;
    DecisionVars x;
  };
  struct Field {
    Matrix dw, dm, dx;
    double r_m, r_w, r_x;
    double norm() const {
      return std::sqrt(dw.squaredNorm() + dm.squaredNorm() +
                       dx.squaredNorm());
    }
    double max() const { return std::max({r_m, r_w, r_x}); }
  };
  auto field = [&](const State& z) {
    const ErrorMatrices e = error_matrices(z.x, fs, fs.C_V());
    Field fd;
    const Matrix rm = e.ae.transpose() * z.m + z.m * e.ae +
                      e.ce.transpose() * e.ce;
    const Matrix rw = e.ae * z.w + z.w * e.ae.transpose() +
                      e.be * e.be.transpose();
    fd.dw = -rm;
    fd.dm = rw;
    fd.dx = stationarity(z.w.topRightCorner(n, nu),
                         z.w.bottomRightCorner(nu, nu),
                         z.m.topRightCorner(n, nu),
                         z.m.bottomRightCorner(nu, nu), z.x, fs);
    fd.r_m = rm.norm();
    fd.r_w = rw.norm();
    fd.r_x = fd.dx.norm();
    return fd;
  };
  auto step = [](const State& z, const Field& fd, double a) {
    State out = z;
    out.w -= a * fd.dw;
    out.m -= a * fd.dm;
    out.x.set_unknown(z.x.unknown() - a * fd.dx);
    return out;
  };
  auto f_of = [&](const State& z) {
    const Matrix be = error_matrices(z.x, fs, fs.C_V()).be;
    return (be.transpose() * z.m * be).trace();
  };

  State z{w0, m0, x0};
  Field fz = field(z);
  const double r0 = std::max(fz.max(), 1e-300);
  OptimizeResult res;
  res.status = Status::kMaxIterations;
  res.history.push_back(make_report(0, f_of(z), 2.0 * fz.r_x, fz.max(),
                                    abscissa(z.x, fs), true, 0.0));
  double alpha = cfg.alpha;
  int k = 0;
  while (true) {
    if (fz.max() <= cfg.tol_kkt) {
      res.status = Status::kConverged;
      break;
    }
    if (!std::isfinite(fz.max()) || fz.max() > 1e8 * r0) {
      res.status = Status::kDiverged;
      break;
    }
    if (k >= cfg.max_iters) break;
    if (cfg.kkt_scheme == KktScheme::kPlain) {
      z = step(z, fz, alpha);
    } else {
      // Extragradient with a step that adapts to the local Lipschitz
      // constant of the KKT field.
      for (;;) {
        const State bar = step(z, fz, alpha);
        const Field fb = field(bar);
        const double lhs = std::sqrt((fb.dw - fz.dw).squaredNorm() +
                                     (fb.dm - fz.dm).squaredNorm() +
                                     (fb.dx - fz.dx).squaredNorm());
        if (std::isfinite(lhs) && lhs <= 0.9 * fz.norm()) {
          z = step(z, fb, alpha);
          alpha *= 1.05;
          break;
        }
        alpha *= 0.5;
        if (alpha < 1e-16) {
          res.status = Status::kLineSearchStalled;
          break;
        }
      }
      if (res.status == Status::kLineSearchStalled) break;
    }
    ++k;
    fz = field(z);
    res.history.push_back(make_report(k, f_of(z), 2.0 * fz.r_x, fz.max(),
                                      abscissa(z.x, fs), true, alpha));
  }
  res.vars = z.x;
  res.iterations = k;
  res.W = z.w;
  res.M = z.m;
  res.kkt = KktResidual{fz.r_m, fz.r_w, fz.r_x};
  res.stable = is_feasible(z.x, fs);
  res.f = res.history.back().f;
  res.gradient_norm = 2.0 * fz.r_x;
  if (res.stable) {
    try {
      const Evaluation ev = evaluate(z.x, fs, true);
      res.f = ev.f;
      res.gradient_norm = ev.gradient.norm();
    } catch (const Error& e) {
      if (!recoverable(e)) throw;
    }
  }
  return res;
}

DecisionVars init_pole_placement(const InterpolationData& data,
                                 const CVector& targets, Problem problem) {
  for (int i = 0; i < targets.size(); ++i) {
    if (!(targets(i).real() < 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "targets must be stable");
    }
  }
  DecisionVars v;
  v.variant = problem;
  v.S = data.S;
  v.G = place_poles(data.S, data.L, targets);
  return v;
}

Matrix init_random_unstable_S(int nu, std::uint64_t seed) {
  if (nu < 1) throw Error(ErrorCode::kInvalidArgument, "nu must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector d(nu);
  for (int i = 0; i < nu; ++i) {
    bool distinct = false;
    while (!distinct) {
      d(i) = unif(rng);
      distinct = d(i) > 0.0;
      for (int j = 0; j < i && distinct; ++j) {
        distinct = std::abs(d(i) - d(j)) > 1e-6;
      }
    }
  }
  return d.asDiagonal();
}

CVector default_targets(int nu) {
  CVector t(nu);
  for (int i = 0; i < nu; ++i) t(i) = Complex(-(i + 1.0), 0.0);
  return t;
}

MultiStartResult run_multistart_p1(const LtiSystem& sys, const Matrix& l,
                                   const Matrix& s0_first,
                                   const CVector& targets,
                                   const OptimizerConfig& cfg) {
  const int runs = std::max(1, cfg.restarts);
  const int nu = static_cast<int>(l.cols());
  auto one = [&](int i) -> OptimizeResult {
    const Matrix s0 = (i == 0 && s0_first.size() > 0)
                          ? s0_first
                          : init_random_unstable_S(nu, cfg.seed + i);
    const InterpolationData data{s0, l};
    const MomentSet ms = moments_right(sys, data);
    const FixedStructure fs =
        FixedStructure::problem1(sys, l, ms.value, cfg.mode);
    const DecisionVars v0 = init_pole_placement(data, targets, Problem::kP1);
    if (cfg.method == Method::kKkt) {
      const Evaluation ev = evaluate(v0, fs.with_mode(CvMode::kFrozen), false);
      return run_kkt(v0, ev.gramians.W, ev.gramians.M, fs, cfg);
    }
    return run_pm(v0, fs, cfg);
  };
  std::vector<std::future<OptimizeResult>> jobs;
  for (int i = 0; i < runs; ++i) {
    jobs.push_back(std::async(std::launch::async, one, i));
  }
  MultiStartResult out;
  bool have = false;
  double best_key = kInf;
  std::exception_ptr first_error;
  for (int i = 0; i < runs; ++i) {
    try {
      OptimizeResult r = jobs[i].get();
      const double key = r.stable ? r.f : kInf;
      out.final_f.push_back(key);
      if (!have || key < best_key) {
        best_key = key;
        out.best = std::move(r);
        out.best_index = i;
        have = true;
      }
    } catch (...) {
      out.final_f.push_back(kInf);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (!have) std::rethrow_exception(first_error);
  return out;
}

}  // namespace h2mm
