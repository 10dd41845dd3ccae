#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "h2mm/errors.hpp"
#include "h2mm/h2_optimizer.hpp"
#include "h2mm/sdp_relaxation.hpp"
#include "json_io.hpp"

namespace h2mm::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

Error usage(const std::string& what) {
  return Error(ErrorCode::kInvalidArgument, what);
}

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::kIoFailure || code == ErrorCode::kParseError
             ? kExitIo
             : kExitDomain;
}

json to_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

CVector sorted_eigenvalues(const Matrix& m) {
  CVector e = spectrum(m).eigenvalues;
  std::vector<Complex> v(e.data(), e.data() + e.size());
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return Eigen::Map<CVector>(v.data(), static_cast<int>(v.size()));
}

// ---------------------------------------------------------------- options

struct InterpolationChoice {
  InterpolationData data;  // S (P2) or S0 seed (P1) and L
  bool has_points = false;
};

CMatrix tangent_matrix(const std::string& tangents, int m, int count) {
  if (tangents.empty()) return CMatrix::Ones(m, count);
  const std::vector<double> t = parse_reals(tangents);
  if (static_cast<int>(t.size()) != m * count) {
    throw usage("--tangents needs " + std::to_string(m) +
                " values per distinct point (" + std::to_string(m * count) +
                " in total), got " + std::to_string(t.size()));
  }
  CMatrix d(m, count);
  for (int k = 0; k < count; ++k) {
    for (int i = 0; i < m; ++i) d(i, k) = t[k * m + i];
  }
  return d;
}

InterpolationChoice choose_interpolation(const LtiSystem& sys, int nu,
                                         Problem problem,
                                         const std::string& points,
                                         const std::string& tangents) {
  InterpolationChoice c;
  if (!points.empty()) {
    const CVector raw = parse_points(points);
    if (raw.size() != nu) {
      throw usage("--points lists " + std::to_string(raw.size()) +
                  " points (with multiplicity) for order " + std::to_string(nu));
    }
    CVector distinct;
    std::vector<int> mult;
    group_points(raw, &distinct, &mult);
    c.data = interpolation_from_points(
        distinct, mult,
        tangent_matrix(tangents, sys.m(), static_cast<int>(distinct.size())));
    c.has_points = true;
  } else if (problem == Problem::kP2) {
    throw usage("--problem 2 requires --points");
  }
  if (problem == Problem::kP1 && !tangents.empty() && points.empty()) {
    throw usage("--tangents needs --points");
  }
  if (problem == Problem::kP1 && tangents.empty()) {
    c.data.L = Matrix::Ones(sys.m(), nu);
  }
  return c;
}

CVector parse_targets(const std::string& list, int nu) {
  if (list.empty()) return default_targets(nu);
  const CVector t = parse_points(list);
  if (t.size() != nu) throw usage("--targets needs one value per state");
  return t;
}

void parse_step(const std::string& step, OptimizerConfig* cfg) {
  if (step == "armijo") {
    cfg->step = StepRule::kArmijo;
    return;
  }
  if (step.rfind("fixed:", 0) == 0) {
    cfg->step = StepRule::kFixed;
    try {
      cfg->alpha = std::stod(step.substr(6));
    } catch (const std::exception&) {
      throw usage("bad --step " + step);
    }
    if (!(cfg->alpha > 0.0)) throw usage("fixed step must be positive");
    return;
  }
  throw usage("--step must be armijo or fixed:ALPHA");
}

// ---------------------------------------------------------------- reports

struct Outcome {
  DecisionVars vars;
  Status status = Status::kConverged;
  int iterations = 0;
  double gradient_norm = kNaN;
  std::optional<KktResidual> kkt;
  json extra = json::object();
};

struct Checks {
  bool disjoint_a = false;
  bool disjoint_f = false;
  bool observable = false;
  bool all() const { return disjoint_a && disjoint_f && observable; }
};

Checks constraint_checks(const LtiSystem& sys, const Matrix& s, const Matrix& l,
                         const Matrix& f) {
  Checks c;
  const CVector es = spectrum(s).eigenvalues;
  const double scale_a = 1e-8 * (1.0 + sys.A().norm());
  const double scale_f = 1e-8 * (1.0 + std::max(f.norm(), s.norm()));
  c.disjoint_a = spectral_gap(es, spectrum(sys.A()).eigenvalues) > scale_a;
  c.disjoint_f = spectral_gap(es, spectrum(f).eigenvalues) > scale_f;
  c.observable = observability_rank(l, s) == s.rows();
  return c;
}

json interpolation_json(const InterpolationReport& rep) {
  json out = json::array();
  for (const InterpolationResidual& r : rep.entries) {
    out.push_back({{"point", {r.point.real(), r.point.imag()}},
                   {"order", r.order},
                   {"residual", r.residual}});
  }
  return out;
}

struct Written {
  json report;
  int exit_code = kExitOk;
};

// Builds the model file and the report from the final decision variables.
Written finish_reduce(const LtiSystem& sys, const FixedStructure& fs,
                      const Outcome& o, const std::string& mode_name,
                      const std::string& model_path) {
  const ReducedModel rm = model_at(o.vars, fs);
  ModelFile mf;
  mf.model = rm;
  mf.S = o.vars.S;
  mf.L = fs.L();
  if (rm.right && rm.right->Pi.size() > 0 && mode_name != "frozen") {
    mf.Pi = rm.right->Pi;
  }
  mf.points = sorted_eigenvalues(o.vars.S);
  mf.mode = mode_name;
  write_json(model_path, model_to_json(mf));
  // Norms are computed from the model exactly as written.
  const ModelFile back = load_model(model_path);
  Written w;
  json& r = w.report;
  const SpectrumReport sf = spectrum(back.model.F);
  double h2 = kNaN, h2u = kNaN;
  if (sf.is_stable) {
    const ErrorRealization err = build_error_system(sys, back.model);
    h2 = h2_norm(err);
    h2u = h2_norm(err, H2Convention::kUnnormalized);
  }
  r["h2_error"] = to_json(h2);
  r["h2_error_squared"] = to_json(h2 * h2);
  r["h2_error_unnormalized"] = to_json(h2u);
  r["iterations"] = o.iterations;
  r["status"] = to_string(o.status);
  r["final_gradient_norm"] = to_json(o.gradient_norm);
  if (o.kkt) {
    r["kkt_residuals"] = {{"r_m", to_json(o.kkt->r_m)},
                          {"r_w", to_json(o.kkt->r_w)},
                          {"r_x", to_json(o.kkt->r_x)}};
  } else {
    r["kkt_residuals"] = nullptr;
  }
  r["interpolation_points"] = complex_list(*mf.points);
  try {
    const InterpolationReport rep = check_interpolation(
        sys, back.model, InterpolationData{o.vars.S, fs.L()}, 1e-6);
    r["interpolation_residuals"] = interpolation_json(rep);
  } catch (const Error& e) {
    r["interpolation_residuals"] = json::array();
    r["interpolation_error"] = e.what();
  }
  r["stable"] = sf.is_stable;
  r["spectral_abscissa"] = sf.spectral_abscissa;
  const Checks c = constraint_checks(sys, o.vars.S, fs.L(), back.model.F);
  r["constraint_checks"] = {{"sigma_S_disjoint_A", c.disjoint_a},
                            {"sigma_S_disjoint_F", c.disjoint_f},
                            {"observable", c.observable}};
  for (auto it = o.extra.begin(); it != o.extra.end(); ++it) {
    r[it.key()] = it.value();
  }
  if (o.status != Status::kConverged) {
    w.exit_code = kExitNotConverged;
  } else if (!sf.is_stable || !c.all()) {
    w.exit_code = kExitDomain;
  }
  return w;
}

Outcome from_result(const OptimizeResult& res) {
  Outcome o;
  o.vars = res.vars;
  o.status = res.status;
  o.iterations = res.iterations;
  o.gradient_norm = res.gradient_norm;
  o.kkt = res.kkt;
  return o;
}

Outcome run_sdp(const LtiSystem& sys, const FixedStructure& fs,
                const InterpolationData& data, Problem problem, bool positive) {
  SdpProblem prob = problem == Problem::kP2
                        ? build_relaxation_p2(sys, data.S, data.L, fs.C_V())
                        : build_relaxation_p1(sys, data.L, fs.C_V());
  if (positive) prob = add_positivity(prob);
  const SdpSolution sol = solve_small(prob);
  const RecoveredModel rec = recover(sol, prob);
  Outcome o;
  o.vars = problem == Problem::kP2 ? make_vars_p2(fs, rec.G)
                                   : make_vars_p1(rec.S, rec.G);
  o.iterations = sol.newton_steps;
  o.extra["sdp"] = {{"objective", sol.objective},
                    {"max_violation", sol.max_violation},
                    {"gap_estimate", sol.gap},
                    {"exactness_gap", to_json(rec.gap)},
                    {"variables", prob.num_vars}};
  if (rec.stable) {
    const Evaluation ev = evaluate(o.vars, fs);
    o.gradient_norm = ev.gradient.norm();
    o.kkt = kkt_residual(ev.gramians.W, ev.gramians.M, o.vars, fs);
  }
  return o;
}

// ---------------------------------------------------------------- commands

struct ReduceArgs {
  std::string system, points, tangents, method = "grad", mode = "refresh",
                                          step = "armijo", out, report, g0,
                                          targets;
  int order = 0;
  int problem = 2;
  int max_iters = 5000;
  double tol = -1.0;
  std::uint64_t seed = 0;
  int restarts = 1;
  bool positive = false;
};

int cmd_reduce(const ReduceArgs& a, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const LtiSystem sys = load_system(a.system);
  const int nu = a.order;
  if (nu < 1 || nu >= sys.n()) {
    throw usage("--order must be in [1, n-1] = [1, " +
                std::to_string(sys.n() - 1) + "]");
  }
  if (a.problem != 1 && a.problem != 2) throw usage("--problem must be 1 or 2");
  const Problem problem = a.problem == 1 ? Problem::kP1 : Problem::kP2;
  OptimizerConfig cfg;
  if (a.method == "grad") {
    cfg.method = Method::kPm;
  } else if (a.method == "kkt") {
    cfg.method = Method::kKkt;
  } else if (a.method != "sdp") {
    throw usage("--method must be kkt, grad or sdp");
  }
  if (a.mode == "frozen") {
    cfg.mode = CvMode::kFrozen;
  } else if (a.mode != "refresh") {
    throw usage("--mode must be frozen or refresh");
  }
  parse_step(a.step, &cfg);
  cfg.max_iters = a.max_iters;
  if (a.tol > 0.0) {
    cfg.tol_grad = a.tol;
    cfg.tol_kkt = a.tol;
  }
  cfg.seed = a.seed;
  cfg.restarts = std::max(1, a.restarts);
  cfg.positivity = a.positive;
  if (cfg.method == Method::kKkt && cfg.step == StepRule::kFixed) {
    cfg.kkt_scheme = KktScheme::kPlain;
  }

  const InterpolationChoice ic =
      choose_interpolation(sys, nu, problem, a.points, a.tangents);
  const CVector targets = parse_targets(a.targets, nu);
  Outcome o;
  std::string mode_name;
  std::optional<FixedStructure> fs;
  json extra = json::object();

  if (problem == Problem::kP2) {
    const MomentSet ms = moments_right(sys, ic.data);
    fs = FixedStructure::problem2(sys, ic.data.S, ic.data.L, ms.value);
    mode_name = "fixed";
    if (a.method == "sdp") {
      o = run_sdp(sys, *fs, ic.data, problem, a.positive);
    } else {
      DecisionVars v0;
      if (!a.g0.empty()) {
        const std::vector<double> g = parse_reals(a.g0);
        if (static_cast<int>(g.size()) != nu * sys.m()) {
          throw usage("--g0 needs order x m values");
        }
        Matrix gm(nu, sys.m());
        for (int i = 0; i < nu; ++i) {
          for (int j = 0; j < sys.m(); ++j) gm(i, j) = g[i * sys.m() + j];
        }
        v0 = make_vars_p2(*fs, gm);
      } else {
        v0 = init_pole_placement(ic.data, targets, Problem::kP2);
      }
      if (!is_feasible(v0, *fs)) {
        throw Error(ErrorCode::kInfeasibleStart,
                    "initial S - G L is not stable");
      }
      if (cfg.method == Method::kKkt) {
        const Evaluation ev = evaluate(v0, *fs, false);
        o = from_result(run_kkt(v0, ev.gramians.W, ev.gramians.M, *fs, cfg));
      } else {
        o = from_result(run_pm(v0, *fs, cfg));
      }
    }
  } else {
    if (!a.g0.empty()) throw usage("--g0 applies to --problem 2 only");
    if (a.method == "sdp") {
      const Matrix s0 = ic.has_points ? ic.data.S
                                      : init_random_unstable_S(nu, cfg.seed);
      const InterpolationData d{s0, ic.data.L};
      const MomentSet ms = moments_right(sys, d);
      fs = FixedStructure::problem1(sys, d.L, ms.value, CvMode::kFrozen);
      mode_name = "frozen";
      o = run_sdp(sys, *fs, d, problem, a.positive);
    } else {
      const Matrix s0 = ic.has_points ? ic.data.S : Matrix();
      const MultiStartResult msr =
          run_multistart_p1(sys, ic.data.L, s0, targets, cfg);
      o = from_result(msr.best);
      // The structure the winner was optimized in: C_V from its own S0.
      const Matrix s_start = (msr.best_index == 0 && s0.size() > 0)
                                 ? s0
                                 : init_random_unstable_S(
                                       nu, cfg.seed + msr.best_index);
      const MomentSet ms = moments_right(sys, {s_start, ic.data.L});
      fs = FixedStructure::problem1(sys, ic.data.L, ms.value, cfg.mode);
      mode_name = a.mode;
      json finals = json::array();
      for (double f : msr.final_f) finals.push_back(to_json(f));
      o.extra["restarts"] = cfg.restarts;
      o.extra["best_restart"] = msr.best_index;
      o.extra["restart_f"] = finals;
    }
  }
  Written w = finish_reduce(sys, *fs, o, mode_name, a.out);
  json& r = w.report;
  r["problem"] = a.problem;
  r["order"] = nu;
  r["method"] = a.method;
  r["mode"] = mode_name;
  r["seed"] = a.seed;
  r["positive"] = a.positive;
  r["timing_ms"] = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  if (!a.report.empty()) write_json(a.report, r);
  out << "h2_error " << (r["h2_error"].is_null() ? std::string("inf")
                                                  : fmt("%.12g", r["h2_error"].get<double>()))
      << "\nstatus " << r["status"].get<std::string>() << "\n";
  return w.exit_code;
}

int cmd_h2norm(const std::string& path, bool unnormalized, std::ostream& out) {
  const LtiSystem sys = load_system(path);
  const double v = h2_norm(sys, unnormalized ? H2Convention::kUnnormalized
                                             : H2Convention::kNormalized);
  out << fmt("%.12g", v) << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& system, const std::string& model,
                 double tol, std::ostream& out) {
  const LtiSystem sys = load_system(system);
  const ModelFile mf = load_model(model);
  const int nu = mf.model.order();
  InterpolationData data;
  if (mf.S && mf.L) {
    data = {*mf.S, *mf.L};
  } else if (mf.points) {
    CVector distinct;
    std::vector<int> mult;
    group_points(*mf.points, &distinct, &mult);
    data = interpolation_from_points(
        distinct, mult,
        CMatrix::Ones(sys.m(), static_cast<int>(distinct.size())));
  } else {
    throw usage("model carries no provenance (S, L) or points");
  }
  if (data.S.rows() != nu || data.L.rows() != sys.m() ||
      mf.model.G.cols() != sys.m() || mf.model.H.rows() != sys.p()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model does not match the system dimensions");
  }
  bool ok = true;
  const InterpolationReport rep = check_interpolation(sys, mf.model, data, tol);
  for (const InterpolationResidual& r : rep.entries) {
    const bool pass = r.residual <= tol;
    out << "point " << fmt("%.6g", r.point.real())
        << (r.point.imag() < 0 ? "-" : "+")
        << fmt("%.6g", std::abs(r.point.imag())) << "j order " << r.order
        << " residual " << fmt("%.3e", r.residual)
        << (pass ? " ok" : " FAIL") << "\n";
  }
  ok = ok && rep.passed;
  const SpectrumReport sf = spectrum(mf.model.F);
  out << "stable " << (sf.is_stable ? "yes" : "no") << " (spectral abscissa "
      << fmt("%.6g", sf.spectral_abscissa) << ")\n";
  ok = ok && sf.is_stable;
  const Checks c = constraint_checks(sys, data.S, data.L, mf.model.F);
  out << "sigma(S) disjoint sigma(F) " << (c.disjoint_f ? "yes" : "no") << "\n";
  out << "sigma(S) disjoint sigma(A) " << (c.disjoint_a ? "yes" : "no") << "\n";
  out << "(L, S) observable " << (c.observable ? "yes" : "no") << "\n";
  ok = ok && c.all();
  out << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitDomain;
}

struct Strategy {
  std::string label;
  CVector points;  // at least the largest order
};

Strategy parse_strategy(const std::string& text, int max_order) {
  Strategy s;
  s.label = text;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw usage("bad --points-strategy " + text);
  const std::string kind = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  if (kind == "dense" || kind == "rare") {
    double h = 0.0;
    try {
      h = std::stod(arg);
    } catch (const std::exception&) {
      throw usage("bad spacing in " + text);
    }
    if (!(h > 0.0)) throw usage("spacing must be positive in " + text);
    const double spacing = kind == "rare" ? 10.0 * h : h;
    s.points.resize(max_order);
    for (int i = 0; i < max_order; ++i) s.points(i) = Complex(i * spacing, 0.0);
  } else if (kind == "list") {
    std::ifstream in(arg);
    if (!in) throw Error(ErrorCode::kIoFailure, "cannot open " + arg);
    std::stringstream ss;
    ss << in.rdbuf();
    s.points = parse_points(ss.str());
    if (s.points.size() < max_order) {
      throw usage(arg + " lists fewer points than the largest order");
    }
  } else {
    throw usage("strategy must be dense:H, rare:H or list:FILE");
  }
  return s;
}

struct SweepArgs {
  std::string system, orders, method = "grad", out;
  std::vector<std::string> strategies;
  std::uint64_t seed = 0;
  int max_iters = 5000;
  double tol = -1.0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  const LtiSystem sys = load_system(a.system);
  const auto dots = a.orders.find("..");
  int lo = 0, hi = -1;
  try {
    if (dots == std::string::npos) {
      lo = hi = std::stoi(a.orders);
    } else {
      lo = std::stoi(a.orders.substr(0, dots));
      hi = std::stoi(a.orders.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw usage("--orders must be A..B");
  }
  if (hi < lo) throw usage("--orders range is empty");
  if (lo < 1 || hi > sys.n() - 1) throw usage("--orders must lie in [1, n-1]");
  if (a.method != "grad" && a.method != "kkt") {
    throw usage("sweep --method must be grad or kkt");
  }
  std::vector<Strategy> strategies;
  for (const std::string& s : a.strategies) {
    strategies.push_back(parse_strategy(s, hi));
  }
  if (strategies.empty()) strategies.push_back(parse_strategy("dense:0.2", hi));
  OptimizerConfig cfg;
  cfg.method = a.method == "kkt" ? Method::kKkt : Method::kPm;
  cfg.max_iters = a.max_iters;
  cfg.seed = a.seed;
  if (a.tol > 0.0) cfg.tol_grad = cfg.tol_kkt = a.tol;

  std::ostringstream csv;
  csv << "nu,strategy,h2_error,iterations,converged,stable\n";
  bool all_converged = true, all_ok = true;
  for (int nu = lo; nu <= hi; ++nu) {
    for (const Strategy& st : strategies) {
      double h2 = kNaN;
      int iters = 0;
      bool converged = false, stable = false;
      try {
        CVector distinct;
        std::vector<int> mult;
        group_points(st.points.head(nu), &distinct, &mult);
        const InterpolationData data = interpolation_from_points(
            distinct, mult,
            CMatrix::Ones(sys.m(), static_cast<int>(distinct.size())));
        const MomentSet ms = moments_right(sys, data);
        const FixedStructure fs =
            FixedStructure::problem2(sys, data.S, data.L, ms.value);
        const DecisionVars v0 =
            init_pole_placement(data, default_targets(nu), Problem::kP2);
        OptimizeResult res;
        if (cfg.method == Method::kKkt) {
          const Evaluation ev = evaluate(v0, fs, false);
          res = run_kkt(v0, ev.gramians.W, ev.gramians.M, fs, cfg);
        } else {
          res = run_pm(v0, fs, cfg);
        }
        const ReducedModel rm = model_at(res.vars, fs);
        stable = rm.stable;
        if (stable) h2 = h2_norm(build_error_system(sys, rm));
        iters = res.iterations;
        converged = res.status == Status::kConverged;
      } catch (const Error& e) {
        err << "nu=" << nu << " " << st.label << ": " << e.what() << "\n";
        all_ok = false;
      }
      all_converged = all_converged && converged;
      csv << nu << "," << st.label << ","
          << (std::isfinite(h2) ? fmt("%.12g", h2) : std::string("nan")) << ","
          << iters << "," << (converged ? "true" : "false") << ","
          << (stable ? "true" : "false") << "\n";
    }
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  if (!all_ok) return kExitDomain;
  return all_converged ? kExitOk : kExitNotConverged;
}

struct ExportArgs {
  std::string system, points, tangents, out;
  int problem = 2;
  int order = 0;
  bool positive = false;
  std::uint64_t seed = 0;
};

int cmd_export_sdp(const ExportArgs& a, std::ostream& out) {
  const LtiSystem sys = load_system(a.system);
  if (a.order < 1 || a.order > sys.n()) throw usage("--order must be in [1, n]");
  if (a.problem != 1 && a.problem != 2) throw usage("--problem must be 1 or 2");
  const Problem problem = a.problem == 1 ? Problem::kP1 : Problem::kP2;
  InterpolationChoice ic =
      choose_interpolation(sys, a.order, problem, a.points, a.tangents);
  if (!ic.has_points) ic.data.S = init_random_unstable_S(a.order, a.seed);
  const MomentSet ms = moments_right(sys, ic.data);
  SdpProblem p = problem == Problem::kP2
                     ? build_relaxation_p2(sys, ic.data.S, ic.data.L, ms.value)
                     : build_relaxation_p1(sys, ic.data.L, ms.value);
  if (a.positive) p = add_positivity(p);
  export_sdpa(p, a.out);
  out << "wrote " << p.num_vars << " variables, " << p.blocks.size()
      << " blocks to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------- parsing

Complex parse_complex(const std::string& token) {
  std::string t;
  for (char ch : token) {
    if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
  }
  if (t.empty()) throw usage("empty point");
  auto number = [&](const std::string& s) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw usage("bad number '" + token + "'");
    }
    if (used != s.size()) throw usage("bad number '" + token + "'");
    return v;
  };
  const char last = t.back();
  if (last != 'j' && last != 'i') return Complex(number(t), 0.0);
  t.pop_back();
  // Split at the last sign that is not a leading sign or an exponent sign.
  size_t split = std::string::npos;
  for (size_t k = t.size(); k-- > 1;) {
    if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_part = [&](std::string s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return number(s);
  };
  if (split == std::string::npos) return Complex(0.0, imag_part(t));
  return Complex(number(t.substr(0, split)), imag_part(t.substr(split)));
}

CVector parse_points(const std::string& list) {
  std::string s = list;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::istringstream in(s);
  std::vector<Complex> v;
  std::string tok;
  while (in >> tok) v.push_back(parse_complex(tok));
  CVector out(static_cast<int>(v.size()));
  for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
  return out;
}

std::vector<double> parse_reals(const std::string& list) {
  const CVector c = parse_points(list);
  std::vector<double> out;
  for (int i = 0; i < c.size(); ++i) {
    if (c(i).imag() != 0.0) throw usage("expected real values in '" + list + "'");
    out.push_back(c(i).real());
  }
  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"H2-optimal model reduction by moment matching"};
  app.require_subcommand(1);

  std::string h2_system;
  bool h2_unnorm = false;
  auto* h2 = app.add_subcommand("h2norm", "H2 norm of a system");
  h2->add_option("--system", h2_system, "SystemFile (JSON)")->required();
  h2->add_flag("--unnormalized", h2_unnorm,
               "omit the 1/(2 pi) factor (norm scaled by sqrt(2 pi))");

  ReduceArgs ra;
  auto* red = app.add_subcommand("reduce", "compute an optimized reduced model");
  red->add_option("--system", ra.system, "SystemFile (JSON)")->required();
  red->add_option("--order", ra.order, "reduced order nu")->required();
  red->add_option("--problem", ra.problem, "1: optimize [S G], 2: optimize G");
  red->add_option("--method", ra.method, "kkt | grad | sdp");
  red->add_option("--points", ra.points,
                  "interpolation points; repeats give Jordan blocks");
  red->add_option("--tangents", ra.tangents,
                  "m values per distinct point (default all ones)");
  red->add_option("--mode", ra.mode, "frozen | refresh (problem 1)");
  red->add_option("--max-iters", ra.max_iters);
  red->add_option("--tol", ra.tol, "gradient / KKT tolerance");
  red->add_option("--step", ra.step, "armijo | fixed:ALPHA");
  red->add_option("--seed", ra.seed);
  red->add_option("--restarts", ra.restarts, "problem 1 multi-start runs");
  red->add_flag("--positive", ra.positive, "keep the reduced model positive");
  red->add_option("--g0", ra.g0, "initial G, row-major (problem 2)");
  red->add_option("--targets", ra.targets,
                  "pole-placement targets for the initial G");
  red->add_option("--out", ra.out, "ModelFile to write")->required();
  red->add_option("--report", ra.report, "ReportFile to write");

  std::string v_system, v_model;
  double v_tol = 1e-6;
  auto* val = app.add_subcommand("validate", "check a model's interpolation");
  val->add_option("--system", v_system)->required();
  val->add_option("--model", v_model)->required();
  val->add_option("--tol", v_tol);

  SweepArgs sa;
  auto* sw = app.add_subcommand("sweep", "errors over orders and point choices");
  sw->add_option("--system", sa.system)->required();
  sw->add_option("--orders", sa.orders, "A..B")->required();
  sw->add_option("--points-strategy", sa.strategies,
                 "dense:H | rare:H | list:FILE (repeatable)");
  sw->add_option("--method", sa.method, "grad | kkt");
  sw->add_option("--seed", sa.seed);
  sw->add_option("--max-iters", sa.max_iters);
  sw->add_option("--tol", sa.tol);
  sw->add_option("--out", sa.out, "CSV file (default stdout)");

  ExportArgs ea;
  auto* ex = app.add_subcommand("export-sdp", "write the SDP relaxation (SDPA)");
  ex->add_option("--system", ea.system)->required();
  ex->add_option("--problem", ea.problem);
  ex->add_option("--order", ea.order)->required();
  ex->add_option("--points", ea.points);
  ex->add_option("--tangents", ea.tangents);
  ex->add_option("--seed", ea.seed, "S0 draw for problem 1 without points");
  ex->add_flag("--positive", ea.positive);
  ex->add_option("--out", ea.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitDomain;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == h2) return cmd_h2norm(h2_system, h2_unnorm, out);
    if (active == red) return cmd_reduce(ra, out);
    if (active == val) return cmd_validate(v_system, v_model, v_tol, out);
    if (active == sw) return cmd_sweep(sa, out, err);
    if (active == ex) return cmd_export_sdp(ea, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.code() == ErrorCode::kInvalidArgument) err << active->help();
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitDomain;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("h2mm");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace h2mm::cli
