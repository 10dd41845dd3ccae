#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "h2mm/lti_system.hpp"
#include "h2mm/moment_matching.hpp"

namespace h2mm {

/// Problem 1 optimizes X = [S G]; Problem 2 optimizes G with S fixed.
enum class Problem { kP1, kP2 };

/// Frozen keeps the output map C_V fixed while S moves. Refresh recomputes
/// C_V = C Pi(S) at every point, so the model keeps interpolating at the
/// current eigenvalues of S; its gradient includes the Pi(S) dependence.
enum class CvMode { kFrozen, kRefresh };

class FixedStructure {
 public:
  static FixedStructure problem1(const LtiSystem& sys, const Matrix& l,
                                 const Matrix& c_v,
                                 CvMode mode = CvMode::kRefresh);
  static FixedStructure problem2(const LtiSystem& sys, const Matrix& s,
                                 const Matrix& l, const Matrix& c_v);

  Problem problem() const { return problem_; }
  CvMode mode() const { return mode_; }
  const LtiSystem& system() const { return solver_->system(); }
  const ErrorGramianSolver& solver() const { return *solver_; }
  const Matrix& L() const { return l_; }
  const Matrix& calL() const { return call_; }  // [I; -L]
  const Matrix& calE() const { return cale_; }  // [0; I]
  const Matrix& C_V() const { return c_v_; }
  /// Fixed S of Problem 2 (empty for Problem 1).
  const Matrix& S_fixed() const { return s_fixed_; }
  int nu() const { return static_cast<int>(l_.cols()); }
  int m() const { return static_cast<int>(l_.rows()); }

  FixedStructure with_mode(CvMode mode) const;

 private:
  Problem problem_ = Problem::kP1;
  CvMode mode_ = CvMode::kFrozen;
  std::shared_ptr<const ErrorGramianSolver> solver_;
  Matrix l_, call_, cale_, c_v_, s_fixed_;
};

struct DecisionVars {
  Problem variant = Problem::kP1;
  Matrix S;
  Matrix G;

  /// [S G] (Problem 1) or G (Problem 2).
  Matrix unknown() const;
  void set_unknown(const Matrix& x);
  Matrix X() const;
  /// X calL = S - G L.
  Matrix XL(const FixedStructure& fs) const { return S - G * fs.L(); }
};

DecisionVars make_vars_p1(const Matrix& s, const Matrix& g);
DecisionVars make_vars_p2(const FixedStructure& fs, const Matrix& g);

bool is_feasible(const DecisionVars& vars, const FixedStructure& fs);

/// Output map used at `vars`: C_V itself, or C Pi(S) in refresh mode.
Matrix output_map(const DecisionVars& vars, const FixedStructure& fs);

/// Reduced model (S - G L, G, C_V) at `vars`.
ReducedModel model_at(const DecisionVars& vars, const FixedStructure& fs);

struct Evaluation {
  double f = 0.0;
  Matrix gradient;
  Matrix c_v;
  ErrorGramians gramians;
};

/// f = trace(Be^T M Be) and its gradient with respect to the unknown.
Evaluation evaluate(const DecisionVars& vars, const FixedStructure& fs,
                    bool with_gradient = true);
double objective_f(const DecisionVars& vars, const FixedStructure& fs);
Matrix gradient_f(const DecisionVars& vars, const FixedStructure& fs);

struct KktResidual {
  double r_m = 0.0;  // Ae^T M + M Ae + Ce^T Ce
  double r_w = 0.0;  // Ae W + W Ae^T + Be Be^T
  double r_x = 0.0;  // stationarity block (half the gradient)
  double max() const;
};

KktResidual kkt_residual(const Matrix& w, const Matrix& m,
                         const DecisionVars& vars, const FixedStructure& fs);

enum class Method { kKkt, kPm };
enum class StepRule { kArmijo, kFixed };
enum class KktScheme { kPlain, kExtragradient };
enum class Status {
  kConverged,
  kMaxIterations,
  kLineSearchStalled,
  kDiverged,
};

const char* to_string(Status s);

struct OptimizerConfig {
  Method method = Method::kPm;
  StepRule step = StepRule::kArmijo;
  double alpha = 1e-3;  // fixed step (pm) or initial/fixed step (kkt)
  double armijo_c = 1e-4;
  double shrink = 0.5;
  double alpha0 = 1.0;
  bool bb_trial = true;  // Barzilai-Borwein trial step before backtracking
  double tol_grad = 1e-8;
  double tol_kkt = 1e-6;
  int max_iters = 5000;
  CvMode mode = CvMode::kRefresh;
  int restarts = 1;
  std::uint64_t seed = 0;
  bool positivity = false;
  KktScheme kkt_scheme = KktScheme::kExtragradient;
};

struct IterateReport {
  int iteration = 0;
  double f = 0.0;
  double gradient_norm = 0.0;
  double kkt_residual = 0.0;
  double spectral_abscissa = 0.0;
  bool accepted = true;
  double step = 0.0;
};

struct OptimizeResult {
  DecisionVars vars;
  std::vector<IterateReport> history;
  Status status = Status::kMaxIterations;
  int iterations = 0;
  double f = 0.0;
  double gradient_norm = 0.0;
  KktResidual kkt;
  bool stable = false;
  Matrix W, M;  // final multipliers / Gramians
};

OptimizeResult run_pm(const DecisionVars& x0, const FixedStructure& fs,
                      const OptimizerConfig& cfg);
OptimizeResult run_kkt(const DecisionVars& x0, const Matrix& w0,
                       const Matrix& m0, const FixedStructure& fs,
                       const OptimizerConfig& cfg);

/// G clamped to >= 0, then off-diagonal S raised so offdiag(S - G L) >= 0.
/// For Problem 2 S is fixed and only G is clamped.
DecisionVars project_positive(const DecisionVars& vars,
                              const FixedStructure& fs);

DecisionVars init_pole_placement(const InterpolationData& data,
                                 const CVector& targets, Problem problem);
/// diag(U(0,1)) draws from a 64-bit Mersenne Twister seeded with `seed`.
Matrix init_random_unstable_S(int nu, std::uint64_t seed);
/// {-1, -2, ..., -nu}.
CVector default_targets(int nu);

struct MultiStartResult {
  OptimizeResult best;
  int best_index = 0;
  std::vector<double> final_f;
};

/// Problem 1 multi-start: restart i draws S0 from seed + i (restart 0 uses
/// `s0_first` when it is non-empty), places the poles at `targets` and runs
/// the configured method. Lowest f wins, ties go to the lowest index.
MultiStartResult run_multistart_p1(const LtiSystem& sys, const Matrix& l,
                                   const Matrix& s0_first,
                                   const CVector& targets,
                                   const OptimizerConfig& cfg);

}  // namespace h2mm
