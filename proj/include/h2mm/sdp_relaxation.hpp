#pragma once

#include <memory>
#include <string>
#include <vector>

#include "h2mm/h2_optimizer.hpp"
#include "h2mm/lti_system.hpp"

namespace h2mm {

enum class BlockSign { kPsd, kNsd };

/// Coefficient of variable `var` (0 is the constant term, variables are
/// 1-based) at the symmetric position (row, col), row <= col, 0-based.
struct SdpEntry {
  int var = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;

  bool operator==(const SdpEntry& o) const {
    return var == o.var && row == o.row && col == o.col && value == o.value;
  }
};

/// Affine symmetric block G0 + sum_i y_i G_i with a required sign.
struct SdpBlock {
  int dim = 0;
  bool diagonal = false;
  BlockSign sign = BlockSign::kPsd;
  std::string label;
  std::vector<SdpEntry> entries;  // sorted by (var, row, col)

  Matrix value(const Vector& y) const;
};

struct VariableGroup {
  std::string name;
  int offset = 0;  // 0-based index of the first scalar
  int rows = 0;
  int cols = 0;
  bool symmetric = false;

  int size() const { return symmetric ? rows * (rows + 1) / 2 : rows * cols; }
  /// 0-based scalar index of entry (i, j).
  int index(int i, int j) const;
  Matrix extract(const Vector& y) const;
};

/// Minimize objective^T y subject to every block having its sign.
struct SdpProblem {
  int num_vars = 0;
  Vector objective;
  std::vector<SdpBlock> blocks;

  // Relaxation metadata (empty for problems read from a file).
  std::vector<VariableGroup> groups;
  Problem variant = Problem::kP1;
  std::shared_ptr<const LtiSystem> system;
  Matrix S, L, C_V;
  bool positivity = false;

  const VariableGroup& group(const std::string& name) const;
  /// Same feasible set with every block written as G0 + sum y_i G_i >= 0.
  SdpProblem canonical() const;
};

bool same_problem(const SdpProblem& a, const SdpProblem& b);

/// Variables, in order: M11 (n x n sym), M22 (nu x nu sym), X22 (m x m sym),
/// Y22 (nu x nu sym), Z22 (nu x m), Theta22 (nu x nu). Blocks: the output
/// bound, the Schur block [X22 Z22^T; Z22 M22], the Lyapunov block, M11 and
/// M22.
SdpProblem build_relaxation_p1(const LtiSystem& sys, const Matrix& l,
                               const Matrix& c_v);
/// As Problem 1 with Theta22 replaced by M22 S.
SdpProblem build_relaxation_p2(const LtiSystem& sys, const Matrix& s,
                               const Matrix& l, const Matrix& c_v);
/// Adds offdiag(Theta22 - Z22 L) >= 0 and Z22 >= 0 as 1x1 blocks.
SdpProblem add_positivity(const SdpProblem& problem);

/// SDPA sparse text; every block reads sum_i y_i F_i - F_0 >= 0.
std::string to_sdpa(const SdpProblem& problem);
void export_sdpa(const SdpProblem& problem, const std::string& path);
/// Canonical (all blocks PSD) problem from SDPA sparse text.
SdpProblem parse_sdpa(const std::string& text);
SdpProblem read_sdpa(const std::string& path);

struct SdpSolverConfig {
  double feas_tol = 1e-8;
  double gap_tol = 1e-7;
  double mu_shrink = 0.5;
  int max_newton = 200;
  /// Ball ||y|| <= radius added as a barrier term so that Newton systems
  /// stay definite when the relaxation is unbounded in some direction.
  double radius = 1e6;
  int max_vars = 500;
};

struct SdpSolution {
  Vector y;
  double objective = 0.0;
  double max_violation = 0.0;
  double gap = 0.0;
  int newton_steps = 0;
  std::vector<double> path_objective;  // objective after each centering
};

SdpSolution solve_small(const SdpProblem& problem,
                        const SdpSolverConfig& cfg = {});

struct RecoveredModel {
  Matrix S;
  Matrix G;
  Matrix M;  // blkdiag(M11, M22)
  double sdp_objective = 0.0;
  double f = 0.0;    // exact objective at the recovered point
  double gap = 0.0;  // f - sdp_objective, +inf when unstable
  bool stable = false;
};

RecoveredModel recover(const SdpSolution& solution, const SdpProblem& problem);

}  // namespace h2mm
