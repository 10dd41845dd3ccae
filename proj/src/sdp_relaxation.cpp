#include "h2mm/sdp_relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "h2mm/errors.hpp"

namespace h2mm {

namespace {

class BlockBuilder {
 public:
  BlockBuilder(int dim, BlockSign sign, std::string label) {
    block_.dim = dim;
    block_.sign = sign;
    block_.label = std::move(label);
  }

  // Adds v to the symmetric entries (r, c) and (c, r).
  void add(int var, int r, int c, double v) {
    if (r > c) std::swap(r, c);
    acc_[{var, r, c}] += v;
  }

  // Adds u e_j^T + e_j u^T, with u and j relative to `offset`.
  void add_sym_outer(int var, int offset, const Vector& u, int j) {
    for (int r = 0; r < u.size(); ++r) {
      if (u(r) == 0.0) continue;
      add(var, offset + r, offset + j, r == j ? 2.0 * u(r) : u(r));
    }
  }

  // Adds a constant symmetric matrix placed at (r0, c0); only the upper
  // triangle of the full block is touched.
  void add_constant(int r0, int c0, const Matrix& k) {
    for (int i = 0; i < k.rows(); ++i) {
      for (int j = 0; j < k.cols(); ++j) {
        const int r = r0 + i;
        const int c = c0 + j;
        if (r <= c && k(i, j) != 0.0) add(0, r, c, k(i, j));
      }
    }
  }

  SdpBlock finish() {
    for (const auto& [key, v] : acc_) {
      if (v == 0.0) continue;
      block_.entries.push_back(
          {std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
    }
    return block_;
  }

 private:
  SdpBlock block_;
  std::map<std::tuple<int, int, int>, double> acc_;
};

void add_group(SdpProblem* p, const std::string& name, int rows, int cols,
               bool symmetric) {
  VariableGroup g;
  g.name = name;
  g.offset = p->num_vars;
  g.rows = rows;
  g.cols = cols;
  g.symmetric = symmetric;
  p->num_vars += g.size();
  p->groups.push_back(g);
}

SdpProblem build(const LtiSystem& sys, const Matrix* s, const Matrix& l,
                 const Matrix& c_v) {
  const int n = sys.n();
  const int m = sys.m();
  const int nu = static_cast<int>(l.cols());
  if (l.rows() != m || c_v.rows() != sys.p() || c_v.cols() != nu ||
      (s && (s->rows() != nu || s->cols() != nu))) {
    throw Error(ErrorCode::kDimensionMismatch,
                "relaxation needs L m x nu, C_V p x nu, S nu x nu");
  }
  if (!spectrum(sys.A()).is_stable) {
    throw Error(ErrorCode::kUnstableMatrix, "relaxation needs a stable A");
  }
  SdpProblem p;
  p.variant = s ? Problem::kP2 : Problem::kP1;
  p.system = std::make_shared<const LtiSystem>(sys);
  p.L = l;
  p.C_V = c_v;
  if (s) p.S = *s;
  add_group(&p, "M11", n, n, true);
  add_group(&p, "M22", nu, nu, true);
  add_group(&p, "X22", m, m, true);
  add_group(&p, "Y22", nu, nu, true);
  add_group(&p, "Z22", nu, m, false);
  if (!s) add_group(&p, "Theta22", nu, nu, false);
  const VariableGroup& m11 = p.groups[0];
  const VariableGroup& m22 = p.groups[1];
  const VariableGroup& x22 = p.groups[2];
  const VariableGroup& y22 = p.groups[3];
  const VariableGroup& z22 = p.groups[4];
  auto var = [](const VariableGroup& g, int i, int j) {
    return g.index(i, j) + 1;
  };
  const Matrix& a = sys.A();
  const Matrix& c = sys.C();

  p.objective = Vector::Zero(p.num_vars);
  const Matrix bbt = sys.B() * sys.B().transpose();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      p.objective(m11.index(i, j)) = i == j ? bbt(i, i) : 2.0 * bbt(i, j);
    }
  }
  for (int i = 0; i < m; ++i) p.objective(x22.index(i, i)) = 1.0;

  // Y22 - (Theta^T - L^T Z^T + Theta - Z L + C_V^T C_V) >= 0.
  BlockBuilder out(nu, BlockSign::kPsd, "output");
  for (int i = 0; i < nu; ++i) {
    for (int j = i; j < nu; ++j) out.add(var(y22, i, j), i, j, 1.0);
  }
  if (!s) {
    const VariableGroup& th = p.groups[5];
    for (int i = 0; i < nu; ++i) {
      for (int j = 0; j < nu; ++j) {
        out.add(var(th, i, j), i, j, i == j ? -2.0 : -1.0);
      }
    }
  } else {
    for (int i = 0; i < nu; ++i) {
      for (int j = i; j < nu; ++j) {
        const int v = var(m22, i, j);
        out.add_sym_outer(v, 0, -s->row(j).transpose(), i);
        if (i != j) out.add_sym_outer(v, 0, -s->row(i).transpose(), j);
      }
    }
  }
  for (int i = 0; i < nu; ++i) {
    for (int k = 0; k < m; ++k) {
      out.add_sym_outer(var(z22, i, k), 0, l.row(k).transpose(), i);
    }
  }
  out.add_constant(0, 0, -(c_v.transpose() * c_v));

  // [X22 Z22^T; Z22 M22] >= 0.
  BlockBuilder schur(m + nu, BlockSign::kPsd, "schur");
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) schur.add(var(x22, i, j), i, j, 1.0);
  }
  for (int i = 0; i < nu; ++i) {
    for (int j = i; j < nu; ++j) schur.add(var(m22, i, j), m + i, m + j, 1.0);
    for (int k = 0; k < m; ++k) schur.add(var(z22, i, k), k, m + i, 1.0);
  }

  // [A^T M11 + M11 A + C^T C, -C^T C_V; -C_V^T C, Y22] <= 0.
  BlockBuilder lyap(n + nu, BlockSign::kNsd, "lyapunov");
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int v = var(m11, i, j);
      lyap.add_sym_outer(v, 0, a.row(i).transpose(), j);
      if (i != j) lyap.add_sym_outer(v, 0, a.row(j).transpose(), i);
    }
  }
  for (int i = 0; i < nu; ++i) {
    for (int j = i; j < nu; ++j) lyap.add(var(y22, i, j), n + i, n + j, 1.0);
  }
  lyap.add_constant(0, 0, c.transpose() * c);
  lyap.add_constant(0, n, -(c.transpose() * c_v));

  BlockBuilder pm11(n, BlockSign::kPsd, "M11");
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) pm11.add(var(m11, i, j), i, j, 1.0);
  }
  BlockBuilder pm22(nu, BlockSign::kPsd, "M22");
  for (int i = 0; i < nu; ++i) {
    for (int j = i; j < nu; ++j) pm22.add(var(m22, i, j), i, j, 1.0);
  }

  p.blocks.push_back(out.finish());
  p.blocks.push_back(schur.finish());
  p.blocks.push_back(lyap.finish());
  p.blocks.push_back(pm11.finish());
  p.blocks.push_back(pm22.finish());
  return p;
}

}  // namespace

Matrix SdpBlock::value(const Vector& y) const {
  Matrix g = Matrix::Zero(dim, dim);
  for (const SdpEntry& e : entries) {
    const double coef = e.var == 0 ? 1.0 : y(e.var - 1);
    g(e.row, e.col) += e.value * coef;
    if (e.row != e.col) g(e.col, e.row) += e.value * coef;
  }
  return g;
}

int VariableGroup::index(int i, int j) const {
  if (!symmetric) return offset + i * cols + j;
  if (i > j) std::swap(i, j);
  return offset + i * rows - i * (i - 1) / 2 + (j - i);
}

Matrix VariableGroup::extract(const Vector& y) const {
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = y(index(i, j));
  }
  return out;
}

const VariableGroup& SdpProblem::group(const std::string& name) const {
  for (const VariableGroup& g : groups) {
    if (g.name == name) return g;
  }
  throw Error(ErrorCode::kInvalidArgument, "no variable group " + name);
}

SdpProblem SdpProblem::canonical() const {
  SdpProblem out = *this;
  for (SdpBlock& b : out.blocks) {
    if (b.sign == BlockSign::kNsd) {
      for (SdpEntry& e : b.entries) e.value = -e.value;
      b.sign = BlockSign::kPsd;
    }
  }
  return out;
}

bool same_problem(const SdpProblem& a, const SdpProblem& b) {
  if (a.num_vars != b.num_vars || a.blocks.size() != b.blocks.size() ||
      a.objective.size() != b.objective.size()) {
    return false;
  }
  for (int i = 0; i < a.objective.size(); ++i) {
    if (a.objective(i) != b.objective(i)) return false;
  }
  for (size_t k = 0; k < a.blocks.size(); ++k) {
    const SdpBlock& x = a.blocks[k];
    const SdpBlock& y = b.blocks[k];
    if (x.dim != y.dim || x.diagonal != y.diagonal || x.sign != y.sign ||
        x.entries != y.entries) {
      return false;
    }
  }
  return true;
}

SdpProblem build_relaxation_p1(const LtiSystem& sys, const Matrix& l,
                               const Matrix& c_v) {
  return build(sys, nullptr, l, c_v);
}

SdpProblem build_relaxation_p2(const LtiSystem& sys, const Matrix& s,
                               const Matrix& l, const Matrix& c_v) {
  return build(sys, &s, l, c_v);
}

SdpProblem add_positivity(const SdpProblem& problem) {
  if (problem.groups.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "positivity needs a relaxation built by this library");
  }
  SdpProblem p = problem;
  p.positivity = true;
  const VariableGroup& z = p.group("Z22");
  const int nu = z.rows;
  const int m = z.cols;
  const Matrix& l = p.L;
  // offdiag(Theta - Z L) >= 0, with Theta = M22 S for Problem 2.
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nu; ++j) {
      if (i == j) continue;
      BlockBuilder b(1, BlockSign::kPsd,
                     "offdiag(" + std::to_string(i) + "," + std::to_string(j) + ")");
      if (p.variant == Problem::kP1) {
        b.add(p.group("Theta22").index(i, j) + 1, 0, 0, 1.0);
      } else {
        const VariableGroup& m22 = p.group("M22");
        for (int k = 0; k < nu; ++k) {
          b.add(m22.index(i, k) + 1, 0, 0, p.S(k, j));
        }
      }
      for (int k = 0; k < m; ++k) b.add(z.index(i, k) + 1, 0, 0, -l(k, j));
      p.blocks.push_back(b.finish());
    }
  }
  for (int i = 0; i < nu; ++i) {
    for (int k = 0; k < m; ++k) {
      BlockBuilder b(1, BlockSign::kPsd,
                     "Z(" + std::to_string(i) + "," + std::to_string(k) + ")");
      b.add(z.index(i, k) + 1, 0, 0, 1.0);
      p.blocks.push_back(b.finish());
    }
  }
  return p;
}

RecoveredModel recover(const SdpSolution& solution, const SdpProblem& problem) {
  if (problem.groups.empty() || !problem.system) {
    throw Error(ErrorCode::kInvalidArgument,
                "recovery needs a relaxation built by this library");
  }
  const Vector& y = solution.y;
  const Matrix m11 = problem.group("M11").extract(y);
  const Matrix m22 = problem.group("M22").extract(y);
  const Matrix z = problem.group("Z22").extract(y);
  const int n = static_cast<int>(m11.rows());
  const int nu = static_cast<int>(m22.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(m22);
  const double lo = nu ? es.eigenvalues().minCoeff() : 0.0;
  if (nu == 0 || !(lo >= 1e-10 * m22.norm()) || lo <= 0.0) {
    throw Error(ErrorCode::kSingularM22, "M22 is singular");
  }
  RecoveredModel rec;
  rec.sdp_objective = solution.objective;
  const Eigen::LDLT<Matrix> ldlt(m22);
  rec.G = ldlt.solve(z);
  if (problem.variant == Problem::kP1) {
    rec.S = ldlt.solve(problem.group("Theta22").extract(y));
  } else {
    rec.S = problem.S;
  }
  rec.M = Matrix::Zero(n + nu, n + nu);
  rec.M.topLeftCorner(n, n) = m11;
  rec.M.bottomRightCorner(nu, nu) = m22;
  const Matrix f = rec.S - rec.G * problem.L;
  rec.stable = spectrum(f).is_stable;
  if (!rec.stable) {
    rec.f = std::numeric_limits<double>::infinity();
    rec.gap = std::numeric_limits<double>::infinity();
    return rec;
  }
  const FixedStructure fs =
      problem.variant == Problem::kP1
          ? FixedStructure::problem1(*problem.system, problem.L, problem.C_V,
                                     CvMode::kFrozen)
          : FixedStructure::problem2(*problem.system, problem.S, problem.L,
                                     problem.C_V);
  DecisionVars v{problem.variant, rec.S, rec.G};
  rec.f = objective_f(v, fs);
  rec.gap = rec.f - rec.sdp_objective;
  return rec;
}

}  // namespace h2mm
