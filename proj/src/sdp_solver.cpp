// Small dense primal barrier method for the relaxations. Phase I minimizes a
// uniform slack s over G_k(y) + s I >= 0; phase II follows the central path of
// c^T y - sum_k log det G_k(y) - log(R^2 - |y|^2).

#include <cmath>
#include <limits>

#include "h2mm/errors.hpp"
#include "h2mm/sdp_relaxation.hpp"

namespace h2mm {

namespace {

struct DenseBlock {
  int dim = 0;
  Matrix constant;
  std::vector<std::pair<int, Matrix>> terms;  // 0-based variable, coefficient
};

std::vector<DenseBlock> densify(const SdpProblem& canonical) {
  std::vector<DenseBlock> out;
  for (const SdpBlock& b : canonical.blocks) {
    DenseBlock d;
    d.dim = b.dim;
    d.constant = Matrix::Zero(b.dim, b.dim);
    std::vector<int> slot(canonical.num_vars + 1, -1);
    for (const SdpEntry& e : b.entries) {
      Matrix* target = &d.constant;
      if (e.var > 0) {
        if (slot[e.var] < 0) {
          slot[e.var] = static_cast<int>(d.terms.size());
          d.terms.emplace_back(e.var - 1, Matrix::Zero(b.dim, b.dim));
        }
        target = &d.terms[slot[e.var]].second;
      }
      (*target)(e.row, e.col) += e.value;
      if (e.row != e.col) (*target)(e.col, e.row) += e.value;
    }
    out.push_back(std::move(d));
  }
  return out;
}

// Barrier over z = y (phase II) or z = (y, s) (phase I).
class Barrier {
 public:
  Barrier(const std::vector<DenseBlock>& blocks, int n, bool phase1,
          double radius)
      : blocks_(blocks), n_(n), phase1_(phase1), r2_(radius * radius) {
    for (const DenseBlock& b : blocks_) theta_ += b.dim;
    theta_ += 1.0;
  }

  int size() const { return phase1_ ? n_ + 1 : n_; }
  double theta() const { return theta_; }

  Matrix block(int k, const Vector& z) const {
    const DenseBlock& b = blocks_[k];
    Matrix g = b.constant;
    for (const auto& [v, coef] : b.terms) g.noalias() += z(v) * coef;
    if (phase1_) g.diagonal().array() += z(n_);
    return g;
  }

  /// -sum log det - log(R^2 - |y|^2); +inf outside the domain.
  double value(const Vector& z) const {
    const double ball = r2_ - z.head(n_).squaredNorm();
    if (!(ball > 0.0)) return inf();
    double phi = -std::log(ball);
    for (size_t k = 0; k < blocks_.size(); ++k) {
      Eigen::LLT<Matrix> llt(block(static_cast<int>(k), z));
      if (llt.info() != Eigen::Success) return inf();
      const Vector d = llt.matrixLLT().diagonal();
      if (!(d.minCoeff() > 0.0)) return inf();
      phi -= 2.0 * d.array().log().sum();
    }
    return std::isfinite(phi) ? phi : inf();
  }

  void derivatives(const Vector& z, Vector* g, Matrix* h) const {
    const int nz = size();
    *g = Vector::Zero(nz);
    *h = Matrix::Zero(nz, nz);
    const Vector y = z.head(n_);
    const double r = r2_ - y.squaredNorm();
    g->head(n_) += 2.0 * y / r;
    h->topLeftCorner(n_, n_) += 2.0 / r * Matrix::Identity(n_, n_) +
                                4.0 / (r * r) * y * y.transpose();
    for (size_t k = 0; k < blocks_.size(); ++k) {
      const DenseBlock& b = blocks_[k];
      const Matrix gk = block(static_cast<int>(k), z);
      const Eigen::LLT<Matrix> llt(gk);
      const Matrix inv = llt.solve(Matrix::Identity(b.dim, b.dim));
      // P_i = G^-1 G_i; gradient -tr P_i, Hessian tr(P_i P_j).
      std::vector<std::pair<int, Matrix>> p;
      for (const auto& [v, coef] : b.terms) p.emplace_back(v, inv * coef);
      if (phase1_) p.emplace_back(n_, inv);
      for (size_t i = 0; i < p.size(); ++i) {
        (*g)(p[i].first) -= p[i].second.trace();
        for (size_t j = i; j < p.size(); ++j) {
          const double hij =
              (p[i].second.array() * p[j].second.transpose().array()).sum();
          (*h)(p[i].first, p[j].first) += hij;
          if (i != j) (*h)(p[j].first, p[i].first) += hij;
        }
      }
    }
  }

  static double inf() { return std::numeric_limits<double>::infinity(); }

 private:
  const std::vector<DenseBlock>& blocks_;
  int n_;
  bool phase1_;
  double r2_;
  double theta_ = 0.0;
};

Vector newton_direction(const Matrix& h, const Vector& g) {
  Vector d = h.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  const Matrix hs = d.asDiagonal() * h * d.asDiagonal();
  Eigen::LDLT<Matrix> ldlt(hs);
  Vector w = ldlt.solve(-(d.asDiagonal() * g));
  if (ldlt.info() != Eigen::Success || !w.allFinite()) {
    const Matrix reg = hs + 1e-12 * Matrix::Identity(hs.rows(), hs.cols());
    w = reg.ldlt().solve(-(d.asDiagonal() * g));
  }
  return d.asDiagonal() * w;
}

// Minimizes t c^T z + barrier(z) from a strictly feasible z. Returns the
// number of Newton steps; `stop` allows early exit (phase I).
template <class Stop>
int center(const Barrier& bar, const Vector& c, double t, Vector* z,
           int max_newton, Stop stop) {
  // Decreases are measured as t c^T dz + (barrier difference): at large t the
  // linear part dominates psi and a direct difference loses every digit.
  double phi = bar.value(*z);
  for (int it = 0; it < max_newton; ++it) {
    if (stop(*z)) return it;
    Vector g;
    Matrix h;
    bar.derivatives(*z, &g, &h);
    g += t * c;
    const Vector dz = newton_direction(h, g);
    const double lambda2 = -g.dot(dz);
    if (!(lambda2 > 0.0) || lambda2 / 2.0 <= 1e-10) return it + 1;
    const double slope = t * c.dot(dz);
    double step = 1.0;
    Vector trial;
    double phi_t = Barrier::inf();
    while (step > 1e-14) {
      trial = *z + step * dz;
      phi_t = bar.value(trial);
      if (step * slope + (phi_t - phi) <= -0.25 * step * lambda2) break;
      step *= 0.5;
    }
    if (step < 1e-3 && lambda2 < 0.0625) {
      // Rounding floor: accept once inside the quadratic region (lambda <
      // 0.25), where the gap estimate theta / t is still within 25%.
      return it + 1;
    }
    if (step <= 1e-14) break;
    *z = trial;
    phi = phi_t;
  }
  throw Error(ErrorCode::kNewtonStalled,
              "barrier centering did not converge in the Newton budget");
}

}  // namespace

SdpSolution solve_small(const SdpProblem& problem, const SdpSolverConfig& cfg) {
  if (problem.num_vars > cfg.max_vars) {
    throw Error(ErrorCode::kSizeLimit,
                "relaxation has " + std::to_string(problem.num_vars) +
                    " variables, more than the dense solver accepts (" +
                    std::to_string(cfg.max_vars) + "); export it instead");
  }
  const SdpProblem can = problem.canonical();
  const int n = can.num_vars;
  const std::vector<DenseBlock> blocks = densify(can);
  SdpSolution sol;

  // Phase I.
  Vector y = Vector::Zero(n);
  {
    const Barrier bar(blocks, n, true, cfg.radius);
    double s0 = 1.0;
    for (size_t k = 0; k < blocks.size(); ++k) {
      const Matrix g = bar.block(static_cast<int>(k), Vector::Zero(n + 1));
      Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
      s0 = std::max(s0, 1.0 - es.eigenvalues().minCoeff());
    }
    Vector z = Vector::Zero(n + 1);
    z(n) = s0;
    Vector c = Vector::Zero(n + 1);
    c(n) = 1.0;
    const double margin = 1e-3 * cfg.feas_tol;
    for (double t = 1.0;; t /= cfg.mu_shrink) {
      sol.newton_steps += center(bar, c, t, &z, cfg.max_newton,
                                 [&](const Vector& x) { return x(n) < -margin; });
      if (z(n) < -margin) break;
      if (bar.theta() / t <= cfg.gap_tol) {
        throw Error(ErrorCode::kInfeasible,
                    "relaxation has no strictly feasible point (min slack " +
                        std::to_string(z(n)) + ")");
      }
    }
    y = z.head(n);
  }

  // Phase II.
  const Barrier bar(blocks, n, false, cfg.radius);
  double t = 1.0;
  for (;; t /= cfg.mu_shrink) {
    sol.newton_steps += center(bar, can.objective, t, &y, cfg.max_newton,
                               [](const Vector&) { return false; });
    sol.path_objective.push_back(can.objective.dot(y));
    if (bar.theta() / t <= cfg.gap_tol) break;
  }
  sol.y = y;
  sol.objective = can.objective.dot(y);
  sol.gap = bar.theta() / t;
  for (size_t k = 0; k < blocks.size(); ++k) {
    const Matrix g = bar.block(static_cast<int>(k), y);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    sol.max_violation =
        std::max(sol.max_violation, -es.eigenvalues().minCoeff());
  }
  return sol;
}

}  // namespace h2mm
