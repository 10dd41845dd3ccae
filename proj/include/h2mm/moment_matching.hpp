#pragma once

#include <vector>

#include "h2mm/lti_system.hpp"
#include "h2mm/reduced_model.hpp"

namespace h2mm {

enum class MomentKind { kRight, kLeft };

struct MomentSet {
  MomentKind kind = MomentKind::kRight;
  Matrix value;       // C Pi (p x nu) or Upsilon B (nu x m)
  CVector points;     // distinct eigenvalues of S (or Q)
  std::vector<int> multiplicities;
  Matrix projection;  // Pi (n x nu) or Upsilon (nu x n)
};

/// Real Krylov basis together with the signal generator it realizes:
/// A (V T) + B L = (V T) S. Complex bases are stored realified; the complex
/// Krylov vectors are recovered as basis * realification.
struct KrylovBasis {
  Matrix basis;
  CVector points;
  CMatrix directions;
  std::vector<int> multiplicities;
  Matrix S;
  Matrix L;
  Matrix T;
  CMatrix realification;
};

/// Real (S, L) for a set of distinct points with Jordan multiplicities and
/// one tangent direction per point (columns of `directions`). Each point
/// contributes a Jordan block with unit superdiagonal and tangent columns
/// [l_i, 0, ..., 0]; conjugate pairs are mapped to real 2x2 blocks.
InterpolationData interpolation_from_points(const CVector& points,
                                            const std::vector<int>& mult,
                                            const CMatrix& directions);

/// Groups a point list with repetitions into distinct points and counts,
/// preserving first-appearance order.
void group_points(const CVector& raw, CVector* points, std::vector<int>* mult);

/// Columns (s_j I - A)^{-1} B l_j.
KrylovBasis krylov_right(const LtiSystem& sys, const CVector& points,
                         const CMatrix& directions);
/// Columns (s_i I - A)^{-k} B l_i for k = 1..j_i.
KrylovBasis krylov_right_higher(const LtiSystem& sys, const CVector& points,
                                const std::vector<int>& mult,
                                const CMatrix& directions);
/// Columns (s_j I - A^T)^{-1} C^T r_j^T; `directions` holds r_j as rows.
KrylovBasis krylov_left(const LtiSystem& sys, const CVector& points,
                        const CMatrix& directions);

MomentSet moments_right(const LtiSystem& sys, const InterpolationData& data);
MomentSet moments_left(const LtiSystem& sys, const DualInterpolationData& data);

/// F = S - G L, input map G, output map C Pi.
ReducedModel assemble_family_right(const InterpolationData& data,
                                   const Matrix& g, const MomentSet& moments);
/// F = Q - R H, input map Upsilon B, output map H.
ReducedModel assemble_family_left(const DualInterpolationData& data,
                                  const Matrix& h, const MomentSet& moments);

struct InterpolationResidual {
  Complex point;
  int order = 0;  // 0 for value matching, k for the k-th chain condition
  double residual = 0.0;
};

struct InterpolationReport {
  std::vector<InterpolationResidual> entries;
  double max_residual = 0.0;
  bool passed = false;
};

/// Tangential residuals ||(K(s_i) - K_hat(s_i)) l_i|| with unit directions
/// at the eigenvalues of S. Defective eigenvalues are checked through their
/// Jordan chains with finite-difference derivatives.
InterpolationReport check_interpolation(const LtiSystem& sys,
                                        const ReducedModel& model,
                                        const InterpolationData& data,
                                        double tol);
/// Left version: ||r_i (K(q_i) - K_hat(q_i))|| at the eigenvalues of Q.
InterpolationReport check_interpolation_left(const LtiSystem& sys,
                                             const ReducedModel& model,
                                             const DualInterpolationData& data,
                                             double tol);

/// Distinct eigenvalues of a matrix with their algebraic multiplicities.
void cluster_eigenvalues(const CVector& eig, CVector* points,
                         std::vector<int>* mult);

}  // namespace h2mm
