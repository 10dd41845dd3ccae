#pragma once

#include <optional>

#include "h2mm/matrix_equations.hpp"

namespace h2mm {

/// Signal generator (S, L) of the right family; columns of L are the
/// tangent directions.
struct InterpolationData {
  Matrix S;
  Matrix L;
};

/// Dual signal generator (Q, R) of the left family.
struct DualInterpolationData {
  Matrix Q;
  Matrix R;
};

struct RightProvenance {
  Matrix S;
  Matrix L;
  Matrix Pi;
  Matrix T;
};

struct LeftProvenance {
  Matrix Q;
  Matrix R;
  Matrix Upsilon;
};

/// Reduced model x' = F x + G u, y = H x.
struct ReducedModel {
  Matrix F;
  Matrix G;
  Matrix H;
  std::optional<RightProvenance> right;
  std::optional<LeftProvenance> left;
  bool stable = false;
  bool spectra_disjoint = false;

  int order() const { return static_cast<int>(F.rows()); }
};

}  // namespace h2mm
