#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "h2mm/lti_system.hpp"

namespace h2mm::testing {

inline std::string data_path(const std::string& name) {
  return std::string(H2MM_DATA_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
  return std::string(H2MM_GOLDEN_DIR) + "/" + name;
}

inline LtiSystem cart_pendulum() {
  Matrix a(6, 6);
  a << 0, 1, 0, 0, 0, 0,
       -1, -1, 19.6, 1, 0, 0,
       0, 0, 0, 1, 0, 0,
       1, 1, -39.2, -2, 9.8, 1,
       0, 0, 0, 0, 0, 1,
       0, 0, 19.6, 1, -19.6, -2;
  Matrix b(6, 1);
  b << 0, 1, 0, -1, 0, 0;
  Matrix c(1, 6);
  c << 1, 0, 0, 0, 0, 0;
  return LtiSystem(a, b, c);
}

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = n01(rng);
  }
  return m;
}

/// Gaussian A shifted so that its spectral abscissa is -margin.
inline Matrix random_stable(int n, std::mt19937_64& rng, double margin = 0.5) {
  Matrix a = random_matrix(n, n, rng);
  const double abscissa = spectrum(a).spectral_abscissa;
  a.diagonal().array() -= abscissa + margin;
  return a;
}

inline LtiSystem random_system(int n, int m, int p, std::mt19937_64& rng) {
  return LtiSystem(random_stable(n, rng), random_matrix(n, m, rng),
                   random_matrix(p, n, rng));
}

/// Metzler A with strictly dominant negative diagonal, B, C >= 0.
inline LtiSystem random_positive_system(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = i == j ? 0.0 : u(rng);
  }
  const double rowmax = a.rowwise().sum().maxCoeff();
  for (int i = 0; i < n; ++i) a(i, i) = -(rowmax + 0.5 + u(rng));
  Matrix b(n, 1), c(1, n);
  for (int i = 0; i < n; ++i) b(i) = u(rng);
  for (int i = 0; i < n; ++i) c(i) = u(rng);
  return LtiSystem(a, b, c);
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1e-300, std::max(a.norm(), b.norm()));
}

}  // namespace h2mm::testing
