#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lowrank/image.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank::test {

inline std::filesystem::path fixture_dir() { return LOWRANK_FIXTURE_DIR; }

inline std::vector<std::filesystem::path> fixture_paths() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(fixture_dir())) {
    const auto ext = e.path().extension();
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline Matrix random_matrix(std::size_t m, std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix a(m, n);
  for (double& x : a.data()) x = dist(rng);
  return a;
}

inline Matrix random_matrix(std::size_t m, std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  return random_matrix(m, n, rng);
}

// Smooth "photo-like" matrix: a few low-frequency waves plus mild noise, in [0, 255].
inline Matrix natural_like(std::size_t m, std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 3.0);
  Matrix a(m, n);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      const double x = static_cast<double>(c) / static_cast<double>(n);
      const double y = static_cast<double>(r) / static_cast<double>(m);
      double v = 120 + 60 * std::sin(3 * x + 1) * std::cos(2 * y) + 30 * std::sin(7 * x * y) + noise(rng);
      a(r, c) = std::clamp(v, 0.0, 255.0);
    }
  return a;
}

// Plain triple loop, no blocking, no OpenMP.
inline Matrix naive_product(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<double>(s);
    }
  return out;
}

inline double naive_norm(const Matrix& a) {
  long double s = 0;
  for (double x : a.data()) s += static_cast<long double>(x) * x;
  return static_cast<double>(std::sqrt(s));
}

inline double naive_distance(const Matrix& a, const Matrix& b) {
  long double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const long double d = static_cast<long double>(a.data()[i]) - b.data()[i];
    s += d * d;
  }
  return static_cast<double>(std::sqrt(s));
}

// Eigenvalues of the symmetric matrix AᵀA by cyclic two-sided Jacobi in long
// double, sorted descending. Square roots are the singular values of A.
inline std::vector<long double> gram_eigenvalues(const Matrix& a) {
  const std::size_t n = a.cols();
  std::vector<long double> g(n * n, 0.0L);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t r = 0; r < a.rows(); ++r) s += static_cast<long double>(a(r, i)) * a(r, j);
      g[i * n + j] = s;
    }
  auto at = [&](std::size_t i, std::size_t j) -> long double& { return g[i * n + j]; };
  for (int sweep = 0; sweep < 200; ++sweep) {
    long double off = 0, diag = 0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += at(i, i) * at(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    }
    if (off <= 1e-36L * diag || off == 0) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (at(p, q) == 0) continue;
        const long double theta = (at(q, q) - at(p, p)) / (2 * at(p, q));
        const long double t = (theta >= 0 ? 1 : -1) / (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const long double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double gkp = at(k, p), gkq = at(k, q);
          at(k, p) = c * gkp - s * gkq;
          at(k, q) = s * gkp + c * gkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double gpk = at(p, k), gqk = at(q, k);
          at(p, k) = c * gpk - s * gqk;
          at(q, k) = s * gpk + c * gqk;
        }
      }
  }
  std::vector<long double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = std::max(at(i, i), 0.0L);
  std::sort(ev.rbegin(), ev.rend());
  return ev;
}

// Singular values of A from the Gram eigenvalues of the smaller side.
inline std::vector<double> oracle_sigma(const Matrix& a) {
  const auto ev = gram_eigenvalues(a.rows() < a.cols() ? a.transposed() : a);
  std::vector<double> s;
  for (long double e : ev) s.push_back(static_cast<double>(std::sqrt(e)));
  return s;
}

inline ImageTensor constant_image(std::size_t h, std::size_t w, std::size_t channels, double v) {
  return ImageTensor(std::vector<Matrix>(channels, Matrix(h, w, v)));
}

}  // namespace lowrank::test
