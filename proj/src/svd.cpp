#include "lowrank/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lowrank/error.hpp"

namespace lowrank {

namespace {

// Column-major working set: `cols` columns of length `len`, contiguous.
struct ColumnBlock {
  std::size_t len;
  std::size_t cols;
  std::vector<double> data;

  double* col(std::size_t j) noexcept { return data.data() + j * len; }
  const double* col(std::size_t j) const noexcept { return data.data() + j * len; }
};

void validate_input(const Matrix& a) {
  // Matrix construction already rejects these; factors can be built from
  // moved-from or hand-edited data, so check again at the kernel boundary.
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "svd input contains a non-finite entry");
  }
}

// Orthogonalizes columns i and j of `w`, accumulating the rotation into `v`.
// Returns true when a rotation was applied.
bool rotate_pair(ColumnBlock& w, ColumnBlock& v, std::size_t i, std::size_t j, double tol) {
  double* wi = w.col(i);
  double* wj = w.col(j);
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  for (std::size_t k = 0; k < w.len; ++k) {
    alpha += wi[k] * wi[k];
    beta += wj[k] * wj[k];
    gamma += wi[k] * wj[k];
  }
  if (alpha == 0.0 || beta == 0.0) return false;
  if (std::abs(gamma) <= tol * std::sqrt(alpha) * std::sqrt(beta)) return false;

  const double zeta = (beta - alpha) / (2.0 * gamma);
  const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = c * t;

  for (std::size_t k = 0; k < w.len; ++k) {
    const double x = wi[k];
    const double y = wj[k];
    wi[k] = c * x - s * y;
    wj[k] = s * x + c * y;
  }
  double* vi = v.col(i);
  double* vj = v.col(j);
  for (std::size_t k = 0; k < v.len; ++k) {
    const double x = vi[k];
    const double y = vj[k];
    vi[k] = c * x - s * y;
    vj[k] = s * x + c * y;
  }
  return true;
}

double rotation_tolerance(std::size_t len) {
  return static_cast<double>(std::max<std::size_t>(len, 1)) * std::numeric_limits<double>::epsilon();
}

[[noreturn]] void throw_no_convergence(std::size_t m, std::size_t n) {
  throw Error(ErrorKind::Convergence, "jacobi svd did not converge within " + std::to_string(kMaxJacobiSweeps) +
                                          " sweeps on a " + std::to_string(m) + "x" + std::to_string(n) + " matrix");
}

void sweep_cyclic(ColumnBlock& w, ColumnBlock& v) {
  const double tol = rotation_tolerance(w.len);
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    std::size_t rotations = 0;
    for (std::size_t i = 0; i + 1 < w.cols; ++i)
      for (std::size_t j = i + 1; j < w.cols; ++j)
        if (rotate_pair(w, v, i, j, tol)) ++rotations;
    if (rotations == 0) return;
  }
  throw_no_convergence(w.len, w.cols);
}

// Round-robin (circle method) schedule: n-1 rounds of n/2 disjoint pairs for
// even n. Odd n gets a phantom column whose pairs are dropped.
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> round_robin_schedule(std::size_t n) {
  const std::size_t players = n + (n % 2);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> rounds;
  if (players < 2) return rounds;
  const std::size_t ring = players - 1;
  for (std::size_t r = 0; r < ring; ++r) {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    auto add = [&](std::size_t a, std::size_t b) {
      if (a >= n || b >= n) return;
      pairs.emplace_back(std::min(a, b), std::max(a, b));
    };
    add(players - 1, r);
    for (std::size_t k = 1; k < players / 2; ++k) add((r + k) % ring, (r + ring - k) % ring);
    rounds.push_back(std::move(pairs));
  }
  return rounds;
}

void sweep_parallel(ColumnBlock& w, ColumnBlock& v) {
  const double tol = rotation_tolerance(w.len);
  const auto rounds = round_robin_schedule(w.cols);
  const bool go_parallel = w.cols >= 16;
  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    std::size_t rotations = 0;
#pragma omp parallel if (go_parallel) reduction(+ : rotations)
    for (const auto& pairs : rounds) {
      const auto count = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp for schedule(static)
      for (std::ptrdiff_t p = 0; p < count; ++p) {
        if (rotate_pair(w, v, pairs[p].first, pairs[p].second, tol)) ++rotations;
      }
    }
    if (rotations == 0) return;
  }
  throw_no_convergence(w.len, w.cols);
}

// Fills columns of `uc` that are not yet set with unit vectors orthogonal to
// every set column (zero singular values leave their left vectors undefined).
void complete_basis(std::vector<double>& uc, std::size_t len, std::size_t cols, const std::vector<bool>& filled_in) {
  std::vector<bool> filled = filled_in;
  std::vector<double> cand(len);
  std::size_t next_unit = 0;
  for (std::size_t j = 0; j < cols; ++j) {
    if (filled[j]) continue;
    for (; next_unit < len; ++next_unit) {
      std::fill(cand.begin(), cand.end(), 0.0);
      cand[next_unit] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < cols; ++q) {
          if (!filled[q]) continue;
          const double* uq = uc.data() + q * len;
          double d = 0.0;
          for (std::size_t k = 0; k < len; ++k) d += uq[k] * cand[k];
          for (std::size_t k = 0; k < len; ++k) cand[k] -= d * uq[k];
        }
      }
      double nrm = 0.0;
      for (double x : cand) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 0.5) {
        double* uj = uc.data() + j * len;
        for (std::size_t k = 0; k < len; ++k) uj[k] = cand[k] / nrm;
        filled[j] = true;
        ++next_unit;
        break;
      }
    }
  }
}

struct TallFactors {
  std::vector<double> u;  // len x cols, column-major
  std::vector<double> sigma;
  std::vector<double> v;  // cols x cols, column-major
};

// Sorts converged columns by norm and normalizes them. `w` holds U*Sigma of a
// tall (len >= cols) matrix, `v` its right singular vectors.
TallFactors finish(const ColumnBlock& w, const ColumnBlock& v) {
  const std::size_t len = w.len;
  const std::size_t cols = w.cols;
  std::vector<double> norms(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const double* c = w.col(j);
    double s = 0.0;
    for (std::size_t k = 0; k < len; ++k) s += c[k] * c[k];
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  constexpr double kZero = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  TallFactors out;
  out.u.assign(len * cols, 0.0);
  out.sigma.resize(cols);
  out.v.resize(cols * cols);
  std::vector<bool> filled(cols, false);
  for (std::size_t j = 0; j < cols; ++j) {
    const std::size_t src = order[j];
    const double s = norms[src] <= kZero ? 0.0 : norms[src];
    out.sigma[j] = s;
    std::copy_n(v.col(src), cols, out.v.data() + j * cols);
    if (s > 0.0) {
      const double* c = w.col(src);
      double* uj = out.u.data() + j * len;
      for (std::size_t k = 0; k < len; ++k) uj[k] = c[k] / s;
      filled[j] = true;
    }
  }
  complete_basis(out.u, len, cols, filled);
  return out;
}

template <typename Sweep>
SvdFactors decompose(const Matrix& a, Sweep sweep) {
  validate_input(a);
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const bool wide = m < n;
  const std::size_t len = wide ? n : m;
  const std::size_t cols = wide ? m : n;

  ColumnBlock w{len, cols, std::vector<double>(len * cols)};
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      if (wide)
        w.data[r * len + c] = a(r, c);  // column r of A^T is row r of A
      else
        w.data[c * len + r] = a(r, c);
    }
  ColumnBlock v{cols, cols, std::vector<double>(cols * cols, 0.0)};
  for (std::size_t j = 0; j < cols; ++j) v.data[j * cols + j] = 1.0;

  sweep(w, v);
  TallFactors t = finish(w, v);

  // Tall case: A = W V^T. Wide case: A^T = W V^T, so A = V W^T.
  Matrix u(m, cols);
  Matrix vt(cols, n);
  for (std::size_t j = 0; j < cols; ++j) {
    const double* left = wide ? t.v.data() + j * cols : t.u.data() + j * len;
    const double* right = wide ? t.u.data() + j * len : t.v.data() + j * cols;
    for (std::size_t r = 0; r < m; ++r) u(r, j) = left[r];
    for (std::size_t c = 0; c < n; ++c) vt(j, c) = right[c];
  }

  for (std::size_t j = 0; j < cols; ++j) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < m; ++r)
      if (std::abs(u(r, j)) > std::abs(u(best, j))) best = r;
    if (u(best, j) < 0.0) {
      for (std::size_t r = 0; r < m; ++r) u(r, j) = -u(r, j);
      for (std::size_t c = 0; c < n; ++c) vt(j, c) = -vt(j, c);
    }
  }
  return SvdFactors{std::move(u), std::move(t.sigma), std::move(vt)};
}

void check_factors(const SvdFactors& f) {
  if (f.u.cols() != f.rank() || f.vt.rows() != f.rank()) {
    throw Error(ErrorKind::InvalidInput, "svd factor shapes are inconsistent with sigma length");
  }
}

}  // namespace

SvdFactors svd(const Matrix& a) { return decompose(a, sweep_parallel); }

SvdFactors svd_reference(const Matrix& a) { return decompose(a, sweep_cyclic); }

SvdFactors truncate(const SvdFactors& f, std::size_t k) {
  check_factors(f);
  if (k == 0 || k > f.rank()) {
    throw Error(ErrorKind::InvalidRank,
                "truncation rank " + std::to_string(k) + " outside [1, " + std::to_string(f.rank()) + "]");
  }
  if (k == f.rank()) return f;
  Matrix u(f.rows(), k);
  for (std::size_t r = 0; r < f.rows(); ++r)
    for (std::size_t j = 0; j < k; ++j) u(r, j) = f.u(r, j);
  Matrix vt(k, f.cols());
  for (std::size_t j = 0; j < k; ++j) std::copy_n(f.vt.row(j).begin(), f.cols(), vt.row(j).begin());
  return SvdFactors{std::move(u), std::vector<double>(f.sigma.begin(), f.sigma.begin() + static_cast<std::ptrdiff_t>(k)),
                    std::move(vt)};
}

Matrix reconstruct(const SvdFactors& f) {
  check_factors(f);
  const std::size_t m = f.rows();
  const std::size_t n = f.cols();
  const std::size_t k = f.rank();
  Matrix out(m, n);
  const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static) if (m * n * k >= 65536)
  for (std::ptrdiff_t ri = 0; ri < rows; ++ri) {
    const auto r = static_cast<std::size_t>(ri);
    auto orow = out.row(r);
    for (std::size_t l = 0; l < k; ++l) {
      const double coef = f.u(r, l) * f.sigma[l];
      if (coef == 0.0) continue;
      auto vrow = f.vt.row(l);
      for (std::size_t c = 0; c < n; ++c) orow[c] += coef * vrow[c];
    }
  }
  return out;
}

Matrix reconstruct_reference(const SvdFactors& f) {
  check_factors(f);
  Matrix out(f.rows(), f.cols());
  for (std::size_t r = 0; r < f.rows(); ++r)
    for (std::size_t c = 0; c < f.cols(); ++c) {
      double s = 0.0;
      for (std::size_t l = 0; l < f.rank(); ++l) s += f.u(r, l) * f.sigma[l] * f.vt(l, c);
      out(r, c) = s;
    }
  return out;
}

double residual_from_sigma(std::span<const double> sigma, std::size_t k) {
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i])) {
      throw Error(ErrorKind::InvalidInput, "singular value " + std::to_string(i) + " is negative or non-finite");
    }
    if (i > 0 && sigma[i] > sigma[i - 1]) {
      throw Error(ErrorKind::InvalidInput, "singular values are not sorted in non-increasing order");
    }
  }
  if (k > sigma.size()) {
    throw Error(ErrorKind::InvalidRank,
                "rank " + std::to_string(k) + " exceeds " + std::to_string(sigma.size()) + " singular values");
  }
  // Smallest terms first.
  double tail = 0.0;
  for (std::size_t i = sigma.size(); i > k; --i) tail += sigma[i - 1] * sigma[i - 1];
  return std::sqrt(tail);
}

double frobenius_norm(const Matrix& a) {
  std::vector<double> partial(a.rows(), 0.0);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
#pragma omp parallel for schedule(static) if (a.size() >= 65536)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (double x : a.row(static_cast<std::size_t>(r))) s += x * x;
    partial[static_cast<std::size_t>(r)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return std::sqrt(total);
}

double column_orthonormality_residual(const Matrix& u) {
  double worst = 0.0;
  for (std::size_t i = 0; i < u.cols(); ++i)
    for (std::size_t j = i; j < u.cols(); ++j) {
      double d = 0.0;
      for (std::size_t r = 0; r < u.rows(); ++r) d += u(r, i) * u(r, j);
      worst = std::max(worst, std::abs(d - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

double row_orthonormality_residual(const Matrix& vt) {
  double worst = 0.0;
  for (std::size_t i = 0; i < vt.rows(); ++i)
    for (std::size_t j = i; j < vt.rows(); ++j) {
      double d = 0.0;
      auto a = vt.row(i);
      auto b = vt.row(j);
      for (std::size_t c = 0; c < vt.cols(); ++c) d += a[c] * b[c];
      worst = std::max(worst, std::abs(d - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

}  // namespace lowrank
