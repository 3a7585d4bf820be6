#include "lowrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lowrank/error.hpp"
#include "lowrank/svd.hpp"

namespace lowrank {

namespace {

void check_same_shape(std::span<const Matrix> a, std::span<const Matrix> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorKind::InvalidInput, "channel count mismatch: " + std::to_string(a.size()) + " vs " +
                                             std::to_string(b.size()));
  }
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c].rows() != b[c].rows() || a[c].cols() != b[c].cols() || a[c].rows() != a[0].rows() ||
        a[c].cols() != a[0].cols()) {
      throw Error(ErrorKind::InvalidInput, "dimension mismatch in channel " + std::to_string(c));
    }
  }
}

double sum_squares(std::span<const Matrix> planes) {
  double s = 0.0;
  for (const auto& p : planes)
    for (double v : p.data()) s += v * v;
  return s;
}

double sum_squared_diff(std::span<const Matrix> a, std::span<const Matrix> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    auto x = a[c].data();
    auto y = b[c].data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - y[i];
      s += d * d;
    }
  }
  return s;
}

}  // namespace

double frobenius_norm(std::span<const Matrix> planes) { return std::sqrt(sum_squares(planes)); }

double absolute_frobenius_error(std::span<const Matrix> original, std::span<const Matrix> approx) {
  check_same_shape(original, approx);
  return std::sqrt(sum_squared_diff(original, approx));
}

double relative_frobenius_error(std::span<const Matrix> original, std::span<const Matrix> approx) {
  check_same_shape(original, approx);
  const double num = std::sqrt(sum_squared_diff(original, approx));
  const double den = frobenius_norm(original);
  if (den == 0.0) {
    if (num == 0.0) return 0.0;
    throw Error(ErrorKind::UndefinedError, "relative error of a nonzero approximation to an all-zero original");
  }
  return num / den;
}

double relative_frobenius_error(const ImageTensor& original, const ImageTensor& approx) {
  return relative_frobenius_error(original.planes(), approx.planes());
}

std::vector<double> channel_relative_errors(const ImageTensor& original, const ImageTensor& approx) {
  check_same_shape(original.planes(), approx.planes());
  std::vector<double> out;
  for (std::size_t c = 0; c < original.channels(); ++c) {
    out.push_back(relative_frobenius_error(original.planes().subspan(c, 1), approx.planes().subspan(c, 1)));
  }
  return out;
}

double compression_ratio(std::uint64_t original_bytes, std::uint64_t compressed_bytes) {
  if (original_bytes == 0) throw Error(ErrorKind::InvalidInput, "original size must be positive");
  return 1.0 - static_cast<double>(compressed_bytes) / static_cast<double>(original_bytes);
}

ErrorMap error_map(std::span<const Matrix> original, std::span<const Matrix> approx) {
  check_same_shape(original, approx);
  Matrix values(original[0].rows(), original[0].cols());
  auto out = values.data();
  for (std::size_t c = 0; c < original.size(); ++c) {
    auto x = original[c].data();
    auto y = approx[c].data();
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = x[i] - y[i];
      out[i] += d * d;
    }
  }
  for (double& v : out) v = std::sqrt(v);
  return ErrorMap{std::move(values)};
}

ErrorMap error_map(const ImageTensor& original, const ImageTensor& approx) {
  return error_map(original.planes(), approx.planes());
}

ImageTensor render_error_map(const ErrorMap& map) {
  const auto v = map.values.data();
  const double peak = *std::max_element(v.begin(), v.end());
  Matrix img(map.height(), map.width());
  if (peak > 0.0) {
    auto o = img.data();
    for (std::size_t i = 0; i < v.size(); ++i) o[i] = std::round(255.0 * v[i] / peak);
  }
  return ImageTensor({std::move(img)});
}

double edge_concentration(const ImageTensor& original, const ErrorMap& map) {
  const std::size_t h = original.height();
  const std::size_t w = original.width();
  if (map.height() != h || map.width() != w) throw Error(ErrorKind::InvalidInput, "error map dimension mismatch");
  if (h < 3 || w < 3) throw Error(ErrorKind::InvalidInput, "edge statistic needs at least 3x3 pixels");

  std::vector<double> grad;
  std::vector<double> err;
  for (std::size_t r = 1; r + 1 < h; ++r)
    for (std::size_t c = 1; c + 1 < w; ++c) {
      double g = 0.0;
      for (const auto& p : original.planes()) {
        const double gy = (p(r + 1, c) - p(r - 1, c)) / 2.0;
        const double gx = (p(r, c + 1) - p(r, c - 1)) / 2.0;
        g += gx * gx + gy * gy;
      }
      grad.push_back(std::sqrt(g));
      err.push_back(map.values(r, c));
    }

  std::vector<std::size_t> order(grad.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grad[a] < grad[b]; });
  const std::size_t decile = std::max<std::size_t>(order.size() / 10, 1);
  double low = 0.0;
  double high = 0.0;
  for (std::size_t i = 0; i < decile; ++i) {
    low += err[order[i]];
    high += err[order[order.size() - 1 - i]];
  }
  if (low == 0.0) return high == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return high / low;
}

}  // namespace lowrank
