#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lowrank/image.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

/// Per-pixel reconstruction error; for multichannel inputs the Euclidean norm
/// of the channel differences at each pixel.
struct ErrorMap {
  Matrix values;

  std::size_t height() const noexcept { return values.rows(); }
  std::size_t width() const noexcept { return values.cols(); }
};

/// Frobenius norm of all planes pooled into one sum.
double frobenius_norm(std::span<const Matrix> planes);
double absolute_frobenius_error(std::span<const Matrix> original, std::span<const Matrix> approx);

/// ||original - approx||_F / ||original||_F over the combined multichannel
/// tensor. Zero-norm original: 0 if approx is also zero, otherwise
/// ErrorKind::UndefinedError.
double relative_frobenius_error(std::span<const Matrix> original, std::span<const Matrix> approx);
double relative_frobenius_error(const ImageTensor& original, const ImageTensor& approx);

/// Relative error of each channel on its own, for diagnostics.
std::vector<double> channel_relative_errors(const ImageTensor& original, const ImageTensor& approx);

/// 1 - compressed / original; negative when the compressed form is larger.
double compression_ratio(std::uint64_t original_bytes, std::uint64_t compressed_bytes);

ErrorMap error_map(std::span<const Matrix> original, std::span<const Matrix> approx);
ErrorMap error_map(const ImageTensor& original, const ImageTensor& approx);

/// Grayscale rendering scaled so the map's maximum becomes 255. An all-zero
/// map renders black.
ImageTensor render_error_map(const ErrorMap& map);

/// Mean error over the top-decile gradient pixels divided by the mean over the
/// bottom-decile gradient pixels. Gradients are central differences of
/// `original`, pooled across channels; border pixels are excluded.
double edge_concentration(const ImageTensor& original, const ErrorMap& map);

}  // namespace lowrank
