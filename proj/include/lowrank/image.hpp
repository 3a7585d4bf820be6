#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lowrank/matrix.hpp"

namespace lowrank {

/// Height x width x channels pixel data on the 0-255 scale, one Matrix per
/// channel. Channel counts are 1 (gray), 3 (RGB) or 4 (RGBA).
class ImageTensor {
 public:
  explicit ImageTensor(std::vector<Matrix> planes);

  std::size_t height() const noexcept { return planes_.front().rows(); }
  std::size_t width() const noexcept { return planes_.front().cols(); }
  std::size_t channels() const noexcept { return planes_.size(); }

  const Matrix& plane(std::size_t c) const { return planes_.at(c); }
  std::span<const Matrix> planes() const noexcept { return planes_; }

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::vector<Matrix> planes_;
};

enum class ImageFormat { Pgm, Ppm, Png };

/// Reads PGM (P5), PPM (P6) or 8-bit PNG. The format is sniffed from the
/// leading bytes, not the extension.
ImageTensor load_image(const std::filesystem::path& path);
ImageTensor decode_image(std::span<const std::uint8_t> bytes);

/// Writes PGM for 1 channel, PPM for 3 and PNG for 4.
void save_image(const ImageTensor& t, const std::filesystem::path& path);
void save_image_as(const ImageTensor& t, const std::filesystem::path& path, ImageFormat format);

/// PNG when the extension is .png, PNM for .pgm/.ppm/.pnm, otherwise the
/// channel-count default used by save_image.
ImageFormat format_for_path(const std::filesystem::path& path, std::size_t channels);

std::vector<std::uint8_t> encode_png(const ImageTensor& t);
std::vector<std::uint8_t> encode_pnm(const ImageTensor& t);

/// BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
ImageTensor to_grayscale(const ImageTensor& t);

/// Clamps to [0, 255] and rounds half away from zero.
Matrix clamp_quantize(const Matrix& m);
ImageTensor clamp_quantize(std::span<const Matrix> planes);

/// First three planes of an RGBA tensor; other tensors are returned unchanged.
ImageTensor drop_alpha(const ImageTensor& t);

}  // namespace lowrank
