#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lowrank/image.hpp"
#include "lowrank/svd.hpp"

namespace lowrank {

/// Strictly increasing list of target relative errors, each in (0, 1].
class ToleranceGrid {
 public:
  explicit ToleranceGrid(std::vector<double> values);

  /// 0.05, 0.10, ..., 0.95.
  static ToleranceGrid standard();
  /// Comma-separated list, or the word "default".
  static ToleranceGrid parse(std::string_view text);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool contains(double t) const noexcept;

 private:
  std::vector<double> values_;
};

void check_tolerance(double tolerance);

/// Smallest k >= 1 with residual_from_sigma(sigma, k) <= tolerance * ||sigma||.
/// An all-zero sigma yields 1.
std::size_t select_rank(std::span<const double> sigma, double tolerance);

/// One channel's truncated factors at storage precision (f32).
/// `u` is height x rank column-major, `vt` is rank x width row-major.
struct StoredChannel {
  std::size_t rank = 0;
  std::vector<float> sigma;
  std::vector<float> u;
  std::vector<float> vt;

  friend bool operator==(const StoredChannel&, const StoredChannel&) = default;
};

StoredChannel to_stored(const SvdFactors& f);
SvdFactors to_factors(const StoredChannel& c, std::size_t height, std::size_t width);

/// Per-channel truncated factors plus image geometry; the in-memory form of
/// an LRIF file.
class LowRankImage {
 public:
  LowRankImage(std::size_t height, std::size_t width, std::vector<StoredChannel> channels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channel_count() const noexcept { return channels_.size(); }
  const StoredChannel& channel(std::size_t c) const { return channels_.at(c); }
  std::vector<std::size_t> ranks() const;

  friend bool operator==(const LowRankImage&, const LowRankImage&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<StoredChannel> channels_;
};

/// Full reduced SVD of every channel. Convergence failures are rethrown with
/// the channel index in the message.
std::vector<SvdFactors> decompose(const ImageTensor& t);

std::vector<std::size_t> select_ranks(std::span<const SvdFactors> factors, double tolerance);
LowRankImage compress_factors(std::span<const SvdFactors> factors, std::span<const std::size_t> ranks);

LowRankImage compress(const ImageTensor& t, double tolerance);
LowRankImage compress_at_rank(const ImageTensor& t, std::size_t k);

/// Unclamped reconstruction of every channel from the stored factors.
std::vector<Matrix> reconstruct_planes(const LowRankImage& l);
/// Reconstruction clamped to [0, 255] and rounded.
ImageTensor decompress(const LowRankImage& l);

inline constexpr std::size_t kLrifHeaderBytes = 16;
inline constexpr std::uint8_t kLrifVersion = 1;

std::vector<std::uint8_t> encode_lrif(const LowRankImage& l);
LowRankImage decode_lrif(std::span<const std::uint8_t> bytes);

/// Exact LRIF size: header + per channel (4 + rank * (height + width + 1) * 4).
std::uint64_t factor_storage_bytes(const LowRankImage& l);

}  // namespace lowrank
