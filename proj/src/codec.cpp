#include "lowrank/codec.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "lowrank/error.hpp"

namespace lowrank {

namespace {

constexpr char kMagic[4] = {'L', 'R', 'I', 'F'};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void reserve(std::size_t n) { out_.reserve(n); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return b_.size() - pos_; }

  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(b_[pos_] | (b_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  float f32() {
    const std::size_t at = pos_;
    const float v = std::bit_cast<float>(u32());
    if (!std::isfinite(v)) throw Error(ErrorKind::CorruptFile, "non-finite value at byte " + std::to_string(at));
    return v;
  }

  void need(std::size_t n) const {
    if (remaining() < n) {
      throw Error(ErrorKind::CorruptFile, "truncated payload at byte " + std::to_string(b_.size()) + ", needed " +
                                              std::to_string(n) + " more bytes from byte " + std::to_string(pos_));
    }
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void check_sigma_order(std::span<const float> sigma, const std::string& where) {
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] < 0.0f || (i > 0 && sigma[i] > sigma[i - 1])) {
      throw Error(ErrorKind::CorruptFile, where + ": singular values negative or out of order");
    }
  }
}

std::uint64_t channel_bytes(std::uint64_t rank, std::uint64_t h, std::uint64_t w) {
  return 4 + rank * (h + w + 1) * 4;
}

}  // namespace

// --- tolerance grid --------------------------------------------------------

void check_tolerance(double tolerance) {
  if (!(tolerance > 0.0 && tolerance <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "tolerance " + std::to_string(tolerance) + " outside (0, 1]");
  }
}

ToleranceGrid::ToleranceGrid(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(ErrorKind::InvalidInput, "tolerance grid is empty");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    check_tolerance(values_[i]);
    if (i > 0 && values_[i] <= values_[i - 1]) {
      throw Error(ErrorKind::InvalidInput, "tolerance grid must be strictly increasing");
    }
  }
}

ToleranceGrid ToleranceGrid::standard() {
  std::vector<double> v;
  for (int i = 1; i <= 19; ++i) v.push_back(static_cast<double>(i) / 20.0);
  return ToleranceGrid(std::move(v));
}

ToleranceGrid ToleranceGrid::parse(std::string_view text) {
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  text = trim(text);
  if (text == "default") return standard();
  std::vector<double> v;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc() || ptr != item.data() + item.size() || item.empty()) {
      throw Error(ErrorKind::InvalidInput, "bad tolerance value '" + std::string(item) + "'");
    }
    v.push_back(x);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return ToleranceGrid(std::move(v));
}

bool ToleranceGrid::contains(double t) const noexcept {
  return std::find(values_.begin(), values_.end(), t) != values_.end();
}

// --- rank selection -------------------------------------------------------

std::size_t select_rank(std::span<const double> sigma, double tolerance) {
  check_tolerance(tolerance);
  if (sigma.empty()) throw Error(ErrorKind::InvalidInput, "rank selection needs at least one singular value");
  const double total = residual_from_sigma(sigma, 0);  // validates ordering and sign
  if (total == 0.0) return 1;
  // tail[k] accumulates sigma_{n-1}^2 ... sigma_k^2 in the same order as residual_from_sigma.
  std::vector<double> tail(sigma.size() + 1, 0.0);
  for (std::size_t i = sigma.size(); i > 0; --i) tail[i - 1] = tail[i] + sigma[i - 1] * sigma[i - 1];
  const double bound = tolerance * total;
  for (std::size_t k = 1; k <= sigma.size(); ++k) {
    if (std::sqrt(tail[k]) <= bound) return k;
  }
  return sigma.size();
}

// --- stored factors -------------------------------------------------------

StoredChannel to_stored(const SvdFactors& f) {
  StoredChannel c;
  c.rank = f.rank();
  const std::size_t h = f.rows();
  const std::size_t w = f.cols();
  c.sigma.reserve(c.rank);
  for (double s : f.sigma) c.sigma.push_back(static_cast<float>(s));
  c.u.resize(h * c.rank);
  for (std::size_t j = 0; j < c.rank; ++j)
    for (std::size_t r = 0; r < h; ++r) c.u[j * h + r] = static_cast<float>(f.u(r, j));
  c.vt.resize(c.rank * w);
  for (std::size_t j = 0; j < c.rank; ++j)
    for (std::size_t col = 0; col < w; ++col) c.vt[j * w + col] = static_cast<float>(f.vt(j, col));
  return c;
}

SvdFactors to_factors(const StoredChannel& c, std::size_t height, std::size_t width) {
  Matrix u(height, c.rank);
  for (std::size_t j = 0; j < c.rank; ++j)
    for (std::size_t r = 0; r < height; ++r) u(r, j) = c.u[j * height + r];
  Matrix vt(c.rank, width, std::vector<double>(c.vt.begin(), c.vt.end()));
  return SvdFactors{std::move(u), std::vector<double>(c.sigma.begin(), c.sigma.end()), std::move(vt)};
}

LowRankImage::LowRankImage(std::size_t height, std::size_t width, std::vector<StoredChannel> channels)
    : height_(height), width_(width), channels_(std::move(channels)) {
  const std::size_t n = channels_.size();
  if (n != 1 && n != 3 && n != 4) {
    throw Error(ErrorKind::InvalidInput, "low-rank image must have 1, 3 or 4 channels, got " + std::to_string(n));
  }
  if (height == 0 || width == 0) throw Error(ErrorKind::InvalidInput, "low-rank image has a zero dimension");
  const std::size_t max_rank = std::min(height, width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = channels_[i];
    const std::string where = "channel " + std::to_string(i);
    if (c.rank == 0 || c.rank > max_rank) {
      throw Error(ErrorKind::InvalidRank, where + " rank " + std::to_string(c.rank) + " outside [1, " +
                                              std::to_string(max_rank) + "]");
    }
    if (c.sigma.size() != c.rank || c.u.size() != height * c.rank || c.vt.size() != c.rank * width) {
      throw Error(ErrorKind::InvalidInput, where + " factor sizes inconsistent with rank and dimensions");
    }
  }
}

std::vector<std::size_t> LowRankImage::ranks() const {
  std::vector<std::size_t> r;
  for (const auto& c : channels_) r.push_back(c.rank);
  return r;
}

// --- compression ----------------------------------------------------------

std::vector<SvdFactors> decompose(const ImageTensor& t) {
  std::vector<SvdFactors> out;
  out.reserve(t.channels());
  for (std::size_t c = 0; c < t.channels(); ++c) {
    try {
      out.push_back(svd(t.plane(c)));
    } catch (const Error& e) {
      throw Error(e.kind(), "channel " + std::to_string(c) + ": " + e.what());
    }
  }
  return out;
}

std::vector<std::size_t> select_ranks(std::span<const SvdFactors> factors, double tolerance) {
  std::vector<std::size_t> ranks;
  for (const auto& f : factors) ranks.push_back(select_rank(f.sigma, tolerance));
  return ranks;
}

LowRankImage compress_factors(std::span<const SvdFactors> factors, std::span<const std::size_t> ranks) {
  if (factors.empty() || factors.size() != ranks.size()) {
    throw Error(ErrorKind::InvalidInput, "one rank per channel is required");
  }
  std::vector<StoredChannel> channels;
  for (std::size_t c = 0; c < factors.size(); ++c) channels.push_back(to_stored(truncate(factors[c], ranks[c])));
  return LowRankImage(factors[0].rows(), factors[0].cols(), std::move(channels));
}

LowRankImage compress(const ImageTensor& t, double tolerance) {
  check_tolerance(tolerance);
  const auto factors = decompose(t);
  const auto ranks = select_ranks(factors, tolerance);
  return compress_factors(factors, ranks);
}

LowRankImage compress_at_rank(const ImageTensor& t, std::size_t k) {
  const std::size_t max_rank = std::min(t.height(), t.width());
  if (k == 0 || k > max_rank) {
    throw Error(ErrorKind::InvalidRank, "rank " + std::to_string(k) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  const auto factors = decompose(t);
  const std::vector<std::size_t> ranks(factors.size(), k);
  return compress_factors(factors, ranks);
}

std::vector<Matrix> reconstruct_planes(const LowRankImage& l) {
  std::vector<Matrix> planes;
  for (std::size_t c = 0; c < l.channel_count(); ++c) {
    planes.push_back(reconstruct(to_factors(l.channel(c), l.height(), l.width())));
  }
  return planes;
}

ImageTensor decompress(const LowRankImage& l) {
  const auto planes = reconstruct_planes(l);
  return clamp_quantize(planes);
}

// --- LRIF -----------------------------------------------------------------

std::uint64_t factor_storage_bytes(const LowRankImage& l) {
  std::uint64_t total = kLrifHeaderBytes;
  for (std::size_t c = 0; c < l.channel_count(); ++c) total += channel_bytes(l.channel(c).rank, l.height(), l.width());
  return total;
}

std::vector<std::uint8_t> encode_lrif(const LowRankImage& l) {
  constexpr std::uint64_t kU32Max = std::numeric_limits<std::uint32_t>::max();
  if (l.width() > kU32Max || l.height() > kU32Max) throw Error(ErrorKind::Encode, "image dimension exceeds 2^32 - 1");
  ByteWriter w;
  w.reserve(static_cast<std::size_t>(factor_storage_bytes(l)));
  for (char ch : kMagic) w.u8(static_cast<std::uint8_t>(ch));
  w.u8(kLrifVersion);
  w.u8(static_cast<std::uint8_t>(l.channel_count()));
  w.u16(0);
  w.u32(static_cast<std::uint32_t>(l.width()));
  w.u32(static_cast<std::uint32_t>(l.height()));
  for (std::size_t c = 0; c < l.channel_count(); ++c) {
    const auto& ch = l.channel(c);
    if (ch.rank > kU32Max) throw Error(ErrorKind::Encode, "rank exceeds 2^32 - 1");
    w.u32(static_cast<std::uint32_t>(ch.rank));
    for (float v : ch.sigma) w.f32(v);
    for (float v : ch.u) w.f32(v);
    for (float v : ch.vt) w.f32(v);
  }
  return w.take();
}

LowRankImage decode_lrif(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin(),
                                      [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
    throw Error(ErrorKind::Format, "missing LRIF magic");
  }
  ByteReader r(bytes);
  r.need(kLrifHeaderBytes);
  for (int i = 0; i < 4; ++i) r.u8();
  const std::uint8_t version = r.u8();
  if (version != kLrifVersion) {
    throw Error(ErrorKind::UnsupportedVersion, "LRIF version " + std::to_string(version) + ", expected " +
                                                   std::to_string(kLrifVersion));
  }
  const std::uint8_t channels = r.u8();
  const std::uint16_t reserved = r.u16();
  const std::uint32_t width = r.u32();
  const std::uint32_t height = r.u32();
  if (channels != 1 && channels != 3 && channels != 4) {
    throw Error(ErrorKind::Format, "LRIF channel count " + std::to_string(channels));
  }
  if (reserved != 0) throw Error(ErrorKind::Format, "LRIF reserved field is nonzero");
  if (width == 0 || height == 0) throw Error(ErrorKind::Format, "LRIF image has a zero dimension");

  const std::uint64_t max_rank = std::min(width, height);
  std::vector<StoredChannel> out;
  for (std::size_t c = 0; c < channels; ++c) {
    const std::string where = "channel " + std::to_string(c);
    const std::size_t rank_at = r.offset();
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > max_rank) {
      throw Error(ErrorKind::CorruptFile, where + " rank " + std::to_string(rank) + " out of range at byte " +
                                              std::to_string(rank_at));
    }
    const std::uint64_t payload = channel_bytes(rank, height, width) - 4;
    if (payload > r.remaining()) r.need(static_cast<std::size_t>(payload));

    StoredChannel ch;
    ch.rank = rank;
    ch.sigma.resize(rank);
    ch.u.resize(static_cast<std::size_t>(height) * rank);
    ch.vt.resize(static_cast<std::size_t>(rank) * width);
    for (float& v : ch.sigma) v = r.f32();
    check_sigma_order(ch.sigma, where);
    for (float& v : ch.u) v = r.f32();
    for (float& v : ch.vt) v = r.f32();
    out.push_back(std::move(ch));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorKind::CorruptFile, std::to_string(r.remaining()) + " surplus bytes at byte " +
                                            std::to_string(r.offset()));
  }
  return LowRankImage(height, width, std::move(out));
}

}  // namespace lowrank
