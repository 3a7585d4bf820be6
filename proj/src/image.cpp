#include "lowrank/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "lowrank/error.hpp"

namespace lowrank {

namespace {

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::round(std::clamp(v, 0.0, 255.0))); }

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::Io, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

ImageTensor from_interleaved(std::span<const std::uint8_t> px, std::size_t h, std::size_t w, std::size_t ch) {
  std::vector<Matrix> planes;
  planes.reserve(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    std::vector<double> d(h * w);
    for (std::size_t i = 0; i < h * w; ++i) d[i] = px[i * ch + c];
    planes.emplace_back(h, w, std::move(d));
  }
  return ImageTensor(std::move(planes));
}

std::vector<std::uint8_t> to_interleaved(const ImageTensor& t) {
  const std::size_t n = t.height() * t.width();
  const std::size_t ch = t.channels();
  std::vector<std::uint8_t> px(n * ch);
  for (std::size_t c = 0; c < ch; ++c) {
    auto d = t.plane(c).data();
    for (std::size_t i = 0; i < n; ++i) px[i * ch + c] = to_byte(d[i]);
  }
  return px;
}

// --- PNM ------------------------------------------------------------------

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> b) : b_(b), pos_(2) {}

  std::size_t next_uint(const char* what) {
    skip_space_and_comments();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) {
      throw Error(ErrorKind::Format, std::string("PNM header: expected ") + what);
    }
    std::size_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + static_cast<std::size_t>(b_[pos_] - '0');
      if (v > (1u << 30)) throw Error(ErrorKind::Format, std::string("PNM header: ") + what + " too large");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
      throw Error(ErrorKind::Format, "PNM header: missing whitespace before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_;
};

ImageTensor decode_pnm(std::span<const std::uint8_t> b) {
  const std::size_t ch = b[1] == '5' ? 1 : 3;
  const char* name = ch == 1 ? "PGM" : "PPM";
  PnmHeaderReader hdr(b);
  const std::size_t w = hdr.next_uint("width");
  const std::size_t h = hdr.next_uint("height");
  const std::size_t maxval = hdr.next_uint("maxval");
  if (w == 0 || h == 0) throw Error(ErrorKind::Format, std::string(name) + " with zero dimension");
  if (maxval != 255) {
    throw Error(ErrorKind::UnsupportedFormat, std::string(name) + " maxval " + std::to_string(maxval));
  }
  const std::size_t off = hdr.raster_offset();
  const std::size_t need = w * h * ch;
  if (b.size() - off < need) {
    throw Error(ErrorKind::CorruptFile, std::string(name) + " raster truncated at byte " + std::to_string(b.size()));
  }
  return from_interleaved(b.subspan(off, need), h, w, ch);
}

// --- PNG ------------------------------------------------------------------

struct PngImage {
  png_image img{};
  PngImage() {
    img.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&img); }
  PngImage(const PngImage&) = delete;
  PngImage& operator=(const PngImage&) = delete;
};

ImageTensor decode_png(std::span<const std::uint8_t> b) {
  PngImage p;
  if (!png_image_begin_read_from_memory(&p.img, b.data(), b.size())) {
    throw Error(ErrorKind::Format, std::string("PNG: ") + p.img.message);
  }
  const auto src = p.img.format;
  if (src & PNG_FORMAT_FLAG_LINEAR) throw Error(ErrorKind::UnsupportedFormat, "PNG 16-bit");
  std::size_t ch = 0;
  if (src & PNG_FORMAT_FLAG_COLOR) {
    ch = (src & PNG_FORMAT_FLAG_ALPHA) ? 4 : 3;
  } else {
    if (src & PNG_FORMAT_FLAG_ALPHA) throw Error(ErrorKind::UnsupportedFormat, "PNG gray+alpha");
    ch = 1;
  }
  p.img.format = ch == 1 ? PNG_FORMAT_GRAY : ch == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(p.img));
  if (!png_image_finish_read(&p.img, nullptr, px.data(), 0, nullptr)) {
    throw Error(ErrorKind::CorruptFile, std::string("PNG: ") + p.img.message);
  }
  return from_interleaved(px, p.img.height, p.img.width, ch);
}

}  // namespace

ImageTensor::ImageTensor(std::vector<Matrix> planes) : planes_(std::move(planes)) {
  const std::size_t ch = planes_.size();
  if (ch != 1 && ch != 3 && ch != 4) {
    throw Error(ErrorKind::InvalidInput, "image must have 1, 3 or 4 channels, got " + std::to_string(ch));
  }
  for (const auto& p : planes_) {
    if (p.rows() != planes_.front().rows() || p.cols() != planes_.front().cols()) {
      throw Error(ErrorKind::InvalidInput, "image planes have differing dimensions");
    }
    for (double v : p.data()) {
      if (v < 0.0 || v > 255.0) throw Error(ErrorKind::InvalidInput, "pixel value outside [0, 255]");
    }
  }
}

ImageTensor decode_image(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    switch (bytes[1]) {
      case '5':
      case '6': return decode_pnm(bytes);
      case '1':
      case '4': throw Error(ErrorKind::UnsupportedFormat, "PBM bitmap");
      case '2': throw Error(ErrorKind::UnsupportedFormat, "ASCII PGM (P2)");
      case '3': throw Error(ErrorKind::UnsupportedFormat, "ASCII PPM (P3)");
      case '7': throw Error(ErrorKind::UnsupportedFormat, "PAM (P7)");
      default: break;
    }
  }
  throw Error(ErrorKind::UnsupportedFormat, "unrecognized image signature");
}

ImageTensor load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_image(bytes);
}

std::vector<std::uint8_t> encode_pnm(const ImageTensor& t) {
  if (t.channels() != 1 && t.channels() != 3) {
    throw Error(ErrorKind::InvalidInput, "PNM output needs 1 or 3 channels, got " + std::to_string(t.channels()));
  }
  const std::string header = std::string(t.channels() == 1 ? "P5" : "P6") + "\n" + std::to_string(t.width()) + " " +
                             std::to_string(t.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const auto px = to_interleaved(t);
  out.insert(out.end(), px.begin(), px.end());
  return out;
}

std::vector<std::uint8_t> encode_png(const ImageTensor& t) {
  PngImage p;
  p.img.width = static_cast<png_uint_32>(t.width());
  p.img.height = static_cast<png_uint_32>(t.height());
  p.img.format = t.channels() == 1 ? PNG_FORMAT_GRAY : t.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA;
  const auto px = to_interleaved(t);
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&p.img, nullptr, &size, 0, px.data(), 0, nullptr)) {
    throw Error(ErrorKind::Encode, std::string("PNG: ") + p.img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&p.img, out.data(), &size, 0, px.data(), 0, nullptr)) {
    throw Error(ErrorKind::Encode, std::string("PNG: ") + p.img.message);
  }
  out.resize(size);
  return out;
}

ImageFormat format_for_path(const std::filesystem::path& path, std::size_t channels) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return ImageFormat::Png;
  if (channels == 1 && (ext == ".pgm" || ext == ".pnm")) return ImageFormat::Pgm;
  if (channels == 3 && (ext == ".ppm" || ext == ".pnm")) return ImageFormat::Ppm;
  return channels == 1 ? ImageFormat::Pgm : channels == 3 ? ImageFormat::Ppm : ImageFormat::Png;
}

void save_image_as(const ImageTensor& t, const std::filesystem::path& path, ImageFormat format) {
  if (format == ImageFormat::Png) {
    write_file(path, encode_png(t));
    return;
  }
  const std::size_t want = format == ImageFormat::Pgm ? 1 : 3;
  if (t.channels() != want) {
    throw Error(ErrorKind::InvalidInput, std::string(format == ImageFormat::Pgm ? "PGM" : "PPM") + " needs " +
                                             std::to_string(want) + " channel(s), got " +
                                             std::to_string(t.channels()));
  }
  write_file(path, encode_pnm(t));
}

void save_image(const ImageTensor& t, const std::filesystem::path& path) {
  const auto format = t.channels() == 1 ? ImageFormat::Pgm : t.channels() == 3 ? ImageFormat::Ppm : ImageFormat::Png;
  save_image_as(t, path, format);
}

ImageTensor to_grayscale(const ImageTensor& t) {
  if (t.channels() != 3) {
    throw Error(ErrorKind::InvalidInput, "grayscale conversion needs 3 channels, got " + std::to_string(t.channels()));
  }
  Matrix gray(t.height(), t.width());
  auto g = gray.data();
  auto r = t.plane(0).data();
  auto gr = t.plane(1).data();
  auto b = t.plane(2).data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = std::clamp(0.299 * r[i] + 0.587 * gr[i] + 0.114 * b[i], 0.0, 255.0);
  }
  return ImageTensor({std::move(gray)});
}

Matrix clamp_quantize(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = std::round(std::clamp(v, 0.0, 255.0));
  return out;
}

ImageTensor clamp_quantize(std::span<const Matrix> planes) {
  std::vector<Matrix> out;
  out.reserve(planes.size());
  for (const auto& p : planes) out.push_back(clamp_quantize(p));
  return ImageTensor(std::move(out));
}

ImageTensor drop_alpha(const ImageTensor& t) {
  if (t.channels() != 4) return t;
  return ImageTensor({t.plane(0), t.plane(1), t.plane(2)});
}

}  // namespace lowrank
