#include "lowrank/codec_bridge.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "lowrank/codec.hpp"
#include "lowrank/error.hpp"
#include "lowrank/metrics.hpp"

namespace lowrank {

namespace fs = std::filesystem;

namespace {

cv::Mat to_cv(const ImageTensor& t) {
  const int ch = static_cast<int>(t.channels());
  cv::Mat m(static_cast<int>(t.height()), static_cast<int>(t.width()), CV_8UC(ch));
  // OpenCV orders color channels B, G, R, A.
  static constexpr int kOrder[4] = {2, 1, 0, 3};
  for (int r = 0; r < m.rows; ++r) {
    auto* px = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < m.cols; ++c)
      for (int k = 0; k < ch; ++k) {
        const int src = ch == 1 ? 0 : kOrder[k];
        px[c * ch + k] = static_cast<std::uint8_t>(t.plane(static_cast<std::size_t>(src))(r, c));
      }
  }
  return m;
}

ImageTensor from_cv(const cv::Mat& m) {
  const int ch = m.channels();
  static constexpr int kOrder[4] = {2, 1, 0, 3};
  std::vector<Matrix> planes;
  for (int k = 0; k < ch; ++k) planes.emplace_back(static_cast<std::size_t>(m.rows), static_cast<std::size_t>(m.cols));
  for (int r = 0; r < m.rows; ++r) {
    const auto* px = m.ptr<std::uint8_t>(r);
    for (int c = 0; c < m.cols; ++c)
      for (int k = 0; k < ch; ++k) {
        const int dst = ch == 1 ? 0 : kOrder[k];
        planes[static_cast<std::size_t>(dst)](r, c) = px[c * ch + k];
      }
  }
  return ImageTensor(std::move(planes));
}

EncodedImage builtin_round_trip(const CodecHandle& codec, const ImageTensor& t, int quality) {
  std::vector<std::uint8_t> buf;
  const std::vector<int> params = {codec.quality_flag, quality};
  try {
    if (!cv::imencode(codec.extension, to_cv(t), buf, params)) {
      throw Error(ErrorKind::Bridge, codec.name + " encoder rejected the image");
    }
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::Bridge, codec.name + " encoder failed: " + e.what());
  }
  const int mode = t.channels() == 1 ? cv::IMREAD_GRAYSCALE : t.channels() == 3 ? cv::IMREAD_COLOR : cv::IMREAD_UNCHANGED;
  const cv::Mat decoded = cv::imdecode(buf, mode);
  // libwebp leaves out an alpha plane that is entirely opaque.
  const auto alpha = t.channels() == 4 ? t.plane(3).data() : std::span<const double>{};
  const bool opaque = !alpha.empty() && std::all_of(alpha.begin(), alpha.end(), [](double a) { return a == 255.0; });
  if (opaque && !decoded.empty() && decoded.channels() == 3) {
    const ImageTensor rgb = from_cv(decoded);
    std::vector<Matrix> with_alpha(rgb.planes().begin(), rgb.planes().end());
    with_alpha.emplace_back(t.height(), t.width(), 255.0);
    return EncodedImage{buf.size(), ImageTensor(std::move(with_alpha))};
  }
  if (decoded.empty() || decoded.depth() != CV_8U || decoded.channels() != static_cast<int>(t.channels())) {
    throw Error(ErrorKind::Bridge, codec.name + " output did not decode to the input's channel layout");
  }
  return EncodedImage{buf.size(), from_cv(decoded)};
}

// Owns a private scratch directory for one bridge call.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("lowrank-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const noexcept { return path_; }

 private:
  fs::path path_;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::string substitute(std::string tpl, const std::string& key, const std::string& value) {
  for (std::size_t pos = tpl.find(key); pos != std::string::npos; pos = tpl.find(key, pos + value.size())) {
    tpl.replace(pos, key.size(), value);
  }
  return tpl;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void run_command(const std::string& codec, const std::string& cmd, const fs::path& err_file) {
  const std::string full = cmd + " 2> " + shell_quote(err_file.string());
  const int status = std::system(full.c_str());
  if (status != 0) {
    const auto err = slurp(err_file);
    std::string diag(err.begin(), err.end());
    if (diag.size() > 400) diag.resize(400);
    throw Error(ErrorKind::Bridge, codec + " command failed (status " + std::to_string(status) + "): " + cmd +
                                       (diag.empty() ? "" : " :: " + diag));
  }
}

EncodedImage command_round_trip(const CodecHandle& codec, const ImageTensor& t, int quality) {
  const CommandTemplate& tpl = *codec.command;
  ScratchDir dir;
  const fs::path input = dir.path() / (tpl.input_format == ImageFormat::Png ? "input.png" : "input.pnm");
  const fs::path encoded = dir.path() / "encoded.bin";
  const fs::path decoded = dir.path() / "decoded.img";
  const fs::path err = dir.path() / "stderr.txt";
  save_image_as(t, input, tpl.input_format == ImageFormat::Png ? ImageFormat::Png
                          : t.channels() == 1                 ? ImageFormat::Pgm
                                                              : ImageFormat::Ppm);

  std::string enc = substitute(tpl.encode, "{input}", shell_quote(input.string()));
  enc = substitute(enc, "{output}", shell_quote(encoded.string()));
  enc = substitute(enc, "{quality}", std::to_string(quality));
  run_command(codec.name, enc, err);
  const auto bytes = slurp(encoded);
  if (bytes.empty()) throw Error(ErrorKind::Bridge, codec.name + " produced no output");

  ImageTensor out = [&] {
    if (tpl.decode.empty()) return decode_image(bytes);
    std::string dec = substitute(tpl.decode, "{input}", shell_quote(encoded.string()));
    dec = substitute(dec, "{output}", shell_quote(decoded.string()));
    run_command(codec.name, dec, err);
    return load_image(decoded);
  }();
  if (out.channels() != t.channels() && t.channels() == 1 && out.channels() == 3) out = to_grayscale(out);
  if (out.height() != t.height() || out.width() != t.width() || out.channels() != t.channels()) {
    throw Error(ErrorKind::Bridge, codec.name + " round trip changed the image geometry");
  }
  return EncodedImage{bytes.size(), std::move(out)};
}

bool on_path(const std::string& command) {
  std::istringstream words(command);
  std::string exe;
  words >> exe;
  if (exe.empty()) return false;
  if (exe.find('/') != std::string::npos) return ::access(exe.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::istringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (!dir.empty() && ::access((fs::path(dir) / exe).c_str(), X_OK) == 0) return true;
  }
  return false;
}

// Encodes a small gradient to confirm the backend works and whether alpha survives.
void probe_builtin(CodecHandle& h) {
  if (!cv::haveImageWriter(h.extension)) {
    h.unavailable_reason = "OpenCV has no " + h.extension + " writer";
    return;
  }
  std::vector<Matrix> planes;
  for (int k = 0; k < 4; ++k) {
    // OpenJPEG's default five decomposition levels need at least 32 px per side.
    Matrix p(64, 64);
    for (std::size_t r = 0; r < 64; ++r)
      for (std::size_t c = 0; c < 64; ++c) p(r, c) = static_cast<double>((r * 29 + c * 13 + static_cast<std::size_t>(k) * 50) % 256);
    planes.push_back(std::move(p));
  }
  try {
    builtin_round_trip(h, ImageTensor({planes[0], planes[1], planes[2]}), h.quality_range.max);
    h.available = true;
  } catch (const Error& e) {
    h.unavailable_reason = e.what();
    return;
  }
  try {
    builtin_round_trip(h, ImageTensor(planes), h.quality_range.max);
    h.supports_alpha = true;
  } catch (const Error&) {
    h.supports_alpha = false;
  }
}

}  // namespace

CodecRegistry CodecRegistry::probe(const std::map<std::string, CommandTemplate>& commands,
                                   const std::map<std::string, QualityRange>& ranges) {
  CodecRegistry reg;
  const CodecHandle builtins[] = {
      {"jpeg", {0, 100}, false, false, "", ".jpg", cv::IMWRITE_JPEG_QUALITY, std::nullopt},
      {"webp", {1, 100}, false, false, "", ".webp", cv::IMWRITE_WEBP_QUALITY, std::nullopt},
      {"jpeg2000", {0, 1000}, false, false, "", ".jp2", cv::IMWRITE_JPEG2000_COMPRESSION_X1000, std::nullopt},
  };
  for (CodecHandle h : builtins) {
    if (commands.contains(h.name)) continue;
    if (auto it = ranges.find(h.name); it != ranges.end()) h.quality_range = it->second;
    probe_builtin(h);
    reg.codecs_.push_back(std::move(h));
  }
  for (const auto& [name, tpl] : commands) {
    CodecHandle h;
    h.name = name;
    if (auto it = ranges.find(name); it != ranges.end()) h.quality_range = it->second;
    h.command = tpl;
    h.supports_alpha = tpl.input_format == ImageFormat::Png;
    h.available = on_path(tpl.encode) && (tpl.decode.empty() || on_path(tpl.decode));
    if (!h.available) h.unavailable_reason = "encoder or decoder program not found on PATH";
    reg.codecs_.push_back(std::move(h));
  }
  for (const auto& h : reg.codecs_) {
    if (h.quality_range.min > h.quality_range.max) {
      throw Error(ErrorKind::Config, "codec " + h.name + " has an empty quality range");
    }
  }
  return reg;
}

const CodecHandle* CodecRegistry::find(const std::string& name) const {
  for (const auto& h : codecs_)
    if (h.name == name) return &h;
  return nullptr;
}

const CodecHandle& CodecRegistry::get(const std::string& name) const {
  const auto* h = find(name);
  if (h == nullptr) throw Error(ErrorKind::Unavailable, "unknown codec '" + name + "'");
  return *h;
}

EncodedImage encode_decode(const CodecHandle& codec, const ImageTensor& t, int quality) {
  if (!codec.available) {
    throw Error(ErrorKind::Unavailable, codec.name + " backend missing: " + codec.unavailable_reason);
  }
  if (quality < codec.quality_range.min || quality > codec.quality_range.max) {
    throw Error(ErrorKind::InvalidInput, codec.name + " quality " + std::to_string(quality) + " outside [" +
                                             std::to_string(codec.quality_range.min) + ", " +
                                             std::to_string(codec.quality_range.max) + "]");
  }
  if (t.channels() == 4 && !codec.supports_alpha) {
    throw Error(ErrorKind::InvalidInput, codec.name + " does not support an alpha channel");
  }
  return codec.command ? command_round_trip(codec, t, quality) : builtin_round_trip(codec, t, quality);
}

const CodecProbe& ProbeCache::at(int quality) {
  auto it = seen_.find(quality);
  if (it == seen_.end()) it = seen_.emplace(quality, probe_(quality)).first;
  return it->second;
}

namespace {

// Fewest bytes among qualities meeting the tolerance; ties go to the lower quality.
std::optional<CodecResult> best_meeting(const std::vector<int>& qualities, double tolerance, ProbeCache& probes) {
  std::optional<CodecResult> best;
  for (int q : qualities) {
    const auto& p = probes.at(q);
    if (p.error > tolerance) continue;
    if (!best || p.bytes < best->bytes || (p.bytes == best->bytes && q < best->quality)) {
      best = CodecResult{p.bytes, q, p.error, true};
    }
  }
  return best;
}

// Lowest error; ties go to fewer bytes, then lower quality.
CodecResult best_unmet(QualityRange range, ProbeCache& probes) {
  CodecResult best{};
  bool first = true;
  for (int q = range.min; q <= range.max; ++q) {
    const auto& p = probes.at(q);
    if (first || p.error < best.achieved_error || (p.error == best.achieved_error && p.bytes < best.bytes)) {
      best = CodecResult{p.bytes, q, p.error, false};
      first = false;
    }
  }
  return best;
}

}  // namespace

CodecResult search_quality(QualityRange range, double tolerance, ProbeCache& probes) {
  check_tolerance(tolerance);
  if (probes.at(range.max).error > tolerance) return best_unmet(range, probes);

  std::vector<int> probed = {range.max};
  int lo = range.min;
  int hi = range.max;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    probed.push_back(mid);
    if (probes.at(mid).error <= tolerance)
      hi = mid;
    else
      lo = mid + 1;
  }
  for (int q = std::max(range.min, lo - 2); q <= std::min(range.max, lo + 2); ++q) probed.push_back(q);
  // Non-empty: range.max met the tolerance.
  return *best_meeting(probed, tolerance, probes);
}

CodecResult exhaustive_quality_scan(QualityRange range, double tolerance, ProbeCache& probes) {
  check_tolerance(tolerance);
  std::vector<int> all;
  for (int q = range.min; q <= range.max; ++q) all.push_back(q);
  if (auto best = best_meeting(all, tolerance, probes)) return *best;
  return best_unmet(range, probes);
}

ProbeCache::Probe make_probe(const CodecHandle& codec, const ImageTensor& t) {
  return [&codec, &t](int quality) {
    const auto enc = encode_decode(codec, t, quality);
    return CodecProbe{enc.bytes, relative_frobenius_error(t, enc.decoded)};
  };
}

CodecResult match_error_tolerance(const CodecHandle& codec, const ImageTensor& t, double tolerance) {
  check_tolerance(tolerance);
  ProbeCache probes(make_probe(codec, t));
  return search_quality(codec.quality_range, tolerance, probes);
}

}  // namespace lowrank
