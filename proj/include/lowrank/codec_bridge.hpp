#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/image.hpp"

namespace lowrank {

struct QualityRange {
  int min = 0;
  int max = 100;
};

/// External encoder reached through shell command templates. `{input}`,
/// `{output}` and `{quality}` are substituted; the decode template is
/// optional when the encoder's output is itself PNG or PNM.
struct CommandTemplate {
  std::string encode;
  std::string decode;
  ImageFormat input_format = ImageFormat::Png;
};

struct CodecHandle {
  std::string name;
  QualityRange quality_range;
  bool available = false;
  bool supports_alpha = false;
  std::string unavailable_reason;

  // Built-in (OpenCV) backend when `command` is empty.
  std::string extension;
  int quality_flag = 0;
  std::optional<CommandTemplate> command;
};

/// Codec registry, probed once and read-only afterwards.
class CodecRegistry {
 public:
  /// Built-in jpeg, webp and jpeg2000 plus any command-template codecs.
  static CodecRegistry probe(const std::map<std::string, CommandTemplate>& commands = {},
                             const std::map<std::string, QualityRange>& ranges = {});

  const CodecHandle& get(const std::string& name) const;
  const CodecHandle* find(const std::string& name) const;
  const std::vector<CodecHandle>& codecs() const noexcept { return codecs_; }

 private:
  std::vector<CodecHandle> codecs_;
};

struct EncodedImage {
  std::uint64_t bytes = 0;
  ImageTensor decoded;
};

/// One encode + decode round trip at the given quality.
EncodedImage encode_decode(const CodecHandle& codec, const ImageTensor& t, int quality);

struct CodecProbe {
  std::uint64_t bytes = 0;
  double error = 0.0;
};

struct CodecResult {
  std::uint64_t bytes = 0;
  int quality = 0;
  double achieved_error = 0.0;
  bool met = false;
};

/// Memoized probes for one (codec, image) pair.
class ProbeCache {
 public:
  using Probe = std::function<CodecProbe(int)>;
  explicit ProbeCache(Probe probe) : probe_(std::move(probe)) {}

  const CodecProbe& at(int quality);
  std::size_t size() const noexcept { return seen_.size(); }

 private:
  Probe probe_;
  std::map<int, CodecProbe> seen_;
};

/// Binary search for the lowest quality meeting `tolerance` (error assumed
/// non-increasing in quality), then a +-2 verification window. Picks the
/// fewest bytes among probed qualities that meet the tolerance. If the
/// highest quality misses, every quality is probed and the lowest-error
/// result is returned with met = false.
CodecResult search_quality(QualityRange range, double tolerance, ProbeCache& probes);

/// Probes every quality. The oracle for search_quality.
CodecResult exhaustive_quality_scan(QualityRange range, double tolerance, ProbeCache& probes);

/// Probe function measuring bytes and relative error of `codec` on `t`.
ProbeCache::Probe make_probe(const CodecHandle& codec, const ImageTensor& t);

CodecResult match_error_tolerance(const CodecHandle& codec, const ImageTensor& t, double tolerance);

}  // namespace lowrank
