#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/codec.hpp"
#include "lowrank/codec_bridge.hpp"
#include "lowrank/image.hpp"

namespace lowrank {

inline constexpr const char* kSvdFactor = "svd-factor";
inline constexpr const char* kSvdReencoded = "svd-reencoded";
/// Method name on the single row recorded for an image that failed to load.
inline constexpr const char* kSkipMethod = "-";

enum class RecordStatus { Ok, Error, Skipped };

/// One (image, method, tolerance) measurement. Numeric fields are meaningful
/// only when status is Ok.
struct CompressionRecord {
  std::string image_id;
  std::string method;
  double tolerance = 0.0;
  double achieved_error = 0.0;
  std::uint64_t original_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  double ratio = 0.0;
  bool met = false;
  std::vector<std::size_t> rank_per_channel;
  std::optional<double> float_error;  // SVD methods: unquantized reconstruction
  std::optional<int> quality;         // codec methods
  RecordStatus status = RecordStatus::Ok;
  std::string note;

  friend bool operator==(const CompressionRecord&, const CompressionRecord&) = default;
};

struct CurvePoint {
  double tolerance = 0.0;
  double mean_ratio = 0.0;
  double mean_achieved_error = 0.0;
  std::size_t image_count = 0;
  // Means restricted to images where the method met the tolerance.
  std::size_t met_count = 0;
  std::optional<double> mean_ratio_met;
  std::optional<double> mean_achieved_error_met;
};

struct ToleranceCurve {
  std::string method;
  std::vector<CurvePoint> points;
};

struct RunConfig {
  std::optional<std::filesystem::path> corpus;
  ToleranceGrid grid = ToleranceGrid::standard();
  std::vector<std::string> methods = {kSvdFactor, kSvdReencoded, "jpeg", "webp", "jpeg2000"};
  std::map<std::string, CommandTemplate> commands;
  std::map<std::string, QualityRange> quality_ranges;
  std::filesystem::path output_dir = "bench-out";
  int parallelism = 1;
};

/// `key = value` lines, '#' comments. Keys: corpus, grid, methods,
/// output_dir, parallelism, codec.<name>.encode, codec.<name>.decode,
/// codec.<name>.input (png|pnm), codec.<name>.quality (lo..hi). Relative
/// paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Records for every tolerance x method on one image. Method failures become
/// error rows; a load failure becomes a single skip row.
std::vector<CompressionRecord> sweep_image(const std::filesystem::path& path, const std::string& image_id,
                                           const ToleranceGrid& grid, const std::vector<std::string>& methods,
                                           const CodecRegistry& registry);

/// Supported images under `dir` (recursive), as sorted corpus-relative paths.
std::vector<std::string> list_corpus(const std::filesystem::path& dir);

/// Unweighted per-method means over images, one point per grid tolerance.
std::vector<ToleranceCurve> average_curves(const std::vector<CompressionRecord>& records, const ToleranceGrid& grid,
                                           const std::vector<std::string>& methods);

struct RunOptions {
  /// Stop after this many newly processed images (simulates an interruption).
  std::optional<std::size_t> max_new_images;
  std::ostream* log = nullptr;
};

struct BenchResult {
  bool complete = false;
  std::size_t images = 0;
  std::size_t processed = 0;
  std::vector<std::string> methods;
  std::vector<ToleranceCurve> curves;
  std::filesystem::path records_csv;
  std::filesystem::path curves_csv;
  std::vector<std::filesystem::path> plots;
};

inline constexpr const char* kJournalName = "records.journal.csv";

/// Sweeps the corpus, appending each finished image's records to the journal
/// in `output_dir`. Images already complete in the journal are skipped, so an
/// interrupted run resumes where it stopped. Once every image is done, writes
/// records.csv, curves.csv and SVG plots, all byte-deterministic.
BenchResult run_benchmark(const std::filesystem::path& corpus_dir, const RunConfig& config,
                          const RunOptions& options = {});

// CSV persistence.
std::string records_header();
std::string record_row(const CompressionRecord& r);
CompressionRecord parse_record_row(const std::vector<std::string>& fields);
void emit_csv(const std::vector<CompressionRecord>& records, const std::filesystem::path& path);
void emit_csv(const std::vector<ToleranceCurve>& curves, const std::filesystem::path& path);
std::vector<CompressionRecord> read_records_csv(const std::filesystem::path& path);
std::vector<ToleranceCurve> read_curves_csv(const std::filesystem::path& path);

/// Sorts by (image_id, method, tolerance).
void sort_records(std::vector<CompressionRecord>& records);

/// Self-contained SVG line chart of mean ratio against tolerance, one
/// polyline per curve. SVD methods are drawn in orange, codecs in blue.
std::string render_svg_plot(const std::vector<ToleranceCurve>& curves, const std::string& title = "");
void emit_svg_plot(const std::vector<ToleranceCurve>& curves, const std::filesystem::path& path,
                   const std::string& title = "");

}  // namespace lowrank
