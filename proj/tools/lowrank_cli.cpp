#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>

#include "lowrank/bench.hpp"
#include "lowrank/codec.hpp"
#include "lowrank/error.hpp"
#include "lowrank/metrics.hpp"

namespace fs = std::filesystem;
using namespace lowrank;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + p.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + p.string());
}

std::string join_ranks(const std::vector<std::size_t>& ranks) {
  std::string s;
  for (std::size_t i = 0; i < ranks.size(); ++i) s += (i ? "," : "") + std::to_string(ranks[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank SVD image compression and rate-distortion benchmarking"};
  app.require_subcommand(1);

  fs::path in_path;
  fs::path out_path;
  std::optional<double> tolerance;
  std::optional<std::size_t> rank;
  auto* compress_cmd = app.add_subcommand("compress", "Compress an image to an LRIF file");
  compress_cmd->add_option("input", in_path, "PGM, PPM or PNG image")->required();
  compress_cmd->add_option("output", out_path, "LRIF output path")->required();
  auto* tol_opt = compress_cmd->add_option("--tolerance", tolerance, "Target relative Frobenius error in (0, 1]");
  auto* rank_opt = compress_cmd->add_option("--rank", rank, "Fixed rank per channel");
  tol_opt->excludes(rank_opt);

  auto* decompress_cmd = app.add_subcommand("decompress", "Reconstruct an image from an LRIF file");
  decompress_cmd->add_option("input", in_path, "LRIF file")->required();
  decompress_cmd->add_option("output", out_path, "Image output (.png, .pgm, .ppm)")->required();

  fs::path approx_path;
  auto* errormap_cmd = app.add_subcommand("errormap", "Render the per-pixel error between two images");
  errormap_cmd->add_option("original", in_path)->required();
  errormap_cmd->add_option("approx", approx_path)->required();
  errormap_cmd->add_option("output", out_path, "Grayscale map (.png or .pgm)")->required();

  auto* info_cmd = app.add_subcommand("info", "Describe an LRIF file");
  info_cmd->add_option("input", in_path)->required();

  std::string grid_text = "default";
  std::string mode = "factor";
  std::vector<std::string> codecs;
  auto* sweep_cmd = app.add_subcommand("sweep", "Records for one image across the tolerance grid (CSV on stdout)");
  sweep_cmd->add_option("image", in_path)->required();
  sweep_cmd->add_option("--grid", grid_text, "Comma-separated tolerances or 'default'");
  sweep_cmd->add_option("--mode", mode, "SVD size accounting")->check(CLI::IsMember({"factor", "reencoded", "both"}));
  sweep_cmd->add_option("--codec", codecs, "External codec(s) to include, e.g. jpeg webp jpeg2000");
  sweep_cmd->add_option("--out", out_path, "Write CSV here instead of stdout");

  fs::path config_path;
  std::optional<std::size_t> max_images;
  auto* bench_cmd = app.add_subcommand("bench", "Sweep a corpus and write records, curves and plots");
  bench_cmd->add_option("corpus", in_path, "Image directory")->required();
  bench_cmd->add_option("--config", config_path, "Run config file")->required();
  bench_cmd->add_option("--max-images", max_images, "Process at most this many new images, then stop");

  std::string title;
  auto* plot_cmd = app.add_subcommand("plot", "Render a curves CSV as SVG");
  plot_cmd->add_option("curves", in_path)->required();
  plot_cmd->add_option("output", out_path)->required();
  plot_cmd->add_option("--title", title);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compress_cmd) {
      if (!tolerance && !rank) throw Error(ErrorKind::InvalidInput, "compress needs --tolerance or --rank");
      const auto img = load_image(in_path);
      const auto lr = tolerance ? compress(img, *tolerance) : compress_at_rank(img, *rank);
      write_bytes(out_path, encode_lrif(lr));
      const auto planes = reconstruct_planes(lr);
      std::cout << "ranks " << join_ranks(lr.ranks()) << "\n"
                << "bytes " << factor_storage_bytes(lr) << "\n"
                << "float_error " << relative_frobenius_error(img.planes(), planes) << "\n"
                << "achieved_error " << relative_frobenius_error(img, clamp_quantize(planes)) << "\n";
    } else if (*decompress_cmd) {
      const auto img = decompress(decode_lrif(read_bytes(in_path)));
      save_image_as(img, out_path, format_for_path(out_path, img.channels()));
    } else if (*errormap_cmd) {
      const auto a = load_image(in_path);
      const auto b = load_image(approx_path);
      const auto map = error_map(a, b);
      const auto img = render_error_map(map);
      save_image_as(img, out_path, format_for_path(out_path, 1));
      std::cout << "relative_error " << relative_frobenius_error(a, b) << "\n";
    } else if (*info_cmd) {
      const auto bytes = read_bytes(in_path);
      const auto lr = decode_lrif(bytes);
      std::cout << "width " << lr.width() << "\n"
                << "height " << lr.height() << "\n"
                << "channels " << lr.channel_count() << "\n"
                << "ranks " << join_ranks(lr.ranks()) << "\n"
                << "bytes " << bytes.size() << "\n";
    } else if (*sweep_cmd) {
      const auto grid = ToleranceGrid::parse(grid_text);
      std::vector<std::string> methods;
      if (mode == "factor" || mode == "both") methods.push_back(kSvdFactor);
      if (mode == "reencoded" || mode == "both") methods.push_back(kSvdReencoded);
      methods.insert(methods.end(), codecs.begin(), codecs.end());
      const auto registry = CodecRegistry::probe();
      auto records = sweep_image(in_path, in_path.filename().string(), grid, methods, registry);
      if (records.size() == 1 && records.front().status == RecordStatus::Skipped) {
        throw Error(ErrorKind::Io, records.front().note);
      }
      if (!out_path.empty()) {
        emit_csv(records, out_path);
      } else {
        std::cout << records_header() << "\n";
        for (const auto& r : records) std::cout << record_row(r) << "\n";
      }
    } else if (*bench_cmd) {
      auto config = load_config(config_path);
      RunOptions opts;
      opts.max_new_images = max_images;
      opts.log = &std::cerr;
      const auto result = run_benchmark(in_path, config, opts);
      if (!result.complete) {
        std::cout << "processed " << result.processed << " image(s); rerun to resume\n";
      } else {
        std::cout << "records " << result.records_csv.string() << "\n"
                  << "curves " << result.curves_csv.string() << "\n";
        for (const auto& p : result.plots) std::cout << "plot " << p.string() << "\n";
      }
    } else if (*plot_cmd) {
      emit_svg_plot(read_curves_csv(in_path), out_path, title);
    }
  } catch (const std::exception& e) {
    std::cerr << "lowrank: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
