#include "lowrank/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <exception>
#include <fstream>
#include <iostream>
#include <iterator>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

#include "lowrank/csv.hpp"
#include "lowrank/error.hpp"
#include "lowrank/metrics.hpp"

namespace lowrank {

namespace fs = std::filesystem;

namespace {

bool is_svd_method(const std::string& m) { return m == kSvdFactor || m == kSvdReencoded; }

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string single_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CompressionRecord error_row(const std::string& id, const std::string& method, double t, const std::string& why) {
  CompressionRecord r;
  r.image_id = id;
  r.method = method;
  r.tolerance = t;
  r.status = RecordStatus::Error;
  r.note = single_line(why);
  return r;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::Config, "bad integer for " + what + ": '" + s + "'");
  }
  return v;
}

}  // namespace

// --- config ---------------------------------------------------------------

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  RunConfig cfg;
  std::set<std::string> seen;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base_dir / p; };
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!seen.insert(key).second) throw Error(ErrorKind::Config, "duplicate key '" + key + "'");

    if (key == "corpus") {
      cfg.corpus = resolve(value);
    } else if (key == "grid") {
      try {
        cfg.grid = ToleranceGrid::parse(value);
      } catch (const Error& e) {
        throw Error(ErrorKind::Config, std::string("grid: ") + e.what());
      }
    } else if (key == "methods") {
      cfg.methods = split_list(value, ',');
      if (cfg.methods.empty()) throw Error(ErrorKind::Config, "methods list is empty");
      std::set<std::string> uniq(cfg.methods.begin(), cfg.methods.end());
      if (uniq.size() != cfg.methods.size()) throw Error(ErrorKind::Config, "methods list has duplicates");
    } else if (key == "output_dir") {
      cfg.output_dir = resolve(value);
    } else if (key == "parallelism") {
      cfg.parallelism = parse_int(value, key);
      if (cfg.parallelism < 1) throw Error(ErrorKind::Config, "parallelism must be at least 1");
    } else if (key.starts_with("codec.")) {
      const auto dot = key.rfind('.');
      const std::string name = key.substr(6, dot > 6 ? dot - 6 : 0);
      const std::string field = key.substr(dot + 1);
      if (name.empty() || dot <= 6) throw Error(ErrorKind::Config, "unknown key '" + key + "'");
      if (field == "encode") {
        cfg.commands[name].encode = value;
      } else if (field == "decode") {
        cfg.commands[name].decode = value;
      } else if (field == "input") {
        if (value == "png")
          cfg.commands[name].input_format = ImageFormat::Png;
        else if (value == "pnm" || value == "ppm")
          cfg.commands[name].input_format = ImageFormat::Ppm;
        else
          throw Error(ErrorKind::Config, key + " must be png or pnm");
      } else if (field == "quality") {
        const auto sep = value.find("..");
        if (sep == std::string::npos) throw Error(ErrorKind::Config, key + " must look like lo..hi");
        cfg.quality_ranges[name] = QualityRange{parse_int(trim(value.substr(0, sep)), key),
                                                parse_int(trim(value.substr(sep + 2)), key)};
      } else {
        throw Error(ErrorKind::Config, "unknown key '" + key + "'");
      }
    } else {
      throw Error(ErrorKind::Config, "unknown key '" + key + "'");
    }
  }
  for (const auto& [name, tpl] : cfg.commands) {
    if (tpl.encode.empty()) throw Error(ErrorKind::Config, "codec." + name + ".encode is required");
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) { return parse_config(read_text(path), path.parent_path()); }

// --- sweep ----------------------------------------------------------------

std::vector<CompressionRecord> sweep_image(const fs::path& path, const std::string& image_id,
                                           const ToleranceGrid& grid, const std::vector<std::string>& methods,
                                           const CodecRegistry& registry) {
  std::vector<CompressionRecord> out;
  std::optional<ImageTensor> loaded;
  try {
    loaded = load_image(path);
  } catch (const std::exception& e) {
    CompressionRecord r;
    r.image_id = image_id;
    r.method = kSkipMethod;
    r.status = RecordStatus::Skipped;
    r.note = single_line(e.what());
    return {r};
  }
  const ImageTensor& img = *loaded;
  const std::uint64_t original_png = encode_png(img).size();

  std::optional<std::vector<SvdFactors>> factors;
  std::string svd_failure;
  if (std::any_of(methods.begin(), methods.end(), is_svd_method)) {
    try {
      factors = decompose(img);
    } catch (const std::exception& e) {
      svd_failure = e.what();
    }
  }

  for (const auto& method : methods) {
    if (is_svd_method(method)) {
      for (double t : grid.values()) {
        if (!factors) {
          out.push_back(error_row(image_id, method, t, svd_failure));
          continue;
        }
        try {
          const auto ranks = select_ranks(*factors, t);
          const auto lr = compress_factors(*factors, ranks);
          const auto planes = reconstruct_planes(lr);
          const auto quantized = clamp_quantize(planes);
          CompressionRecord r;
          r.image_id = image_id;
          r.method = method;
          r.tolerance = t;
          r.float_error = relative_frobenius_error(img.planes(), planes);
          r.achieved_error = relative_frobenius_error(img, quantized);
          r.original_bytes = original_png;
          r.compressed_bytes = method == kSvdFactor ? factor_storage_bytes(lr) : encode_png(quantized).size();
          r.ratio = compression_ratio(r.original_bytes, r.compressed_bytes);
          r.met = *r.float_error <= t;
          r.rank_per_channel = ranks;
          out.push_back(std::move(r));
        } catch (const std::exception& e) {
          out.push_back(error_row(image_id, method, t, e.what()));
        }
      }
      continue;
    }

    const CodecHandle* codec = registry.find(method);
    if (codec == nullptr || !codec->available) {
      const std::string why = codec == nullptr ? "unknown codec " + method : codec->unavailable_reason;
      for (double t : grid.values()) out.push_back(error_row(image_id, method, t, why));
      continue;
    }
    const bool drop = img.channels() == 4 && !codec->supports_alpha;
    const ImageTensor subject = drop ? drop_alpha(img) : img;
    const std::uint64_t baseline = drop ? encode_png(subject).size() : original_png;
    ProbeCache probes(make_probe(*codec, subject));
    for (double t : grid.values()) {
      try {
        const auto res = search_quality(codec->quality_range, t, probes);
        CompressionRecord r;
        r.image_id = image_id;
        r.method = method;
        r.tolerance = t;
        r.achieved_error = res.achieved_error;
        r.original_bytes = baseline;
        r.compressed_bytes = res.bytes;
        r.ratio = compression_ratio(baseline, res.bytes);
        r.met = res.met;
        r.quality = res.quality;
        if (drop) r.note = "alpha dropped";
        out.push_back(std::move(r));
      } catch (const std::exception& e) {
        out.push_back(error_row(image_id, method, t, e.what()));
      }
    }
  }
  return out;
}

std::vector<std::string> list_corpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "corpus directory " + dir.string() + " not found");
  std::vector<std::string> ids;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
      ids.push_back(fs::relative(entry.path(), dir).generic_string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// --- curves ---------------------------------------------------------------

std::vector<ToleranceCurve> average_curves(const std::vector<CompressionRecord>& records, const ToleranceGrid& grid,
                                           const std::vector<std::string>& methods) {
  std::vector<ToleranceCurve> curves;
  for (const auto& method : methods) {
    ToleranceCurve curve{method, {}};
    for (double t : grid.values()) {
      CurvePoint p;
      p.tolerance = t;
      double ratio_sum = 0.0;
      double err_sum = 0.0;
      double ratio_met = 0.0;
      double err_met = 0.0;
      for (const auto& r : records) {
        if (r.status != RecordStatus::Ok || r.method != method || r.tolerance != t) continue;
        ++p.image_count;
        ratio_sum += r.ratio;
        err_sum += r.achieved_error;
        if (r.met) {
          ++p.met_count;
          ratio_met += r.ratio;
          err_met += r.achieved_error;
        }
      }
      if (p.image_count > 0) {
        p.mean_ratio = ratio_sum / static_cast<double>(p.image_count);
        p.mean_achieved_error = err_sum / static_cast<double>(p.image_count);
      }
      if (p.met_count > 0) {
        p.mean_ratio_met = ratio_met / static_cast<double>(p.met_count);
        p.mean_achieved_error_met = err_met / static_cast<double>(p.met_count);
      }
      curve.points.push_back(p);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

// --- CSV ------------------------------------------------------------------

std::string records_header() {
  return "image_id,method,tolerance,achieved_error,original_bytes,compressed_bytes,ratio,met,rank_per_channel,"
         "float_error,quality,status";
}

std::string record_row(const CompressionRecord& r) {
  const bool ok = r.status == RecordStatus::Ok;
  const bool skipped = r.status == RecordStatus::Skipped;
  std::string ranks;
  for (std::size_t i = 0; i < r.rank_per_channel.size(); ++i) {
    if (i) ranks += ';';
    ranks += std::to_string(r.rank_per_channel[i]);
  }
  std::string status = ok ? "ok" : skipped ? "skipped" : "error";
  if (!r.note.empty()) status += ": " + r.note;
  return csv::join_row({
      r.image_id,
      r.method,
      skipped ? "" : csv::format_double(r.tolerance),
      ok ? csv::format_double(r.achieved_error) : "",
      ok ? std::to_string(r.original_bytes) : "",
      ok ? std::to_string(r.compressed_bytes) : "",
      ok ? csv::format_double(r.ratio) : "",
      ok ? (r.met ? "true" : "false") : "",
      ok ? ranks : "",
      ok && r.float_error ? csv::format_double(*r.float_error) : "",
      ok && r.quality ? std::to_string(*r.quality) : "",
      status,
  });
}

CompressionRecord parse_record_row(const std::vector<std::string>& f) {
  if (f.size() != 12) throw Error(ErrorKind::Format, "records row has " + std::to_string(f.size()) + " fields");
  CompressionRecord r;
  r.image_id = f[0];
  r.method = f[1];
  const std::string& status = f[11];
  const auto colon = status.find(": ");
  const std::string kind = status.substr(0, colon);
  if (colon != std::string::npos) r.note = status.substr(colon + 2);
  if (kind == "ok")
    r.status = RecordStatus::Ok;
  else if (kind == "error")
    r.status = RecordStatus::Error;
  else if (kind == "skipped")
    r.status = RecordStatus::Skipped;
  else
    throw Error(ErrorKind::Format, "bad status '" + status + "'");

  if (r.status != RecordStatus::Skipped) r.tolerance = csv::parse_double(f[2]);
  if (r.status != RecordStatus::Ok) return r;
  auto to_u64 = [](const std::string& s) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw Error(ErrorKind::Format, "bad integer '" + s + "'");
    }
    return v;
  };
  r.achieved_error = csv::parse_double(f[3]);
  r.original_bytes = to_u64(f[4]);
  r.compressed_bytes = to_u64(f[5]);
  r.ratio = csv::parse_double(f[6]);
  if (f[7] != "true" && f[7] != "false") throw Error(ErrorKind::Format, "bad met flag '" + f[7] + "'");
  r.met = f[7] == "true";
  for (const auto& k : split_list(f[8], ';')) r.rank_per_channel.push_back(static_cast<std::size_t>(to_u64(k)));
  if (!f[9].empty()) r.float_error = csv::parse_double(f[9]);
  if (!f[10].empty()) r.quality = static_cast<int>(to_u64(f[10]));
  return r;
}

void sort_records(std::vector<CompressionRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const CompressionRecord& a, const CompressionRecord& b) {
    return std::tie(a.image_id, a.method, a.tolerance) < std::tie(b.image_id, b.method, b.tolerance);
  });
}

void emit_csv(const std::vector<CompressionRecord>& records, const fs::path& path) {
  std::string text = records_header() + "\n";
  for (const auto& r : records) text += record_row(r) + "\n";
  write_text(path, text);
}

namespace {

std::string curves_header() {
  return "method,tolerance,mean_ratio,mean_achieved_error,image_count,met_count,mean_ratio_met,"
         "mean_achieved_error_met";
}

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

}  // namespace

void emit_csv(const std::vector<ToleranceCurve>& curves, const fs::path& path) {
  std::string text = curves_header() + "\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) {
      text += csv::join_row({c.method, csv::format_double(p.tolerance), csv::format_double(p.mean_ratio),
                             csv::format_double(p.mean_achieved_error), std::to_string(p.image_count),
                             std::to_string(p.met_count), opt(p.mean_ratio_met), opt(p.mean_achieved_error_met)}) +
              "\n";
    }
  write_text(path, text);
}

std::vector<CompressionRecord> read_records_csv(const fs::path& path) {
  const std::string text = read_text(path);
  const auto lines = csv::complete_lines(text);
  if (lines.empty() || csv::split_row(lines.front()) != csv::split_row(records_header())) {
    throw Error(ErrorKind::Format, path.string() + " is not a records CSV");
  }
  std::vector<CompressionRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) out.push_back(parse_record_row(csv::split_row(lines[i])));
  return out;
}

std::vector<ToleranceCurve> read_curves_csv(const fs::path& path) {
  const std::string text = read_text(path);
  const auto lines = csv::complete_lines(text);
  if (lines.empty() || csv::split_row(lines.front()) != csv::split_row(curves_header())) {
    throw Error(ErrorKind::Format, path.string() + " is not a curves CSV");
  }
  std::vector<ToleranceCurve> curves;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = csv::split_row(lines[i]);
    if (f.size() != 8) throw Error(ErrorKind::Format, "curves row " + std::to_string(i) + " malformed");
    if (curves.empty() || curves.back().method != f[0]) curves.push_back({f[0], {}});
    CurvePoint p;
    p.tolerance = csv::parse_double(f[1]);
    p.mean_ratio = csv::parse_double(f[2]);
    p.mean_achieved_error = csv::parse_double(f[3]);
    p.image_count = static_cast<std::size_t>(csv::parse_double(f[4]));
    p.met_count = static_cast<std::size_t>(csv::parse_double(f[5]));
    if (!f[6].empty()) p.mean_ratio_met = csv::parse_double(f[6]);
    if (!f[7].empty()) p.mean_achieved_error_met = csv::parse_double(f[7]);
    curves.back().points.push_back(p);
  }
  return curves;
}

// --- benchmark run ---------------------------------------------------------

namespace {

using ImageRecords = std::map<std::string, std::vector<CompressionRecord>>;

bool is_complete(const std::vector<CompressionRecord>& recs, const std::set<std::pair<std::string, double>>& expected) {
  if (recs.size() == 1 && recs.front().status == RecordStatus::Skipped) return true;
  std::set<std::pair<std::string, double>> have;
  for (const auto& r : recs) {
    if (r.status == RecordStatus::Skipped) return false;
    have.emplace(r.method, r.tolerance);
  }
  return have == expected && recs.size() == expected.size();
}

// Journal rows grouped per image, keeping only images with a complete record set.
ImageRecords load_journal(const fs::path& path, const std::set<std::string>& corpus,
                          const std::set<std::pair<std::string, double>>& expected) {
  ImageRecords grouped;
  if (!fs::exists(path)) return grouped;
  const std::string text = read_text(path);
  const auto lines = csv::complete_lines(text);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      auto r = parse_record_row(csv::split_row(lines[i]));
      if (corpus.contains(r.image_id)) grouped[r.image_id].push_back(std::move(r));
    } catch (const Error&) {
      // Torn or foreign rows are dropped; their images get redone.
    }
  }
  std::erase_if(grouped, [&](const auto& kv) { return !is_complete(kv.second, expected); });
  return grouped;
}

std::string plot_file_name(const std::string& codec) {
  std::string safe;
  for (char c : codec) safe += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return "svd_vs_" + safe + ".svg";
}

}  // namespace

BenchResult run_benchmark(const fs::path& corpus_dir, const RunConfig& config, const RunOptions& options) {
  const auto images = list_corpus(corpus_dir);
  if (images.empty()) throw Error(ErrorKind::EmptyCorpus, "no PNG/PGM/PPM images under " + corpus_dir.string());

  const auto registry = CodecRegistry::probe(config.commands, config.quality_ranges);
  BenchResult result;
  for (const auto& m : config.methods) {
    if (is_svd_method(m)) {
      result.methods.push_back(m);
      continue;
    }
    const CodecHandle* h = registry.find(m);
    if (h == nullptr) throw Error(ErrorKind::Config, "unknown method '" + m + "'");
    if (!h->available) {
      if (options.log) *options.log << "warning: skipping codec " << m << ": " << h->unavailable_reason << "\n";
      continue;
    }
    result.methods.push_back(m);
  }

  std::set<std::pair<std::string, double>> expected;
  for (const auto& m : result.methods)
    for (double t : config.grid.values()) expected.emplace(m, t);

  fs::create_directories(config.output_dir);
  const fs::path journal = config.output_dir / kJournalName;
  const std::set<std::string> corpus(images.begin(), images.end());
  const ImageRecords done = load_journal(journal, corpus, expected);

  // Rewrite the journal so it holds only complete images, then append.
  {
    std::string text = records_header() + "\n";
    for (const auto& [id, recs] : done)
      for (const auto& r : recs) text += record_row(r) + "\n";
    const fs::path tmp = journal.string() + ".tmp";
    write_text(tmp, text);
    fs::rename(tmp, journal);
  }

  std::vector<std::string> pending;
  for (const auto& id : images)
    if (!done.contains(id)) pending.push_back(id);
  if (options.max_new_images && pending.size() > *options.max_new_images) pending.resize(*options.max_new_images);

  std::ofstream sink(journal, std::ios::binary | std::ios::app);
  if (!sink) throw Error(ErrorKind::Io, "cannot append to " + journal.string());

  std::exception_ptr failure;
  std::mutex writer;
  std::size_t processed = 0;
  const auto count = static_cast<std::ptrdiff_t>(pending.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.parallelism)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      const auto& id = pending[static_cast<std::size_t>(i)];
      const auto recs = sweep_image(corpus_dir / id, id, config.grid, result.methods, registry);
      std::string text;
      for (const auto& r : recs) text += record_row(r) + "\n";
      std::lock_guard lock(writer);
      sink << text << std::flush;
      ++processed;
      if (options.log) {
        *options.log << "[" << processed << "/" << pending.size() << "] " << id
                     << (recs.size() == 1 && recs.front().status == RecordStatus::Skipped ? " (skipped: " + recs.front().note + ")" : "")
                     << "\n";
      }
    } catch (...) {
      std::lock_guard lock(writer);
      if (!failure) failure = std::current_exception();
    }
  }
  sink.close();
  if (failure) std::rethrow_exception(failure);

  result.images = images.size();
  result.processed = processed;
  const ImageRecords all = load_journal(journal, corpus, expected);
  if (all.size() != images.size()) return result;

  std::vector<CompressionRecord> records;
  for (const auto& [id, recs] : all) records.insert(records.end(), recs.begin(), recs.end());
  sort_records(records);

  result.complete = true;
  result.records_csv = config.output_dir / "records.csv";
  result.curves_csv = config.output_dir / "curves.csv";
  emit_csv(records, result.records_csv);
  result.curves = average_curves(records, config.grid, result.methods);
  emit_csv(result.curves, result.curves_csv);

  if (config.grid.size() >= 2) {
    const fs::path all_plot = config.output_dir / "curves.svg";
    emit_svg_plot(result.curves, all_plot, "Compression ratio vs relative Frobenius error");
    result.plots.push_back(all_plot);
    for (const auto& codec : result.curves) {
      if (is_svd_method(codec.method)) continue;
      std::vector<ToleranceCurve> pair;
      for (const auto& c : result.curves)
        if (is_svd_method(c.method)) pair.push_back(c);
      pair.push_back(codec);
      const fs::path p = config.output_dir / plot_file_name(codec.method);
      emit_svg_plot(pair, p, "SVD vs " + codec.method);
      result.plots.push_back(p);
    }
  }
  return result;
}

}  // namespace lowrank
