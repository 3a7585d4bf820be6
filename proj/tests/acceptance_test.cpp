// Acceptance run: one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "lowrank/bench.hpp"
#include "lowrank/codec.hpp"
#include "lowrank/error.hpp"
#include "lowrank/metrics.hpp"
#include "support.hpp"

using namespace lowrank;
namespace fs = std::filesystem;

namespace {

const ToleranceGrid kGrid = ToleranceGrid::standard();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Orthonormal m x k (k <= m) by modified Gram-Schmidt with one reorthogonalization pass.
Matrix random_orthonormal(std::size_t m, std::size_t k, std::mt19937_64& rng) {
  Matrix q = test::random_matrix(m, k, rng);
  for (std::size_t j = 0; j < k; ++j)
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < j; ++p) {
        double d = 0;
        for (std::size_t i = 0; i < m; ++i) d += q(i, p) * q(i, j);
        for (std::size_t i = 0; i < m; ++i) q(i, j) -= d * q(i, p);
      }
      double n = 0;
      for (std::size_t i = 0; i < m; ++i) n += q(i, j) * q(i, j);
      n = std::sqrt(n);
      for (std::size_t i = 0; i < m; ++i) q(i, j) /= n;
    }
  return q;
}

// U diag(s) Vᵀ with random orthonormal U, V.
Matrix with_spectrum(std::size_t m, std::size_t n, const std::vector<double>& s, std::mt19937_64& rng) {
  const std::size_t r = s.size();
  const Matrix u = random_orthonormal(m, r, rng);
  const Matrix v = random_orthonormal(n, r, rng);
  Matrix us = u;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < r; ++j) us(i, j) *= s[j];
  return test::naive_product(us, v.transposed());
}

std::vector<ImageTensor> load_fixtures() {
  std::vector<ImageTensor> out;
  for (const auto& p : test::fixture_paths()) out.push_back(load_image(p));
  return out;
}

Outcome svd_accuracy() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20250101);
  std::uniform_int_distribution<std::size_t> dim(2, 64);
  double worst_recon = 0, worst_orth = 0, worst_sigma = 0;
  std::map<std::string, int> kinds;
  for (int i = 0; i < 100; ++i) {
    std::size_t m = dim(rng), n = dim(rng);
    if (i == 0) m = n = 2;
    if (i == 1) m = n = 64;
    const std::size_t r = std::min(m, n);
    Matrix a(m, n);
    std::string kind;
    if (i % 10 == 3) {
      kind = "rank-deficient";
      const std::size_t rank = std::max<std::size_t>(1, r / 3);
      a = test::naive_product(test::random_matrix(m, rank, rng), test::random_matrix(rank, n, rng));
    } else if (i % 10 == 6) {
      kind = "repeated";
      std::vector<double> s(r);
      for (std::size_t j = 0; j < r; ++j) s[j] = j < r / 2 ? 5.0 : (j < r - 1 ? 2.0 : 0.5);
      a = with_spectrum(m, n, s, rng);
    } else if (i % 10 == 8) {
      kind = "graded";
      std::vector<double> s(r);
      for (std::size_t j = 0; j < r; ++j) s[j] = std::pow(10.0, -12.0 * static_cast<double>(j) / static_cast<double>(std::max<std::size_t>(r - 1, 1)));
      a = with_spectrum(m, n, s, rng);
    } else if (i == 99) {
      kind = "zero";
    } else {
      kind = "dense";
      a = test::random_matrix(m, n, rng, -100, 100);
    }
    ++kinds[kind];
    const auto f = svd(a);
    const double norm = test::naive_norm(a);
    const double recon = norm == 0 ? test::naive_distance(reconstruct(f), a) : test::naive_distance(reconstruct(f), a) / norm;
    const double orth = std::max(column_orthonormality_residual(f.u), row_orthonormality_residual(f.vt));
    const auto want = test::oracle_sigma(a);
    double sig = 0;
    for (std::size_t j = 0; j < r; ++j) sig = std::max(sig, std::fabs(f.sigma[j] - want[j]) / std::max(want[0], 1e-300));
    if (want[0] == 0) sig = f.sigma[0];
    worst_recon = std::max(worst_recon, recon);
    worst_orth = std::max(worst_orth, orth);
    worst_sigma = std::max(worst_sigma, sig);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string mix;
  for (const auto& [k, c] : kinds) mix += fmt(" %s=%d", k.c_str(), c);
  return {worst_recon <= 1e-10 && worst_orth <= 1e-8 && worst_sigma <= 1e-8 && secs < 60,
          fmt("100 matrices (%s ); max recon %.2e (<=1e-10), max orth %.2e (<=1e-8), max |dsigma|/sigma1 %.2e (<=1e-8), %.1f s (<60)",
              mix.c_str() + 1, worst_recon, worst_orth, worst_sigma, secs)};
}

Outcome eckart_young() {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<std::size_t> dim(5, 32);
  std::uniform_real_distribution<double> eps_exp(-3.0, -1.0);
  std::size_t competitors = 0, violations = 0;
  double worst_two_path = 0, min_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const std::size_t m = dim(rng), n = dim(rng);
    const Matrix a = test::random_matrix(m, n, rng);
    const auto f = svd(a);
    for (std::size_t k : {1u, 2u, 4u}) {
      const auto t = truncate(f, k);
      const double best = test::naive_distance(reconstruct(t), a);
      worst_two_path = std::max(worst_two_path, std::fabs(best - residual_from_sigma(f.sigma, k)));
      // Optimal factors as a starting point for perturbed competitors.
      Matrix left = t.u;
      Matrix right = t.vt;
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t c = 0; c < n; ++c) right(j, c) *= t.sigma[j];
      for (int c = 0; c < 1200; ++c) {
        Matrix cand(m, n);
        switch (c % 3) {
          case 0:  // random product
            cand = test::naive_product(test::random_matrix(m, k, rng), test::random_matrix(k, n, rng));
            break;
          case 1: {  // best fit onto a random k-dimensional column space
            const Matrix q = random_orthonormal(m, k, rng);
            cand = test::naive_product(q, test::naive_product(q.transposed(), a));
            break;
          }
          default: {  // perturbed optimum
            const double eps = std::pow(10.0, eps_exp(rng));
            Matrix l = left, r = right;
            for (double& x : l.data()) x += eps * std::uniform_real_distribution<double>(-1, 1)(rng);
            for (double& x : r.data()) x += eps * std::uniform_real_distribution<double>(-1, 1)(rng);
            cand = test::naive_product(l, r);
          }
        }
        const double e = test::naive_distance(cand, a);
        ++competitors;
        if (e < best) ++violations;
        min_margin = std::min(min_margin, e - best);
      }
    }
  }
  return {violations == 0 && worst_two_path <= 1e-8 && competitors >= 60 * 1000,
          fmt("20 matrices x k{1,2,4} x 1200 competitors = %zu; violations %zu; smallest margin %.2e; max |pixelwise - closed form| %.2e (<=1e-8)",
              competitors, violations, min_margin, worst_two_path)};
}

Outcome closed_form_equivalence(const std::vector<ImageTensor>& fixtures) {
  double worst = 0;
  std::size_t checks = 0;
  for (const auto& img : fixtures) {
    const auto factors = decompose(img);
    for (double t : kGrid.values()) {
      const auto ranks = select_ranks(factors, t);
      long double res2 = 0, norm2 = 0;
      std::vector<Matrix> planes;
      for (std::size_t c = 0; c < factors.size(); ++c) {
        const double r = residual_from_sigma(factors[c].sigma, ranks[c]);
        const double n = residual_from_sigma(factors[c].sigma, 0);
        res2 += static_cast<long double>(r) * r;
        norm2 += static_cast<long double>(n) * n;
        planes.push_back(reconstruct(truncate(factors[c], ranks[c])));
      }
      const double closed = static_cast<double>(std::sqrt(res2 / norm2));
      const double pixel = relative_frobenius_error(img.planes(), planes);
      worst = std::max(worst, std::fabs(closed - pixel) / std::max(pixel, 1e-300));
      ++checks;
    }
  }
  return {worst <= 1e-8, fmt("%zu image x tolerance pairs; max relative disagreement %.2e (<=1e-8)", checks, worst)};
}

struct BenchRuns {
  std::vector<CompressionRecord> records;
  std::vector<std::string> methods;
  bool identical_full = false;
  bool identical_resumed = false;
  std::string diff;
  std::size_t resumed_first = 0;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BenchRuns run_benches(const fs::path& root) {
  fs::remove_all(root);
  RunConfig cfg;  // default grid and methods
  BenchRuns out;
  cfg.output_dir = root / "a";
  const auto a = run_benchmark(test::fixture_dir(), cfg);
  cfg.output_dir = root / "b";
  run_benchmark(test::fixture_dir(), cfg);
  cfg.output_dir = root / "c";
  cfg.parallelism = 3;
  RunOptions stop;
  stop.max_new_images = 5;
  out.resumed_first = run_benchmark(test::fixture_dir(), cfg, stop).processed;
  std::ofstream(cfg.output_dir / kJournalName, std::ios::app) << "rocket.png,svd-factor,0.05,0.04";
  run_benchmark(test::fixture_dir(), cfg);

  std::vector<std::string> files{"records.csv", "curves.csv", "curves.svg"};
  for (const auto& p : a.plots) files.push_back(p.filename().string());
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  out.identical_full = out.identical_resumed = true;
  for (const auto& f : files) {
    const auto ra = slurp(root / "a" / f);
    if (ra.empty()) out.diff += " missing:" + f;
    if (ra != slurp(root / "b" / f)) out.identical_full = false, out.diff += " full:" + f;
    if (ra != slurp(root / "c" / f)) out.identical_resumed = false, out.diff += " resumed:" + f;
  }
  out.diff = fmt("%zu files compared", files.size()) + out.diff;
  out.records = read_records_csv(a.records_csv);
  out.methods = a.methods;
  return out;
}

Outcome curve_shape(const BenchRuns& runs) {
  std::map<std::string, std::map<double, double>> per_image;
  for (const auto& r : runs.records)
    if (r.method == kSvdFactor && r.status == RecordStatus::Ok) per_image[r.image_id][r.tolerance] = r.ratio;
  bool monotone = true;
  std::string offender;
  std::map<double, double> mean;
  for (const auto& [id, pts] : per_image) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& [t, ratio] : pts) {
      if (ratio < prev) monotone = false, offender = id;
      prev = ratio;
      mean[t] += ratio / static_cast<double>(per_image.size());
    }
  }
  const double m05 = mean[0.05], m50 = mean[0.5], m95 = mean[0.95];
  const bool pass = per_image.size() == test::fixture_paths().size() && m05 < 0 && monotone && (m50 - m05) > (m95 - m50);
  return {pass, fmt("%zu images; mean ratio %.4f @0.05 (<0), %.4f @0.50, %.4f @0.95; rise %.4f then %.4f; per-image monotone: %s%s",
                    per_image.size(), m05, m50, m95, m50 - m05, m95 - m50, monotone ? "yes" : "no",
                    offender.empty() ? "" : (" (" + offender + ")").c_str())};
}

Outcome codec_gap(const BenchRuns& runs) {
  std::map<std::pair<std::string, double>, double> svd_ratio;
  for (const auto& r : runs.records)
    if (r.method == kSvdFactor && r.status == RecordStatus::Ok) svd_ratio[{r.image_id, r.tolerance}] = r.ratio;
  std::vector<std::string> codecs;
  for (const auto& m : runs.methods)
    if (m != kSvdFactor && m != kSvdReencoded) codecs.push_back(m);
  if (codecs.empty()) return {false, "no external codec available"};

  bool pass = true;
  std::string detail;
  for (const auto& codec : codecs) {
    std::size_t checked = 0, failed = 0;
    std::map<double, std::pair<double, double>> at;  // tolerance -> (codec mean, svd mean) over met images
    for (double t : kGrid.values()) {
      double cs = 0, ss = 0;
      std::size_t n = 0;
      for (const auto& r : runs.records) {
        if (r.method != codec || r.tolerance != t || r.status != RecordStatus::Ok || !r.met) continue;
        cs += r.ratio;
        ss += svd_ratio.at({r.image_id, t});
        ++n;
      }
      if (n == 0) continue;
      at[t] = {cs / static_cast<double>(n), ss / static_cast<double>(n)};
      if (t <= 0.5 + 1e-12) {
        ++checked;
        if (at[t].first < at[t].second) ++failed;
      }
    }
    if (checked == 0 || failed > 0) pass = false;
    auto show = [&](double t) {
      const auto it = at.find(t);
      return it == at.end() ? std::string("n/a") : fmt("%.3f vs %.3f", it->second.first, it->second.second);
    };
    detail += fmt("%s%s: %zu tolerances <=0.5 checked, %zu below svd; @0.5 %s, @0.8 %s", detail.empty() ? "" : "; ",
                  codec.c_str(), checked, failed, show(0.5).c_str(), show(0.8).c_str());
  }
  return {pass, detail};
}

Outcome lrif_round_trip(const std::vector<ImageTensor>& fixtures) {
  std::mt19937_64 rng(4242);
  std::size_t instances = 0, mismatches = 0;
  std::vector<std::vector<std::uint8_t>> corpus;
  for (int i = 0; i < 50; ++i) {
    const std::size_t h = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const std::size_t w = std::uniform_int_distribution<std::size_t>(1, 40)(rng);
    const std::size_t ch = std::array<std::size_t, 3>{1, 3, 4}[static_cast<std::size_t>(i % 3)];
    std::vector<StoredChannel> chans;
    for (std::size_t c = 0; c < ch; ++c) {
      const auto k = std::uniform_int_distribution<std::size_t>(1, std::min(h, w))(rng);
      chans.push_back(to_stored(truncate(svd(test::random_matrix(h, w, rng, 0, 255)), k)));
    }
    const auto bytes = encode_lrif(LowRankImage(h, w, std::move(chans)));
    if (encode_lrif(decode_lrif(bytes)) != bytes) ++mismatches;
    corpus.push_back(bytes);
    ++instances;
  }
  for (const auto& img : fixtures)
    for (double t : {0.05, 0.3, 0.8}) {
      const auto l = compress(img, t);
      const auto bytes = encode_lrif(l);
      const auto back = decode_lrif(bytes);
      if (encode_lrif(back) != bytes || !(back == l) || factor_storage_bytes(l) != bytes.size()) ++mismatches;
      corpus.push_back(bytes);
      ++instances;
    }
  std::size_t structured = 0, decoded = 0, other = 0;
  for (int i = 0; i < 1000; ++i) {
    auto b = corpus[static_cast<std::size_t>(i) % corpus.size()];
    b[std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng)] ^= static_cast<std::uint8_t>(std::uniform_int_distribution<int>(1, 255)(rng));
    try {
      (void)decompress(decode_lrif(b));
      ++decoded;
    } catch (const Error&) {
      ++structured;
    } catch (...) {
      ++other;
    }
  }
  return {mismatches == 0 && other == 0 && structured + decoded == 1000,
          fmt("%zu instances, %zu byte mismatches; 1000 mutations: %zu structured errors, %zu decoded, %zu other", instances,
              mismatches, structured, decoded, other)};
}

Outcome multichannel_bound(const std::vector<ImageTensor>& fixtures) {
  std::size_t checks = 0, over = 0, multi = 0;
  double worst = -1;
  for (const auto& img : fixtures) {
    if (img.channels() == 1) continue;
    ++multi;
    const auto factors = decompose(img);
    for (double t : kGrid.values()) {
      const auto planes = reconstruct_planes(compress_factors(factors, select_ranks(factors, t)));
      const double e = relative_frobenius_error(img.planes(), planes);
      worst = std::max(worst, e - t);
      ++checks;
      if (e > t) ++over;
    }
  }
  return {over == 0 && multi > 0, fmt("%zu multichannel fixtures x 19 tolerances; %zu over; max (error - tolerance) %.4f", multi, over, worst)};
}

Outcome determinism(const BenchRuns& runs) {
  return {runs.identical_full && runs.identical_resumed,
          fmt("two full runs identical: %s; interrupted after %zu images + torn row, resumed run identical: %s (%s)",
              runs.identical_full ? "yes" : "no", runs.resumed_first, runs.identical_resumed ? "yes" : "no", runs.diff.c_str())};
}

Outcome edge_concentration_check() {
  std::string all;
  double chelsea = 0;
  for (const auto& p : test::fixture_paths()) {
    const auto img = load_image(p);
    const auto approx = decompress(compress_at_rank(img, 5));
    const double v = edge_concentration(img, error_map(img, approx));
    if (p.filename() == "chelsea.png") chelsea = v;
    all += fmt(" %s=%.2f", p.stem().c_str(), v);
  }
  return {chelsea >= 2.0, fmt("chelsea (animal photo) k=5 top/bottom gradient-decile error ratio %.3f (>=2); all fixtures:%s", chelsea, all.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "lowrank_acceptance";
  const auto fixtures = load_fixtures();
  std::optional<BenchRuns> runs;
  auto benches = [&]() -> const BenchRuns& {
    if (!runs) runs = run_benches(work);
    return *runs;
  };

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"svd-kernel-accuracy", svd_accuracy},
      {"eckart-young", eckart_young},
      {"closed-form-vs-pixelwise", [&] { return closed_form_equivalence(fixtures); }},
      {"tolerance-curve-shape", [&] { return curve_shape(benches()); }},
      {"codec-gap-direction", [&] { return codec_gap(benches()); }},
      {"lrif-round-trip", [&] { return lrif_round_trip(fixtures); }},
      {"multichannel-bound", [&] { return multichannel_bound(fixtures); }},
      {"determinism-and-resume", [&] { return determinism(benches()); }},
      {"edge-concentration", edge_concentration_check},
  };

  std::ostringstream report;
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    const std::string line = std::string(o.pass ? "PASS " : "FAIL ") + name + ": " + o.detail;
    std::cout << line << std::endl;
    report << line << "\n";
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  fs::create_directories(work);
  std::ofstream(work / "acceptance_report.txt") << report.str();
  return failed == 0 ? 0 : 1;
}
