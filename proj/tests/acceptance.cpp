// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier end-to-end checks than the unit tests; expected wall time
// is a few minutes on two cores.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "eiss/engine.hpp"
#include "eiss/errors.hpp"
#include "eiss/evaluation.hpp"
#include "eiss/export.hpp"
#include "eiss/oracle.hpp"
#include "eiss/rng.hpp"
#include "eiss/synthetic.hpp"

using namespace eiss;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Line {
  int criterion;
  std::string text;
};
std::vector<Line> g_lines;

void report(int criterion, bool pass, const std::string& label, const std::string& detail) {
  g_lines.push_back(Line{criterion, std::string(pass ? "PASS" : "FAIL") + " criterion " +
                                        std::to_string(criterion) + ": " + label + " (" + detail +
                                        ")"});
  if (!pass) g_failures++;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---- criterion 1: IOU vs rasterized pixel-set oracle ---------------------

double raster_iou(const Region& a, const Region& b, int frame) {
  int64_t inter = 0, uni = 0;
  for (int y = 0; y < frame; ++y) {
    for (int x = 0; x < frame; ++x) {
      const bool in_a = x >= a.x && x < a.x + a.w && y >= a.y && y < a.y + a.h;
      const bool in_b = x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

void criterion_1() {
  const double t0 = now_seconds();
  Rng rng(20240601);
  auto random_region = [&rng](int frame) {
    const int w = static_cast<int>(rng.range(1, frame));
    const int h = static_cast<int>(rng.range(1, frame));
    return Region{static_cast<int>(rng.range(0, frame - w)),
                  static_cast<int>(rng.range(0, frame - h)), w, h};
  };
  int bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Region a = random_region(64);
    const Region b = random_region(64);
    const double expected = raster_iou(a, b, 64);
    const double actual = iou(a, b);
    const double denom = std::max(std::abs(expected), 1e-300);
    const double rel = expected == actual ? 0.0 : std::abs(actual - expected) / denom;
    worst = std::max(worst, rel);
    if (rel > 1e-12) bad++;
  }
  const double elapsed = now_seconds() - t0;
  report(1, bad == 0 && elapsed < 5.0, "IOU exactness vs pixel-set oracle on 1000 pairs",
         "mismatches=" + std::to_string(bad) + " worst_rel_err=" + fmt(worst) +
             " runtime=" + fmt(elapsed) + "s (limit 5s)");
}

// ---- criterion 2: sweep equivalence ---------------------------------------

std::vector<Region> enumerate_grid_independent(const Region& parent, double alpha, int stride) {
  const int cw = static_cast<int>(std::floor(alpha * parent.w + 0.5));
  const int ch = static_cast<int>(std::floor(alpha * parent.h + 0.5));
  std::vector<Region> out;
  for (int y = parent.y; y + ch <= parent.y + parent.h; y += stride) {
    for (int x = parent.x; x + cw <= parent.x + parent.w; x += stride) {
      out.push_back(Region{x, y, cw, ch});
    }
  }
  return out;
}

void criterion_2() {
  SyntheticSpec spec;
  spec.frame_width = 32;
  spec.frame_height = 32;
  const OracleBackend clf(OracleParams::for_spec(spec), 64, 64);
  EissConfig cfg;

  int mismatches = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const SyntheticSample s = generate_synthetic(spec, 3000 + seed);
    const TopKReference ref = initial_reference(clf, s.image, 1);
    Rng rng(0);
    IterationDebug debug;
    run_iteration(s.image, clf, ref, s.image.frame(), cfg, rng, 2, &debug);

    // independent enumeration + scoring + ranking
    const auto regions = enumerate_grid_independent(s.image.frame(), cfg.alpha, cfg.stride);
    std::vector<double> sb(regions.size()), sc(regions.size());
    for (size_t i = 0; i < regions.size(); ++i) {
      const ResponseVector rb = clf.classify(blacken(s.image, regions[i]));
      const ResponseVector rc = clf.classify(
          crop_rescale(s.image, regions[i], clf.input_width(), clf.input_height()));
      double score_b = 0.0, score_c = 0.0;
      for (size_t k = 0; k < ref.class_indices.size(); ++k) {
        score_b += rb.probs[ref.class_indices[k]] * ref.ref_probs[k];
        score_c += rc.probs[ref.class_indices[k]] * ref.ref_probs[k];
      }
      sb[i] = score_b;
      sc[i] = score_c;
    }
    auto pick = [&](const std::vector<double>& scores) {
      std::vector<size_t> order(scores.size());
      std::iota(order.begin(), order.end(), size_t{0});
      std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] < scores[b];
        return a < b;
      });
      std::vector<Region> top;
      for (size_t i = 0; i < order.size() && i < 5; ++i) top.push_back(regions[order[i]]);
      return top;
    };
    if (debug.top_blackened != pick(sb) || debug.top_cropped != pick(sc)) mismatches++;
  }
  report(2, mismatches == 0, "sweep equivalence vs brute-force enumeration on 20 32x32 images",
         "mismatched_images=" + std::to_string(mismatches));
}

// ---- criteria 3-6: the 50-image synthetic suite ---------------------------

struct SuiteRun {
  EissResult result;
  Region truth;
};

std::vector<SuiteRun> run_suite(const EissConfig& cfg, uint64_t seed_base, int count) {
  SyntheticSpec spec;  // 128x128, fractions 0.15-0.35
  const OracleBackend clf(OracleParams::for_spec(spec), 64, 64);
  std::vector<SuiteRun> runs;
  runs.reserve(count);
  for (int i = 0; i < count; ++i) {
    const SyntheticSample s = generate_synthetic(spec, seed_base + i);
    runs.push_back(SuiteRun{run_eiss(s.image, clf, cfg, s.truth, 2), s.truth});
  }
  return runs;
}

constexpr uint64_t kSuiteSeedBase = 777;

std::vector<double> mean_curve(const std::vector<SuiteRun>& runs, int length,
                               double (*pick)(const IterationRecord&)) {
  std::vector<double> mean(length, 0.0);
  for (const SuiteRun& run : runs) {
    for (int t = 0; t < length; ++t) {
      const size_t idx = std::min<size_t>(t, run.result.records.size() - 1);
      mean[t] += pick(run.result.records[idx]) / runs.size();
    }
  }
  return mean;
}

void criterion_3_and_5(std::vector<SuiteRun>& curve_runs_out) {
  const double t0 = now_seconds();
  EissConfig cfg;
  cfg.eta = 0.0;  // curve experiment: run to crossing or budget
  curve_runs_out = run_suite(cfg, kSuiteSeedBase, 50);
  const double elapsed = now_seconds() - t0;

  const auto mb = mean_curve(curve_runs_out, 30,
                             [](const IterationRecord& r) { return r.blackened_score; });
  const auto mc = mean_curve(curve_runs_out, 30,
                             [](const IterationRecord& r) { return r.cropped_score; });

  bool non_decreasing = true;
  for (size_t t = 1; t < mb.size(); ++t) {
    if (mb[t] < mb[t - 1] - 0.02) non_decreasing = false;
  }

  // unimodal: significant derivative signs may flip at most once, high to low
  int sign_changes = 0;
  int last_sign = 0;
  bool rose_after_fall = false;
  for (size_t t = 1; t < mc.size(); ++t) {
    const double d = mc[t] - mc[t - 1];
    if (std::abs(d) <= 0.02) continue;
    const int sign = d > 0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) {
      sign_changes++;
      if (sign > 0) rose_after_fall = true;
    }
    last_sign = sign;
  }
  const bool unimodal = sign_changes <= 1 && !rose_after_fall;

  int crossings = 0;
  int state = 0;  // sign of (blackened - cropped), 0 until nonzero
  for (size_t t = 0; t < mb.size(); ++t) {
    const double diff = mb[t] - mc[t];
    if (diff == 0.0) continue;
    const int sign = diff > 0 ? 1 : -1;
    if (state != 0 && sign != state) crossings++;
    state = sign;
  }

  report(3,
         non_decreasing && unimodal && crossings <= 1 && elapsed < 600.0,
         "mean curve shapes on the 50-image synthetic suite (eta=0)",
         std::string("blackened_non_decreasing=") + (non_decreasing ? "yes" : "no") +
             " cropped_sign_changes=" + std::to_string(sign_changes) +
             (rose_after_fall ? " (rises after falling)" : "") +
             " crossings=" + std::to_string(crossings) + " runtime=" + fmt(elapsed) +
             "s (limit 600s)");

  // criterion 5 piggybacks on the same runs
  int violations = 0;
  for (const SuiteRun& run : curve_runs_out) {
    const auto& recs = run.result.records;
    for (size_t t = 1; t < recs.size(); ++t) {
      if (!recs[t - 1].resultant_region.contains(recs[t].resultant_region)) violations++;
      if (recs[t].resultant_region.area() > recs[t - 1].resultant_region.area()) violations++;
    }
  }
  report(5, violations == 0, "nesting and monotone shrinkage over every criterion-3 run",
         "violations=" + std::to_string(violations));
}

std::vector<SuiteRun> criterion_4() {
  EissConfig cfg;  // defaults: alpha 0.8, eta 10, K 1
  std::vector<SuiteRun> runs = run_suite(cfg, kSuiteSeedBase, 50);

  double iou_sum = 0.0;
  int early_eta = 0;
  for (const SuiteRun& run : runs) {
    iou_sum += run.result.records.back().iou_vs_truth.value_or(0.0);
    if (run.result.stop_reason == StopReason::kEtaThreshold &&
        static_cast<int>(run.result.records.size()) < cfg.max_iterations) {
      early_eta++;
    }
  }
  const double mean_iou = iou_sum / runs.size();
  const double eta_rate = static_cast<double>(early_eta) / runs.size();
  report(4, mean_iou >= 0.5 && eta_rate >= 0.8,
         "localization on the 50-image synthetic suite (defaults)",
         "mean_final_iou=" + fmt(mean_iou) + " (need >= 0.5), eta_stops_before_30=" +
             std::to_string(early_eta) + "/50 (need >= 40)");
  return runs;
}

bool results_identical(const EissResult& a, const EissResult& b) {
  if (!(a.final_region == b.final_region) || a.stop_reason != b.stop_reason ||
      a.records.size() != b.records.size() ||
      a.reference.class_indices != b.reference.class_indices ||
      a.reference.ref_probs != b.reference.ref_probs ||
      a.reference.initial_score != b.reference.initial_score) {
    return false;
  }
  for (size_t i = 0; i < a.records.size(); ++i) {
    const IterationRecord& ra = a.records[i];
    const IterationRecord& rb = b.records[i];
    if (!(ra.resultant_region == rb.resultant_region) ||
        ra.blackened_score != rb.blackened_score || ra.cropped_score != rb.cropped_score ||
        ra.proposal_count != rb.proposal_count || ra.iou_vs_truth != rb.iou_vs_truth) {
      return false;
    }
  }
  return true;
}

void criterion_6(const std::vector<SuiteRun>& explicit_runs) {
  SyntheticSpec spec;
  const OracleBackend clf(OracleParams::for_spec(spec), 64, 64);

  // (a) M covering the full grid reproduces the explicit sweep bit for bit
  int mismatches = 0;
  for (uint64_t i = 0; i < 10; ++i) {
    const SyntheticSample s = generate_synthetic(spec, 9000 + i);
    EissConfig explicit_cfg;
    const EissResult a = run_eiss(s.image, clf, explicit_cfg, s.truth, 2);

    EissConfig sampled_cfg;
    const auto first_grid = propose_grid(s.image.frame(), sampled_cfg.alpha, 1);
    sampled_cfg.sample_count = static_cast<int>(first_grid.size());
    const EissResult b = run_eiss(s.image, clf, sampled_cfg, s.truth, 2);
    if (!results_identical(a, b)) mismatches++;
  }

  // (b) M=16 degrades mean IOU by at most 0.15 vs the explicit suite
  EissConfig m16;
  m16.sample_count = 16;
  m16.seed = 1;
  const std::vector<SuiteRun> sampled_runs = run_suite(m16, kSuiteSeedBase, 50);
  double explicit_iou = 0.0, sampled_iou = 0.0;
  for (const SuiteRun& run : explicit_runs) {
    explicit_iou += run.result.records.back().iou_vs_truth.value_or(0.0) / explicit_runs.size();
  }
  for (const SuiteRun& run : sampled_runs) {
    sampled_iou += run.result.records.back().iou_vs_truth.value_or(0.0) / sampled_runs.size();
  }
  const double degrade = explicit_iou - sampled_iou;

  report(6, mismatches == 0 && degrade <= 0.15, "random-search consistency",
         "full-grid_mismatches=" + std::to_string(mismatches) + "/10, explicit_iou=" +
             fmt(explicit_iou) + " m16_iou=" + fmt(sampled_iou) + " degrade=" + fmt(degrade) +
             " (limit 0.15)");
}

// ---- criterion 7: CLI determinism across worker counts --------------------

#ifndef EISS_BIN_PATH
#define EISS_BIN_PATH "eiss"
#endif

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void criterion_7() {
  const fs::path base = fs::temp_directory_path() / ("eiss_accept_" + std::to_string(::getpid()));
  fs::create_directories(base);
  const fs::path manifest_path = base / "manifest.json";
  {
    std::ofstream out(manifest_path);
    out << R"({
  "config": {"alpha": 0.8, "eta": 10.0, "top_k": 1, "max_iterations": 30, "seed": 42},
  "backend": {"kind": "oracle"},
  "input": {"synthetic": {"count": 12, "seed": 42}},
  "output_dir": ""
})";
  }
  const std::string bin = EISS_BIN_PATH;
  const fs::path out1 = base / "w1";
  const fs::path out8 = base / "w8";
  const int rc1 = run_command(bin + " synth-bench --manifest " + manifest_path.string() +
                              " --workers 1 --out " + out1.string() + " > " +
                              (base / "log1").string());
  const int rc8 = run_command(bin + " synth-bench --manifest " + manifest_path.string() +
                              " --workers 8 --out " + out8.string() + " > " +
                              (base / "log8").string());

  bool identical = rc1 == 0 && rc8 == 0;
  std::string detail = "exit_codes=" + std::to_string(rc1) + "," + std::to_string(rc8);
  if (identical) {
    std::vector<std::string> files = {"report.json", "curves.csv"};
    for (const auto& entry : fs::directory_iterator(out1 / "plot")) {
      files.push_back("plot/" + entry.path().filename().string());
    }
    int different = 0;
    for (const std::string& rel : files) {
      if (slurp(out1 / rel) != slurp(out8 / rel) || slurp(out1 / rel).empty()) different++;
    }
    identical = different == 0;
    detail += " files_compared=" + std::to_string(files.size()) +
              " different=" + std::to_string(different);
  }
  report(7, identical, "synth-bench outputs byte-identical at workers 1 and 8", detail);
  fs::remove_all(base);
}

// ---- criterion 8: VOC ingestion -------------------------------------------

void criterion_8() {
  const std::string xml =
      "<annotation><filename>fixture.ppm</filename>"
      "<size><width>500</width><height>400</height></size>"
      "<object><name>cat</name>"
      "<bndbox><xmin>48</xmin><ymin>240</ymin><xmax>195</xmax><ymax>371</ymax></bndbox>"
      "</object></annotation>";
  bool box_ok = false;
  std::string detail;
  try {
    const auto anns = parse_annotation(xml);
    box_ok = anns.size() == 1 && anns[0].box == Region{47, 239, 148, 132};
    detail = "box=(" + std::to_string(anns[0].box.x) + "," + std::to_string(anns[0].box.y) + "," +
             std::to_string(anns[0].box.w) + "," + std::to_string(anns[0].box.h) +
             ") expected (47,239,148,132)";
  } catch (const std::exception& e) {
    detail = e.what();
  }

  // multi-object fixtures fall to the single-instance filter
  const fs::path base = fs::temp_directory_path() / ("eiss_voc_" + std::to_string(::getpid()));
  fs::create_directories(base / "ann");
  fs::create_directories(base / "img");
  {
    std::ofstream(base / "ann" / "single.xml") << xml;
    std::ofstream(base / "ann" / "multi.xml")
        << "<annotation><filename>m.ppm</filename>"
           "<size><width>100</width><height>100</height></size>"
           "<object><name>a</name><bndbox><xmin>1</xmin><ymin>1</ymin><xmax>5</xmax>"
           "<ymax>5</ymax></bndbox></object>"
           "<object><name>b</name><bndbox><xmin>10</xmin><ymin>10</ymin><xmax>20</xmax>"
           "<ymax>20</ymax></bndbox></object></annotation>";
  }
  const DatasetLoadResult loaded =
      load_voc_dataset((base / "img").string(), (base / "ann").string());
  const bool filter_ok = loaded.items.size() == 1 && loaded.multi_instance_filtered == 1;
  fs::remove_all(base);

  report(8, box_ok && filter_ok, "VOC ingestion and single-instance filter",
         detail + ", multi_filtered=" + std::to_string(loaded.multi_instance_filtered));
}

// ---- criterion 9: stopping-rule truth table --------------------------------

void criterion_9() {
  const bool zero_diff = should_stop(0.3, 0.3, 0.49, 10.0) == true;
  const bool strict = should_stop(0.3, 0.31, 0.49, 0.0) == false;
  const bool boundary = should_stop(0.3, 0.348, 0.49, 10.0) == true;
  report(9, zero_diff && strict && boundary, "stopping-rule truth table",
         std::string("zero_diff=") + (zero_diff ? "ok" : "bad") + " eta0_strict=" +
             (strict ? "ok" : "bad") + " s0_0.49_boundary=" + (boundary ? "ok" : "bad"));
}

}  // namespace

int main() {
  std::printf("EISS acceptance suite\n");
  criterion_1();
  criterion_2();
  std::vector<SuiteRun> curve_runs;
  criterion_3_and_5(curve_runs);
  const std::vector<SuiteRun> localization_runs = criterion_4();
  criterion_6(localization_runs);
  criterion_7();
  criterion_8();
  criterion_9();

  std::stable_sort(g_lines.begin(), g_lines.end(),
                   [](const Line& a, const Line& b) { return a.criterion < b.criterion; });
  for (const Line& line : g_lines) std::printf("%s\n", line.text.c_str());
  std::printf("%s: %d criterion(s) failed\n", g_failures == 0 ? "SUCCESS" : "FAILURE", g_failures);
  return g_failures == 0 ? 0 : 1;
}
