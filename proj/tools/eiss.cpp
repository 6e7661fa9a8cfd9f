// eiss: greedy blacken/crop region search over a pre-trained classifier,
// plus the batch evaluation harness and curve exporters.
//
// Commands: run, evaluate, synth-bench, export. Exit codes: 0 success,
// 1 runtime failure, 2 usage/validation failure.
//
// Images are read from binary PPM (P6) / PGM (P5) files, 8 bits per channel.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "eiss/engine.hpp"
#include "eiss/errors.hpp"
#include "eiss/evaluation.hpp"
#include "eiss/export.hpp"
#include "eiss/oracle.hpp"
#include "eiss/pretrained.hpp"
#include "eiss/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace eiss::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- manifest -----------------------------------------------------------

struct BackendSpec {
  std::string kind = "oracle";  // oracle | pretrained
  std::string model_path;
  std::string meta_path;
  OracleParams oracle = OracleParams::for_spec(SyntheticSpec{});
  int oracle_input_width = 64;
  int oracle_input_height = 64;
};

struct InputSpec {
  // exactly one mode is active
  std::string image_path;        // single-image mode
  std::string annotation_path;   // optional companion
  std::string images_dir;        // dataset mode
  std::string annotations_dir;
  int per_class_cap = 100;
  bool synthetic = false;        // synthetic mode
  int synth_count = 1;
  uint64_t synth_seed = 0;
  SyntheticSpec synth_spec;
};

struct RunManifest {
  EissConfig config;
  BackendSpec backend;
  InputSpec input;
  std::string output_dir;
};

json config_to_json(const EissConfig& cfg) {
  json j;
  j["alpha"] = cfg.alpha;
  j["eta"] = cfg.eta;
  j["top_k"] = cfg.top_k;
  j["max_iterations"] = cfg.max_iterations;
  j["stride"] = cfg.stride;
  j["top_regions_per_branch"] = cfg.top_regions_per_branch;
  if (cfg.sample_count) j["sample_count"] = *cfg.sample_count;
  else j["sample_count"] = nullptr;
  j["min_region_side"] = cfg.min_region_side;
  j["seed"] = cfg.seed;
  return j;
}

void config_from_json(const json& j, EissConfig& cfg) {
  if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
  if (j.contains("eta")) cfg.eta = j.at("eta").get<double>();
  if (j.contains("top_k")) cfg.top_k = j.at("top_k").get<int>();
  if (j.contains("max_iterations")) cfg.max_iterations = j.at("max_iterations").get<int>();
  if (j.contains("stride")) cfg.stride = j.at("stride").get<int>();
  if (j.contains("top_regions_per_branch")) {
    cfg.top_regions_per_branch = j.at("top_regions_per_branch").get<int>();
  }
  if (j.contains("sample_count") && !j.at("sample_count").is_null()) {
    cfg.sample_count = j.at("sample_count").get<int>();
  }
  if (j.contains("min_region_side")) cfg.min_region_side = j.at("min_region_side").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
}

json palette_to_json(const std::vector<Color>& palette) {
  json arr = json::array();
  for (const Color& c : palette) arr.push_back(std::vector<float>{c[0], c[1], c[2]});
  return arr;
}

std::vector<Color> palette_from_json(const json& arr) {
  std::vector<Color> palette;
  for (const json& c : arr) {
    if (!c.is_array() || c.size() != 3) throw UsageError("palette entries need 3 channels");
    palette.push_back(Color{c[0].get<float>(), c[1].get<float>(), c[2].get<float>()});
  }
  return palette;
}

json manifest_to_json(const RunManifest& m) {
  json j;
  j["config"] = config_to_json(m.config);

  json backend;
  backend["kind"] = m.backend.kind;
  if (m.backend.kind == "pretrained") {
    backend["model"] = m.backend.model_path;
    backend["meta"] = m.backend.meta_path;
  } else {
    backend["peak_fraction"] = m.backend.oracle.peak_fraction;
    backend["background_mass"] = m.backend.oracle.background_mass;
    backend["color_tolerance"] = m.backend.oracle.color_tolerance;
    backend["palette"] = palette_to_json(m.backend.oracle.palette);
    backend["input_width"] = m.backend.oracle_input_width;
    backend["input_height"] = m.backend.oracle_input_height;
  }
  j["backend"] = backend;

  json input;
  if (!m.input.image_path.empty()) {
    input["image"] = m.input.image_path;
    if (!m.input.annotation_path.empty()) input["annotation"] = m.input.annotation_path;
  } else if (!m.input.images_dir.empty()) {
    input["images_dir"] = m.input.images_dir;
    input["annotations_dir"] = m.input.annotations_dir;
    input["per_class_cap"] = m.input.per_class_cap;
  } else if (m.input.synthetic) {
    json synth;
    synth["count"] = m.input.synth_count;
    synth["seed"] = m.input.synth_seed;
    synth["frame_width"] = m.input.synth_spec.frame_width;
    synth["frame_height"] = m.input.synth_spec.frame_height;
    synth["fraction_lo"] = m.input.synth_spec.area_fraction_lo;
    synth["fraction_hi"] = m.input.synth_spec.area_fraction_hi;
    synth["palette"] = palette_to_json(m.input.synth_spec.palette);
    synth["background"] = std::vector<float>{m.input.synth_spec.background[0],
                                             m.input.synth_spec.background[1],
                                             m.input.synth_spec.background[2]};
    input["synthetic"] = synth;
  }
  j["input"] = input;
  j["output_dir"] = m.output_dir;
  return j;
}

void manifest_from_json(const json& j, RunManifest& m) {
  if (j.contains("config")) config_from_json(j.at("config"), m.config);
  if (j.contains("backend")) {
    const json& b = j.at("backend");
    if (b.contains("kind")) m.backend.kind = b.at("kind").get<std::string>();
    if (b.contains("model")) m.backend.model_path = b.at("model").get<std::string>();
    if (b.contains("meta")) m.backend.meta_path = b.at("meta").get<std::string>();
    if (b.contains("peak_fraction")) m.backend.oracle.peak_fraction = b.at("peak_fraction").get<double>();
    if (b.contains("background_mass")) {
      m.backend.oracle.background_mass = b.at("background_mass").get<double>();
    }
    if (b.contains("color_tolerance")) {
      m.backend.oracle.color_tolerance = b.at("color_tolerance").get<double>();
    }
    if (b.contains("palette")) m.backend.oracle.palette = palette_from_json(b.at("palette"));
    if (b.contains("input_width")) m.backend.oracle_input_width = b.at("input_width").get<int>();
    if (b.contains("input_height")) m.backend.oracle_input_height = b.at("input_height").get<int>();
  }
  if (j.contains("input")) {
    const json& in = j.at("input");
    if (in.contains("image")) m.input.image_path = in.at("image").get<std::string>();
    if (in.contains("annotation")) m.input.annotation_path = in.at("annotation").get<std::string>();
    if (in.contains("images_dir")) m.input.images_dir = in.at("images_dir").get<std::string>();
    if (in.contains("annotations_dir")) {
      m.input.annotations_dir = in.at("annotations_dir").get<std::string>();
    }
    if (in.contains("per_class_cap")) m.input.per_class_cap = in.at("per_class_cap").get<int>();
    if (in.contains("synthetic")) {
      const json& s = in.at("synthetic");
      m.input.synthetic = true;
      if (s.contains("count")) m.input.synth_count = s.at("count").get<int>();
      if (s.contains("seed")) m.input.synth_seed = s.at("seed").get<uint64_t>();
      if (s.contains("frame_width")) m.input.synth_spec.frame_width = s.at("frame_width").get<int>();
      if (s.contains("frame_height")) {
        m.input.synth_spec.frame_height = s.at("frame_height").get<int>();
      }
      if (s.contains("fraction_lo")) {
        m.input.synth_spec.area_fraction_lo = s.at("fraction_lo").get<double>();
      }
      if (s.contains("fraction_hi")) {
        m.input.synth_spec.area_fraction_hi = s.at("fraction_hi").get<double>();
      }
      if (s.contains("palette")) m.input.synth_spec.palette = palette_from_json(s.at("palette"));
      if (s.contains("background")) {
        const json& bg = s.at("background");
        m.input.synth_spec.background = Color{bg[0].get<float>(), bg[1].get<float>(), bg[2].get<float>()};
      }
    }
  }
  if (j.contains("output_dir")) m.output_dir = j.at("output_dir").get<std::string>();
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open manifest: " + path);
  RunManifest m;
  try {
    json j = json::parse(std::string((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>()));
    manifest_from_json(j, m);
  } catch (const json::exception& e) {
    throw UsageError(std::string("manifest parse failed: ") + e.what());
  }
  return m;
}

// ---- helpers ------------------------------------------------------------

void require_single_input_mode(const InputSpec& input) {
  const int modes = (!input.image_path.empty() ? 1 : 0) + (!input.images_dir.empty() ? 1 : 0) +
                    (input.synthetic ? 1 : 0);
  if (modes > 1) throw UsageError("exactly one input mode (image, dataset, or synthetic)");
}

std::unique_ptr<ClassifierContract> build_backend(const BackendSpec& spec) {
  if (spec.kind == "pretrained") {
    if (spec.model_path.empty() || spec.meta_path.empty()) {
      throw UsageError("pretrained backend needs --model and --meta");
    }
    return load_pretrained(spec.model_path, spec.meta_path);
  }
  if (spec.kind == "oracle") {
    return std::make_unique<OracleBackend>(spec.oracle, spec.oracle_input_width,
                                           spec.oracle_input_height);
  }
  throw UsageError("unknown backend kind: " + spec.kind);
}

void ensure_output_dir(const std::string& dir) {
  if (dir.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) throw UsageError("cannot create output dir: " + dir);
}

// The copied manifest captures everything that determines outputs; worker
// count deliberately stays out of it.
void write_manifest_copy(const RunManifest& m) {
  std::ofstream out(fs::path(m.output_dir) / "run_manifest.json", std::ios::binary);
  out << manifest_to_json(m).dump(2) << "\n";
  if (!out) throw EissError("export failed: cannot write run_manifest.json");
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

json region_to_json(const Region& r) {
  return json{{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
}

// ---- commands -----------------------------------------------------------

int cmd_run(const RunManifest& manifest, int workers) {
  require_single_input_mode(manifest.input);

  Image img;
  std::optional<Region> truth;
  std::string image_id;
  if (manifest.input.synthetic) {
    SyntheticSample sample;
    try {
      sample = generate_synthetic(manifest.input.synth_spec, manifest.input.synth_seed);
    } catch (const EissError& e) {
      throw UsageError(e.what());
    }
    img = std::move(sample.image);
    truth = sample.truth;
    image_id = "synthetic_" + std::to_string(manifest.input.synth_seed);
  } else if (!manifest.input.image_path.empty()) {
    if (!fs::exists(manifest.input.image_path)) {
      throw UsageError("image not found: " + manifest.input.image_path);
    }
    img = load_image(manifest.input.image_path);
    image_id = fs::path(manifest.input.image_path).stem().string();
    if (!manifest.input.annotation_path.empty()) {
      std::ifstream in(manifest.input.annotation_path, std::ios::binary);
      if (!in) throw UsageError("annotation not found: " + manifest.input.annotation_path);
      const std::string xml((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
      const auto anns = parse_annotation(xml);
      if (anns.size() != 1) {
        throw UsageError("annotation must contain exactly one object, found " +
                         std::to_string(anns.size()));
      }
      truth = anns[0].box;
    }
  } else {
    throw UsageError("run needs --image or --synthetic");
  }

  const auto backend = build_backend(manifest.backend);
  const EissResult result = run_eiss(img, *backend, manifest.config, truth, workers);

  ensure_output_dir(manifest.output_dir);
  write_manifest_copy(manifest);

  // per-iteration trace
  std::string trace = "iteration,x,y,w,h,blackened_score,cropped_score,proposal_count,iou\n";
  for (const IterationRecord& rec : result.records) {
    trace += std::to_string(rec.iteration) + "," + std::to_string(rec.resultant_region.x) + "," +
             std::to_string(rec.resultant_region.y) + "," + std::to_string(rec.resultant_region.w) +
             "," + std::to_string(rec.resultant_region.h) + "," + fmt_double(rec.blackened_score) +
             "," + fmt_double(rec.cropped_score) + "," + std::to_string(rec.proposal_count) + "," +
             (rec.iou_vs_truth ? fmt_double(*rec.iou_vs_truth) : "") + "\n";
  }
  {
    std::ofstream out(fs::path(manifest.output_dir) / "trace.csv", std::ios::binary);
    out << trace;
    if (!out) throw EissError("export failed: cannot write trace.csv");
  }

  // final prediction plus the progression box list
  json pred;
  pred["image_id"] = image_id;
  pred["final_region"] = region_to_json(result.final_region);
  pred["stop_reason"] = to_string(result.stop_reason);
  pred["iterations"] = result.records.size();
  json ref;
  ref["class_indices"] = result.reference.class_indices;
  ref["ref_probs"] = result.reference.ref_probs;
  ref["initial_score"] = result.reference.initial_score;
  pred["reference"] = ref;
  json boxes = json::array();
  for (const IterationRecord& rec : result.records) {
    boxes.push_back(region_to_json(rec.resultant_region));
  }
  pred["progression"] = boxes;
  if (truth) {
    pred["ground_truth"] = region_to_json(*truth);
    pred["final_iou"] = iou(result.final_region, *truth);
  }
  {
    std::ofstream out(fs::path(manifest.output_dir) / "prediction.json", std::ios::binary);
    out << pred.dump(2) << "\n";
    if (!out) throw EissError("export failed: cannot write prediction.json");
  }

  std::printf("stop_reason=%s iterations=%zu final_region=%d,%d,%dx%d\n",
              to_string(result.stop_reason).c_str(), result.records.size(), result.final_region.x,
              result.final_region.y, result.final_region.w, result.final_region.h);
  if (truth) std::printf("final_iou=%s\n", fmt_double(iou(result.final_region, *truth)).c_str());
  return 0;
}

void export_eval_artifacts(const EvalReport& report, const RunManifest& manifest) {
  ensure_output_dir(manifest.output_dir);
  write_manifest_copy(manifest);
  export_json(report, (fs::path(manifest.output_dir) / "report.json").string());
  export_csv(report, (fs::path(manifest.output_dir) / "curves.csv").string());
  export_plot_series(report, (fs::path(manifest.output_dir) / "plot").string());
  std::printf("mean_iou=%s\n", fmt_double(report.mean_final_iou).c_str());
  std::printf("images=%zu skipped=%zu classes=%zu\n", report.images.size(),
              report.skipped.size(), report.classes.size());
}

int cmd_evaluate(const RunManifest& manifest, int workers) {
  require_single_input_mode(manifest.input);
  if (manifest.input.images_dir.empty() || manifest.input.annotations_dir.empty()) {
    throw UsageError("evaluate needs --images and --annotations directories");
  }
  if (!fs::is_directory(manifest.input.annotations_dir)) {
    throw UsageError("annotations dir not found: " + manifest.input.annotations_dir);
  }
  const auto backend = build_backend(manifest.backend);
  const DatasetLoadResult dataset =
      load_voc_dataset(manifest.input.images_dir, manifest.input.annotations_dir);
  const std::vector<EvalItem> selection =
      sample_dataset(dataset.items, manifest.input.per_class_cap, manifest.config.seed);

  EvalReport report = evaluate(selection, *backend, manifest.config, workers);
  for (const SkipRecord& skip : dataset.skipped) report.skipped.push_back(skip);
  export_eval_artifacts(report, manifest);
  return 0;
}

int cmd_synth_bench(const RunManifest& manifest, int workers) {
  if (manifest.input.synth_count < 1) throw UsageError("--count must be >= 1");
  if (manifest.backend.kind != "oracle") {
    throw UsageError("synth-bench runs against the oracle backend");
  }
  BackendSpec backend_spec = manifest.backend;
  backend_spec.oracle.palette = manifest.input.synth_spec.palette;
  const auto backend = build_backend(backend_spec);

  std::vector<EvalItem> items;
  items.reserve(manifest.input.synth_count);
  for (int i = 0; i < manifest.input.synth_count; ++i) {
    SyntheticSample sample;
    try {
      sample = generate_synthetic(manifest.input.synth_spec, manifest.input.synth_seed + i);
    } catch (const EissError& e) {
      throw UsageError(e.what());  // infeasible synthetic spec is an input problem
    }
    EvalItem item;
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05d", i);
    item.image_id = id;
    item.class_name = "class_" + std::to_string(sample.class_id);
    item.image = sample.image;
    item.truth = sample.truth;
    items.push_back(std::move(item));
  }

  const EvalReport report = evaluate(items, *backend, manifest.config, workers);
  export_eval_artifacts(report, manifest);
  return 0;
}

int cmd_export(const std::string& report_path, const std::string& format,
               const std::string& out_path) {
  if (!fs::exists(report_path)) throw UsageError("report not found: " + report_path);
  const EvalReport report = load_report(report_path);
  if (format == "plot") {
    export_plot_series(report, out_path);
  } else {
    export_report(report, format, out_path);
  }
  std::printf("exported %s to %s\n", format.c_str(), out_path.c_str());
  return 0;
}

int run_app(int argc, char** argv) {
  CLI::App app{
      "EISS: explicit image-space search for single-object localization using a "
      "pre-trained whole-image classifier. Images: binary PPM (P6) / PGM (P5)."};
  app.require_subcommand(1);

  RunManifest manifest;
  std::string manifest_path;
  int workers = 1;

  // flag storage; only flags the user passed override the manifest
  double alpha = 0.8, eta = 10.0;
  int topk = 1, max_iters = 30, stride = 1, samples = 0;
  uint64_t seed = 0;
  std::string backend_kind, model_path, meta_path, out_dir;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--manifest", manifest_path, "manifest JSON; flags override its values");
    cmd->add_option("--alpha", alpha, "per-axis shrink factor in (0,1)");
    cmd->add_option("--eta", eta, "stop threshold, percent of the initial top-K self score");
    cmd->add_option("--topk", topk, "number of reference classes");
    cmd->add_option("--max-iters", max_iters, "iteration budget");
    cmd->add_option("--stride", stride, "proposal lattice stride");
    cmd->add_option("--samples", samples, "random proposals per iteration (M); omit for full sweep");
    cmd->add_option("--seed", seed, "seed for sampling / synthetic generation / dataset sampling");
    cmd->add_option("--workers", workers, "worker threads; results are identical for any count");
    cmd->add_option("--backend", backend_kind, "oracle|pretrained");
    cmd->add_option("--model", model_path, "serialized model path (pretrained backend)");
    cmd->add_option("--meta", meta_path, "model metadata path (pretrained backend)");
    cmd->add_option("--out", out_dir, "output directory");
  };

  // run
  std::string image_path, annotation_path;
  bool synthetic = false;
  CLI::App* run = app.add_subcommand("run", "run EISS on a single image");
  add_common(run);
  run->add_option("--image", image_path, "input image (PPM/PGM)");
  run->add_option("--annotation", annotation_path, "VOC XML with exactly one object");
  run->add_flag("--synthetic", synthetic, "generate one synthetic image instead of reading one");

  // evaluate
  std::string images_dir, annotations_dir;
  int cap = 100;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "run EISS over a VOC-style dataset");
  add_common(evaluate_cmd);
  evaluate_cmd->add_option("--images", images_dir, "images directory");
  evaluate_cmd->add_option("--annotations", annotations_dir, "VOC XML directory");
  evaluate_cmd->add_option("--cap", cap, "per-class image cap");

  // synth-bench
  int count = 50;
  int frame = 128;
  double frac_lo = 0.15, frac_hi = 0.35;
  CLI::App* bench = app.add_subcommand("synth-bench", "synthetic benchmark against the oracle");
  add_common(bench);
  bench->add_option("--count", count, "number of synthetic images");
  bench->add_option("--frame", frame, "square frame side in pixels");
  bench->add_option("--frac-lo", frac_lo, "object area fraction lower bound");
  bench->add_option("--frac-hi", frac_hi, "object area fraction upper bound");

  // export
  std::string report_path, format = "csv", export_out;
  CLI::App* export_cmd = app.add_subcommand("export", "re-export a saved report");
  export_cmd->add_option("--report", report_path, "report.json produced by evaluate/synth-bench")
      ->required();
  export_cmd->add_option("--format", format, "csv|json|plot");
  export_cmd->add_option("--out", export_out, "output file (csv/json) or directory (plot)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(export_cmd)) return cmd_export(report_path, format, export_out);

    CLI::App* active = app.got_subcommand(run)        ? run
                       : app.got_subcommand(evaluate_cmd) ? evaluate_cmd
                                                          : bench;
    if (!manifest_path.empty()) manifest = load_manifest(manifest_path);

    auto passed = [&](const std::string& name) { return active->count(name) > 0; };
    if (passed("--alpha")) manifest.config.alpha = alpha;
    if (passed("--eta")) manifest.config.eta = eta;
    if (passed("--topk")) manifest.config.top_k = topk;
    if (passed("--max-iters")) manifest.config.max_iterations = max_iters;
    if (passed("--stride")) manifest.config.stride = stride;
    if (passed("--samples")) manifest.config.sample_count = samples;
    if (passed("--seed")) manifest.config.seed = seed;
    if (passed("--backend")) manifest.backend.kind = backend_kind;
    if (passed("--model")) manifest.backend.model_path = model_path;
    if (passed("--meta")) manifest.backend.meta_path = meta_path;
    if (passed("--out")) manifest.output_dir = out_dir;

    if (app.got_subcommand(run)) {
      if (passed("--image")) manifest.input.image_path = image_path;
      if (passed("--annotation")) manifest.input.annotation_path = annotation_path;
      if (synthetic) {
        manifest.input.synthetic = true;
        manifest.input.synth_seed = manifest.config.seed;
      }
      return cmd_run(manifest, workers);
    }
    if (app.got_subcommand(evaluate_cmd)) {
      if (passed("--images")) manifest.input.images_dir = images_dir;
      if (passed("--annotations")) manifest.input.annotations_dir = annotations_dir;
      if (passed("--cap")) manifest.input.per_class_cap = cap;
      return cmd_evaluate(manifest, workers);
    }
    // synth-bench
    manifest.input.synthetic = true;
    if (passed("--count")) manifest.input.synth_count = count;
    if (passed("--seed")) manifest.input.synth_seed = seed;
    if (passed("--frame")) {
      manifest.input.synth_spec.frame_width = frame;
      manifest.input.synth_spec.frame_height = frame;
    }
    if (passed("--frac-lo")) manifest.input.synth_spec.area_fraction_lo = frac_lo;
    if (passed("--frac-hi")) manifest.input.synth_spec.area_fraction_hi = frac_hi;
    return cmd_synth_bench(manifest, workers);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace eiss::cli

int main(int argc, char** argv) { return eiss::cli::run_app(argc, argv); }
