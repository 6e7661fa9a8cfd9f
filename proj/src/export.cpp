#include "eiss/export.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "eiss/errors.hpp"

namespace eiss {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EissError("export failed: cannot open " + path);
  out << content;
  if (!out) throw EissError("export failed: cannot write " + path);
}

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

EissConfig config_from_json(const json& j) {
  EissConfig cfg;
  cfg.alpha = j.at("alpha").get<double>();
  cfg.eta = j.at("eta").get<double>();
  cfg.top_k = j.at("top_k").get<int>();
  cfg.max_iterations = j.at("max_iterations").get<int>();
  cfg.stride = j.at("stride").get<int>();
  cfg.top_regions_per_branch = j.at("top_regions_per_branch").get<int>();
  if (!j.at("sample_count").is_null()) cfg.sample_count = j.at("sample_count").get<int>();
  cfg.min_region_side = j.at("min_region_side").get<int>();
  cfg.seed = j.at("seed").get<uint64_t>();
  return cfg;
}

json class_report_to_json(const ClassReport& report) {
  json j;
  j["class"] = report.class_name;
  j["sample_count"] = report.sample_count;
  j["mean_blackened_curve"] = report.mean_blackened_curve;
  j["mean_cropped_curve"] = report.mean_cropped_curve;
  j["mean_iou_curve"] = report.mean_iou_curve;
  if (report.crossing_iteration) j["crossing_iteration"] = *report.crossing_iteration;
  else j["crossing_iteration"] = nullptr;
  return j;
}

ClassReport class_report_from_json(const json& j) {
  ClassReport report;
  report.class_name = j.at("class").get<std::string>();
  report.sample_count = j.at("sample_count").get<int>();
  report.mean_blackened_curve = j.at("mean_blackened_curve").get<std::vector<double>>();
  report.mean_cropped_curve = j.at("mean_cropped_curve").get<std::vector<double>>();
  report.mean_iou_curve = j.at("mean_iou_curve").get<std::vector<double>>();
  if (!j.at("crossing_iteration").is_null()) {
    report.crossing_iteration = j.at("crossing_iteration").get<int>();
  }
  return report;
}

json image_result_to_json(const ImageResult& r) {
  json j;
  j["image_id"] = r.image_id;
  j["class"] = r.class_name;
  j["stop_reason"] = to_string(r.stop_reason);
  j["iterations_used"] = r.iterations_used;
  j["padded"] = r.padded;
  j["final_iou"] = r.final_iou;
  j["blackened_curve"] = r.blackened_curve;
  j["cropped_curve"] = r.cropped_curve;
  j["iou_curve"] = r.iou_curve;
  return j;
}

ImageResult image_result_from_json(const json& j) {
  ImageResult r;
  r.image_id = j.at("image_id").get<std::string>();
  r.class_name = j.at("class").get<std::string>();
  r.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
  r.iterations_used = j.at("iterations_used").get<int>();
  r.padded = j.at("padded").get<bool>();
  r.final_iou = j.at("final_iou").get<double>();
  r.blackened_curve = j.at("blackened_curve").get<std::vector<double>>();
  r.cropped_curve = j.at("cropped_curve").get<std::vector<double>>();
  r.iou_curve = j.at("iou_curve").get<std::vector<double>>();
  return r;
}

std::string sanitize_for_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return out;
}

}  // namespace

std::string report_to_csv(const EvalReport& report) {
  std::string out = "class,iteration,mean_blackened,mean_cropped,mean_iou,n\n";
  for (const ClassReport& cls : report.classes) {
    for (size_t t = 0; t < cls.mean_blackened_curve.size(); ++t) {
      out += cls.class_name;
      out += ',';
      out += std::to_string(t + 1);
      out += ',';
      out += fmt(cls.mean_blackened_curve[t]);
      out += ',';
      out += fmt(cls.mean_cropped_curve[t]);
      out += ',';
      out += fmt(cls.mean_iou_curve[t]);
      out += ',';
      out += std::to_string(cls.sample_count);
      out += '\n';
    }
  }
  return out;
}

void export_csv(const EvalReport& report, const std::string& path) {
  write_file(path, report_to_csv(report));
}

std::string report_to_json(const EvalReport& report) {
  json j;
  j["config"] = config_to_json(report.config);
  j["mean_final_iou"] = report.mean_final_iou;
  j["overall"] = class_report_to_json(report.overall);
  json classes = json::array();
  for (const ClassReport& cls : report.classes) classes.push_back(class_report_to_json(cls));
  j["classes"] = classes;
  json images = json::array();
  for (const ImageResult& r : report.images) images.push_back(image_result_to_json(r));
  j["images"] = images;
  json skipped = json::array();
  for (const SkipRecord& s : report.skipped) {
    skipped.push_back(json{{"image_id", s.image_id}, {"reason", s.reason}});
  }
  j["skipped"] = skipped;
  return j.dump(2) + "\n";
}

void export_json(const EvalReport& report, const std::string& path) {
  write_file(path, report_to_json(report));
}

EvalReport report_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw EissError(std::string("report parse failed: ") + e.what());
  }
  EvalReport report;
  report.config = config_from_json(j.at("config"));
  report.mean_final_iou = j.at("mean_final_iou").get<double>();
  report.overall = class_report_from_json(j.at("overall"));
  for (const json& cls : j.at("classes")) report.classes.push_back(class_report_from_json(cls));
  for (const json& img : j.at("images")) report.images.push_back(image_result_from_json(img));
  for (const json& s : j.at("skipped")) {
    report.skipped.push_back(SkipRecord{s.at("image_id").get<std::string>(),
                                        s.at("reason").get<std::string>()});
  }
  return report;
}

EvalReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EissError("cannot open report: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return report_from_json(text);
}

void export_plot_series(const EvalReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw EissError("export failed: cannot create " + dir);

  auto write_series = [&](const std::string& stem, const std::vector<double>& raw) {
    const std::vector<double> norm = normalize_curve(raw);
    std::string norm_text, raw_text;
    for (size_t t = 0; t < raw.size(); ++t) {
      norm_text += std::to_string(t + 1) + "\t" + fmt(norm[t]) + "\n";
      raw_text += std::to_string(t + 1) + "\t" + fmt(raw[t]) + "\n";
    }
    write_file((fs::path(dir) / (stem + ".norm.tsv")).string(), norm_text);
    write_file((fs::path(dir) / (stem + ".raw.tsv")).string(), raw_text);
  };

  auto write_class = [&](const ClassReport& cls) {
    const std::string base = sanitize_for_filename(cls.class_name);
    write_series(base + ".blackened", cls.mean_blackened_curve);
    write_series(base + ".cropped", cls.mean_cropped_curve);
    write_series(base + ".iou", cls.mean_iou_curve);
  };
  for (const ClassReport& cls : report.classes) write_class(cls);
  write_class(report.overall);
}

void export_report(const EvalReport& report, const std::string& format, const std::string& path) {
  if (format == "csv") {
    export_csv(report, path);
  } else if (format == "json") {
    export_json(report, path);
  } else {
    throw EissError("export failed: unknown format " + format);
  }
}

}  // namespace eiss
