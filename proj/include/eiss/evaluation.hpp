#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eiss/engine.hpp"
#include "eiss/image.hpp"

namespace eiss {

// One object box from a VOC-style annotation, converted to half-open
// 0-based pixel coordinates.
struct Annotation {
  std::string image_id;
  std::string class_name;
  Region box;
  int image_width = 0;
  int image_height = 0;
};

// All objects in one annotation document. Callers apply the single-instance
// filter. Throws ParseError (with byte offset) on malformed XML and
// IncompleteAnnotationError on missing fields.
std::vector<Annotation> parse_annotation(std::string_view xml_bytes);

// One unit of evaluation work: an image (in memory or on disk) plus its
// ground-truth box.
struct EvalItem {
  std::string image_id;
  std::string class_name;
  std::string image_path;       // used when image is absent
  std::optional<Image> image;   // synthetic inputs carry pixels directly
  Region truth;
};

// Deterministic per-class sample: min(cap, available) items per class,
// uniform in the seed. Output is sorted by (class_name, image_id).
std::vector<EvalItem> sample_dataset(const std::vector<EvalItem>& items, int per_class_cap,
                                     uint64_t seed);

struct ImageResult {
  std::string image_id;
  std::string class_name;
  StopReason stop_reason = StopReason::kMaxIterations;
  int iterations_used = 0;
  bool padded = false;          // run stopped before max_iterations
  double final_iou = 0.0;
  std::vector<double> blackened_curve;  // length max_iterations, padded
  std::vector<double> cropped_curve;
  std::vector<double> iou_curve;
};

struct ClassReport {
  std::string class_name;
  int sample_count = 0;
  std::vector<double> mean_blackened_curve;
  std::vector<double> mean_cropped_curve;
  std::vector<double> mean_iou_curve;
  std::optional<int> crossing_iteration;  // 1-based, first mean blackened >= mean cropped
};

struct SkipRecord {
  std::string image_id;
  std::string reason;
};

struct EvalReport {
  EissConfig config;
  std::vector<ClassReport> classes;   // sorted by class name
  ClassReport overall;                // over all images, class_name "overall"
  std::vector<ImageResult> images;    // sorted by (class, image_id)
  std::vector<SkipRecord> skipped;
  double mean_final_iou = 0.0;        // over evaluated images
};

// Runs EISS on every item with its ground truth and aggregates per-class and
// overall mean curves. Unreadable images are recorded as skipped; the batch
// never aborts. Items run on `workers` threads; aggregation order is fixed,
// so outputs are schedule independent.
EvalReport evaluate(const std::vector<EvalItem>& items, const ClassifierContract& classifier,
                    const EissConfig& cfg, int workers = 1);

// Affine map of a curve onto [0,1]; constant curves map to all 0.5.
std::vector<double> normalize_curve(const std::vector<double>& curve);

// VOC-style dataset ingestion: every .xml in annotations_dir is parsed and
// kept when it contains exactly one object. Image paths come from the
// annotation's filename joined to images_dir.
struct DatasetLoadResult {
  std::vector<EvalItem> items;
  std::vector<SkipRecord> skipped;        // unparseable annotation files
  int multi_instance_filtered = 0;
};

DatasetLoadResult load_voc_dataset(const std::string& images_dir,
                                   const std::string& annotations_dir);

}  // namespace eiss
