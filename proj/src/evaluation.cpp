#include "eiss/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "eiss/errors.hpp"
#include "eiss/parallel.hpp"
#include "eiss/rng.hpp"

namespace eiss {

namespace {

// ---- minimal XML subset reader (elements, text, skipped attributes) ----

struct XmlNode {
  std::string name;
  std::string text;
  std::vector<XmlNode> children;

  const XmlNode* child(const std::string& tag) const {
    for (const auto& c : children) {
      if (c.name == tag) return &c;
    }
    return nullptr;
  }
};

class XmlReader {
 public:
  explicit XmlReader(std::string_view src) : src_(src) {}

  XmlNode parse_document() {
    skip_misc();
    if (pos_ >= src_.size() || src_[pos_] != '<') fail("expected root element");
    XmlNode root = parse_element();
    skip_misc();
    if (pos_ < src_.size()) fail("trailing content after root element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  bool starts_with(std::string_view prefix) const {
    return src_.compare(pos_, prefix.size(), prefix) == 0;
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) pos_++;
  }

  // whitespace, comments, prolog, doctype
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--")) {
        const size_t end = src_.find("-->", pos_ + 4);
        if (end == std::string_view::npos) fail("unterminated comment");
        pos_ = end + 3;
      } else if (starts_with("<?")) {
        const size_t end = src_.find("?>", pos_ + 2);
        if (end == std::string_view::npos) fail("unterminated processing instruction");
        pos_ = end + 2;
      } else if (starts_with("<!")) {
        const size_t end = src_.find('>', pos_ + 2);
        if (end == std::string_view::npos) fail("unterminated declaration");
        pos_ = end + 1;
      } else {
        return;
      }
    }
  }

  std::string read_name() {
    const size_t start = pos_;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
          c == '.') {
        pos_++;
      } else {
        break;
      }
    }
    if (pos_ == start) fail("expected element name");
    return std::string(src_.substr(start, pos_ - start));
  }

  // positioned on '<' of an opening tag
  XmlNode parse_element() {
    pos_++;  // '<'
    XmlNode node;
    node.name = read_name();

    // attributes are tolerated and ignored
    for (;;) {
      skip_ws();
      if (pos_ >= src_.size()) fail("unterminated tag");
      const char c = src_[pos_];
      if (c == '>') {
        pos_++;
        break;
      }
      if (c == '/') {
        if (pos_ + 1 >= src_.size() || src_[pos_ + 1] != '>') fail("malformed self-closing tag");
        pos_ += 2;
        return node;
      }
      read_name();
      skip_ws();
      if (pos_ < src_.size() && src_[pos_] == '=') {
        pos_++;
        skip_ws();
        if (pos_ >= src_.size() || (src_[pos_] != '"' && src_[pos_] != '\'')) {
          fail("expected quoted attribute value");
        }
        const char quote = src_[pos_++];
        const size_t end = src_.find(quote, pos_);
        if (end == std::string_view::npos) fail("unterminated attribute value");
        pos_ = end + 1;
      }
    }

    // content: text and child elements until the matching close tag
    for (;;) {
      if (pos_ >= src_.size()) fail("missing closing tag for <" + node.name + ">");
      if (src_[pos_] == '<') {
        if (starts_with("</")) {
          pos_ += 2;
          const std::string close = read_name();
          if (close != node.name) fail("mismatched closing tag </" + close + ">");
          skip_ws();
          if (pos_ >= src_.size() || src_[pos_] != '>') fail("malformed closing tag");
          pos_++;
          return node;
        }
        if (starts_with("<!--")) {
          const size_t end = src_.find("-->", pos_ + 4);
          if (end == std::string_view::npos) fail("unterminated comment");
          pos_ = end + 3;
          continue;
        }
        node.children.push_back(parse_element());
      } else {
        node.text += src_[pos_++];
      }
    }
  }

  std::string_view src_;
  size_t pos_ = 0;
};

std::string trimmed(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

int node_int(const XmlNode& parent, const std::string& tag) {
  const XmlNode* node = parent.child(tag);
  if (!node) throw IncompleteAnnotationError(tag);
  const std::string text = trimmed(node->text);
  try {
    return static_cast<int>(std::lround(std::stod(text)));
  } catch (const std::exception&) {
    throw IncompleteAnnotationError(tag);
  }
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<double> padded_curve(const std::vector<IterationRecord>& records, int length,
                                 double (*pick)(const IterationRecord&)) {
  std::vector<double> curve;
  curve.reserve(length);
  for (const auto& rec : records) curve.push_back(pick(rec));
  while (static_cast<int>(curve.size()) < length) curve.push_back(curve.back());
  return curve;
}

ClassReport aggregate(const std::string& name, const std::vector<const ImageResult*>& group,
                      int max_iterations) {
  ClassReport report;
  report.class_name = name;
  report.sample_count = static_cast<int>(group.size());
  report.mean_blackened_curve.assign(max_iterations, 0.0);
  report.mean_cropped_curve.assign(max_iterations, 0.0);
  report.mean_iou_curve.assign(max_iterations, 0.0);
  if (group.empty()) return report;

  for (const ImageResult* r : group) {
    for (int t = 0; t < max_iterations; ++t) {
      report.mean_blackened_curve[t] += r->blackened_curve[t];
      report.mean_cropped_curve[t] += r->cropped_curve[t];
      report.mean_iou_curve[t] += r->iou_curve[t];
    }
  }
  const double inv = 1.0 / report.sample_count;
  for (int t = 0; t < max_iterations; ++t) {
    report.mean_blackened_curve[t] *= inv;
    report.mean_cropped_curve[t] *= inv;
    report.mean_iou_curve[t] *= inv;
  }
  for (int t = 0; t < max_iterations; ++t) {
    if (report.mean_blackened_curve[t] >= report.mean_cropped_curve[t]) {
      report.crossing_iteration = t + 1;
      break;
    }
  }
  return report;
}

}  // namespace

std::vector<Annotation> parse_annotation(std::string_view xml_bytes) {
  XmlReader reader(xml_bytes);
  const XmlNode root = reader.parse_document();

  const XmlNode* filename = root.child("filename");
  if (!filename) throw IncompleteAnnotationError("filename");
  const std::string image_id = trimmed(filename->text);

  const XmlNode* size = root.child("size");
  if (!size) throw IncompleteAnnotationError("size");
  const int img_w = node_int(*size, "width");
  const int img_h = node_int(*size, "height");

  std::vector<Annotation> out;
  for (const XmlNode& child : root.children) {
    if (child.name != "object") continue;
    const XmlNode* name = child.child("name");
    if (!name) throw IncompleteAnnotationError("name");
    const XmlNode* bndbox = child.child("bndbox");
    if (!bndbox) throw IncompleteAnnotationError("bndbox");
    const int xmin = node_int(*bndbox, "xmin");
    const int ymin = node_int(*bndbox, "ymin");
    const int xmax = node_int(*bndbox, "xmax");
    const int ymax = node_int(*bndbox, "ymax");
    if (xmax < xmin || ymax < ymin) throw IncompleteAnnotationError("bndbox");

    // VOC boxes are 1-based inclusive; convert to half-open 0-based.
    Annotation ann;
    ann.image_id = image_id;
    ann.class_name = trimmed(name->text);
    ann.box = Region{xmin - 1, ymin - 1, xmax - xmin + 1, ymax - ymin + 1};
    ann.box = clamp_to_frame(ann.box, img_w, img_h);
    ann.image_width = img_w;
    ann.image_height = img_h;
    out.push_back(std::move(ann));
  }
  return out;
}

std::vector<EvalItem> sample_dataset(const std::vector<EvalItem>& items, int per_class_cap,
                                     uint64_t seed) {
  if (per_class_cap < 1) throw EissError("per_class_cap must be >= 1");
  std::map<std::string, std::vector<const EvalItem*>> by_class;
  for (const EvalItem& item : items) by_class[item.class_name].push_back(&item);

  std::vector<EvalItem> selection;
  for (auto& [class_name, group] : by_class) {
    std::sort(group.begin(), group.end(), [](const EvalItem* a, const EvalItem* b) {
      return a->image_id < b->image_id;
    });
    Rng rng(seed ^ fnv1a(class_name));
    for (size_t i = 0; i + 1 < group.size(); ++i) {
      const size_t j = i + rng.below(group.size() - i);
      std::swap(group[i], group[j]);
    }
    const size_t take = std::min(group.size(), static_cast<size_t>(per_class_cap));
    for (size_t i = 0; i < take; ++i) selection.push_back(*group[i]);
  }
  std::sort(selection.begin(), selection.end(), [](const EvalItem& a, const EvalItem& b) {
    if (a.class_name != b.class_name) return a.class_name < b.class_name;
    return a.image_id < b.image_id;
  });
  return selection;
}

EvalReport evaluate(const std::vector<EvalItem>& items, const ClassifierContract& classifier,
                    const EissConfig& cfg, int workers) {
  std::vector<EvalItem> sorted = items;
  std::sort(sorted.begin(), sorted.end(), [](const EvalItem& a, const EvalItem& b) {
    if (a.class_name != b.class_name) return a.class_name < b.class_name;
    return a.image_id < b.image_id;
  });

  const size_t n = sorted.size();
  std::vector<std::optional<ImageResult>> results(n);
  std::vector<std::optional<SkipRecord>> skips(n);

  parallel_for(n, workers, [&](size_t i) {
    const EvalItem& item = sorted[i];
    try {
      Image img = item.image ? *item.image : load_image(item.image_path);
      const EissResult run = run_eiss(img, classifier, cfg, item.truth, /*workers=*/1);

      ImageResult res;
      res.image_id = item.image_id;
      res.class_name = item.class_name;
      res.stop_reason = run.stop_reason;
      res.iterations_used = static_cast<int>(run.records.size());
      res.padded = res.iterations_used < cfg.max_iterations;
      res.final_iou = run.records.back().iou_vs_truth.value_or(0.0);
      res.blackened_curve = padded_curve(run.records, cfg.max_iterations,
                                         [](const IterationRecord& r) { return r.blackened_score; });
      res.cropped_curve = padded_curve(run.records, cfg.max_iterations,
                                       [](const IterationRecord& r) { return r.cropped_score; });
      res.iou_curve = padded_curve(run.records, cfg.max_iterations, [](const IterationRecord& r) {
        return r.iou_vs_truth.value_or(0.0);
      });
      results[i] = std::move(res);
    } catch (const std::exception& e) {
      skips[i] = SkipRecord{item.image_id, e.what()};
    }
  });

  EvalReport report;
  report.config = cfg;
  std::map<std::string, std::vector<const ImageResult*>> by_class;
  std::vector<const ImageResult*> all;
  for (size_t i = 0; i < n; ++i) {
    if (results[i]) {
      report.images.push_back(*results[i]);
    } else if (skips[i]) {
      report.skipped.push_back(*skips[i]);
    }
  }
  for (const ImageResult& r : report.images) {
    by_class[r.class_name].push_back(&r);
    all.push_back(&r);
  }
  for (const auto& [class_name, group] : by_class) {
    report.classes.push_back(aggregate(class_name, group, cfg.max_iterations));
  }
  report.overall = aggregate("overall", all, cfg.max_iterations);
  if (all.empty()) report.overall.crossing_iteration.reset();

  double iou_sum = 0.0;
  for (const ImageResult* r : all) iou_sum += r->final_iou;
  report.mean_final_iou = all.empty() ? 0.0 : iou_sum / static_cast<double>(all.size());
  return report;
}

std::vector<double> normalize_curve(const std::vector<double>& curve) {
  if (curve.empty()) return {};
  const auto [min_it, max_it] = std::minmax_element(curve.begin(), curve.end());
  const double lo = *min_it, hi = *max_it;
  std::vector<double> out(curve.size());
  if (hi == lo) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  for (size_t i = 0; i < curve.size(); ++i) out[i] = (curve[i] - lo) / (hi - lo);
  return out;
}

DatasetLoadResult load_voc_dataset(const std::string& images_dir,
                                   const std::string& annotations_dir) {
  namespace fs = std::filesystem;
  DatasetLoadResult result;
  if (!fs::is_directory(annotations_dir)) return result;

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(annotations_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  for (const fs::path& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::string xml((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
      const std::vector<Annotation> anns = parse_annotation(xml);
      if (anns.empty()) throw IncompleteAnnotationError("object");
      if (anns.size() > 1) {
        result.multi_instance_filtered++;
        continue;
      }
      const Annotation& ann = anns[0];
      EvalItem item;
      item.image_id = fs::path(ann.image_id).stem().string();
      item.class_name = ann.class_name;
      item.image_path = (fs::path(images_dir) / ann.image_id).string();
      item.truth = ann.box;
      result.items.push_back(std::move(item));
    } catch (const std::exception& e) {
      result.skipped.push_back(SkipRecord{file.filename().string(), e.what()});
    }
  }
  return result;
}

}  // namespace eiss
