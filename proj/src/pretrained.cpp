#include "eiss/pretrained.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "eiss/errors.hpp"

namespace eiss {

namespace {

constexpr char kMagic[8] = {'E', 'I', 'S', 'S', 'N', 'E', 'T', '1'};

[[noreturn]] void load_failed(const std::string& detail) {
  throw EissError("model load failed: " + detail);
}

[[noreturn]] void mismatch(const std::string& detail) {
  throw EissError("metadata mismatch: " + detail);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void write_u32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void read_f32s(std::istream& in, std::vector<float>& dst, size_t count) {
  dst.resize(count);
  in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(count * sizeof(float)));
}

}  // namespace

ModelMetadata load_metadata(const std::string& meta_path) {
  std::ifstream in(meta_path);
  if (!in) load_failed("cannot open metadata: " + meta_path);

  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string rest;
    std::getline(ls, rest);
    const auto start = rest.find_first_not_of(" \t");
    kv[key] = (start == std::string::npos) ? "" : rest.substr(start);
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty()) load_failed("metadata missing key: " + key);
    return it->second;
  };

  ModelMetadata meta;
  meta.input_width = std::stoi(require("input_width"));
  meta.input_height = std::stoi(require("input_height"));
  if (meta.input_width < 1 || meta.input_height < 1) load_failed("bad input dims");
  {
    std::istringstream ms(require("channel_means"));
    if (!(ms >> meta.channel_means[0] >> meta.channel_means[1] >> meta.channel_means[2])) {
      load_failed("channel_means needs 3 floats");
    }
  }
  meta.scale = std::stod(require("scale"));
  const std::string softmax = require("apply_softmax");
  if (softmax == "true") meta.apply_softmax = true;
  else if (softmax == "false") meta.apply_softmax = false;
  else load_failed("apply_softmax must be true or false");

  std::filesystem::path labels_path(require("labels_file"));
  if (labels_path.is_relative()) {
    labels_path = std::filesystem::path(meta_path).parent_path() / labels_path;
  }
  std::ifstream labels_in(labels_path);
  if (!labels_in) load_failed("cannot open labels file: " + labels_path.string());
  std::string label;
  while (std::getline(labels_in, label)) {
    if (!label.empty() && label.back() == '\r') label.pop_back();
    if (!label.empty()) meta.labels.push_back(label);
  }
  if (meta.labels.empty()) load_failed("labels file is empty");
  return meta;
}

int FeedForwardNet::output_dim() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (it->kind == Layer::Kind::kDense) return static_cast<int>(it->dense.out_dim);
  }
  return 0;
}

int FeedForwardNet::required_input_dim() const {
  for (const auto& layer : layers) {
    if (layer.kind == Layer::Kind::kDense) return static_cast<int>(layer.dense.in_dim);
  }
  return 0;
}

std::vector<double> FeedForwardNet::forward(const std::vector<double>& input) const {
  std::vector<double> act = input;
  for (const auto& layer : layers) {
    if (layer.kind == Layer::Kind::kRelu) {
      for (double& v : act) v = std::max(v, 0.0);
      continue;
    }
    const DenseLayer& d = layer.dense;
    std::vector<double> next(d.out_dim, 0.0);
    for (uint32_t o = 0; o < d.out_dim; ++o) {
      double acc = d.bias[o];
      const float* row = d.weights.data() + static_cast<size_t>(o) * d.in_dim;
      for (uint32_t i = 0; i < d.in_dim; ++i) acc += static_cast<double>(row[i]) * act[i];
      next[o] = acc;
    }
    act = std::move(next);
  }
  return act;
}

FeedForwardNet load_net(const std::string& model_path) {
  std::ifstream in(model_path, std::ios::binary);
  if (!in) load_failed("cannot open model: " + model_path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) load_failed("bad magic in " + model_path);

  FeedForwardNet net;
  const uint32_t layer_count = read_u32(in);
  if (!in || layer_count == 0 || layer_count > 1024) load_failed("bad layer count");
  for (uint32_t l = 0; l < layer_count; ++l) {
    const uint32_t kind = read_u32(in);
    FeedForwardNet::Layer layer;
    if (kind == 0) {
      layer.kind = FeedForwardNet::Layer::Kind::kDense;
      layer.dense.in_dim = read_u32(in);
      layer.dense.out_dim = read_u32(in);
      if (!in || layer.dense.out_dim == 0) load_failed("bad dense dims");
      read_f32s(in, layer.dense.weights,
                static_cast<size_t>(layer.dense.in_dim) * layer.dense.out_dim);
      read_f32s(in, layer.dense.bias, layer.dense.out_dim);
    } else if (kind == 1) {
      layer.kind = FeedForwardNet::Layer::Kind::kRelu;
    } else {
      load_failed("unknown layer kind");
    }
    if (!in) load_failed("truncated model file");
    net.layers.push_back(std::move(layer));
  }
  if (net.output_dim() == 0) load_failed("model has no dense output layer");
  return net;
}

void save_net(const FeedForwardNet& net, const std::string& model_path) {
  std::ofstream out(model_path, std::ios::binary);
  if (!out) throw EissError("cannot write model: " + model_path);
  out.write(kMagic, 8);
  write_u32(out, static_cast<uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    if (layer.kind == FeedForwardNet::Layer::Kind::kRelu) {
      write_u32(out, 1);
      continue;
    }
    write_u32(out, 0);
    write_u32(out, layer.dense.in_dim);
    write_u32(out, layer.dense.out_dim);
    out.write(reinterpret_cast<const char*>(layer.dense.weights.data()),
              static_cast<std::streamsize>(layer.dense.weights.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(layer.dense.bias.data()),
              static_cast<std::streamsize>(layer.dense.bias.size() * sizeof(float)));
  }
}

namespace {

class PretrainedBackend : public ClassifierContract {
 public:
  PretrainedBackend(FeedForwardNet net, ModelMetadata meta)
      : net_(std::move(net)), meta_(std::move(meta)) {}

  int input_width() const override { return meta_.input_width; }
  int input_height() const override { return meta_.input_height; }
  int class_count() const override { return static_cast<int>(meta_.labels.size()); }

  ResponseVector classify(const Image& img) const override {
    const Image* input = &img;
    Image resized;
    if (img.width != meta_.input_width || img.height != meta_.input_height) {
      resized = crop_rescale(img, img.frame(), meta_.input_width, meta_.input_height);
      input = &resized;
    }

    std::vector<double> flat(input->pixels.size());
    const int channels = input->channels;
    for (size_t i = 0; i < flat.size(); ++i) {
      const int c = static_cast<int>(i % channels);
      flat[i] = (static_cast<double>(input->pixels[i]) - meta_.channel_means[c]) * meta_.scale;
    }

    std::vector<double> logits = net_.forward(flat);
    ResponseVector resp;
    if (meta_.apply_softmax) {
      double max_logit = logits[0];
      for (double v : logits) max_logit = std::max(max_logit, v);
      double sum = 0.0;
      resp.probs.resize(logits.size());
      for (size_t i = 0; i < logits.size(); ++i) {
        resp.probs[i] = std::exp(logits[i] - max_logit);
        sum += resp.probs[i];
      }
      for (double& p : resp.probs) p /= sum;
    } else {
      double sum = 0.0;
      for (double v : logits) sum += v;
      if (std::fabs(sum - 1.0) > 1e-6) {
        throw EissError("model output is not a probability distribution and apply_softmax is false");
      }
      resp.probs = std::move(logits);
    }
    resp.labels = meta_.labels;
    return resp;
  }

 private:
  FeedForwardNet net_;
  ModelMetadata meta_;
};

}  // namespace

std::unique_ptr<ClassifierContract> load_pretrained(const std::string& model_path,
                                                    const std::string& meta_path) {
  ModelMetadata meta = load_metadata(meta_path);
  FeedForwardNet net = load_net(model_path);

  if (net.output_dim() != static_cast<int>(meta.labels.size())) {
    mismatch("model outputs " + std::to_string(net.output_dim()) + " classes but metadata declares " +
             std::to_string(meta.labels.size()) + " labels");
  }
  const int required = net.required_input_dim();
  const int flat_dim = meta.input_width * meta.input_height * 3;
  const int flat_dim_gray = meta.input_width * meta.input_height;
  if (required != 0 && required != flat_dim && required != flat_dim_gray) {
    mismatch("model expects " + std::to_string(required) + " inputs but declared dims give " +
             std::to_string(flat_dim));
  }
  return std::make_unique<PretrainedBackend>(std::move(net), std::move(meta));
}

}  // namespace eiss
