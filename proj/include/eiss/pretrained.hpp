#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "eiss/classifier.hpp"

namespace eiss {

// Plain-text key-value metadata for a serialized model. One `key value` pair
// per line, whitespace-delimited, '#' starts a comment. Required keys:
// input_width, input_height, channel_means (3 floats), scale (float),
// apply_softmax (true/false), labels_file (newline-separated class names,
// relative paths resolved against the metadata file's directory).
struct ModelMetadata {
  int input_width = 0;
  int input_height = 0;
  std::array<double, 3> channel_means = {0.0, 0.0, 0.0};
  double scale = 1.0;
  bool apply_softmax = true;
  std::vector<std::string> labels;
};

ModelMetadata load_metadata(const std::string& meta_path);

// Serialized feed-forward net, binary little-endian:
//   magic "EISSNET1", u32 layer_count, then per layer:
//     u32 kind (0 = dense, 1 = relu)
//     dense: u32 in_dim, u32 out_dim, f32 weights[out][in] row-major, f32 bias[out]
// A dense layer with in_dim 0 emits its bias unconditionally (constant head).
// The net runs on the flattened preprocessed raster (row-major, channel
// interleaved); preprocessing is (pixel - channel_mean) * scale.
struct DenseLayer {
  uint32_t in_dim = 0;
  uint32_t out_dim = 0;
  std::vector<float> weights;  // out_dim x in_dim
  std::vector<float> bias;     // out_dim
};

struct FeedForwardNet {
  struct Layer {
    enum class Kind { kDense, kRelu };
    Kind kind = Kind::kDense;
    DenseLayer dense;
  };
  std::vector<Layer> layers;

  int output_dim() const;
  // First nonzero dense input width, or 0 when the net ignores its input.
  int required_input_dim() const;
  std::vector<double> forward(const std::vector<double>& input) const;
};

FeedForwardNet load_net(const std::string& model_path);
void save_net(const FeedForwardNet& net, const std::string& model_path);

// Builds the contract for a serialized model: classify resizes to the
// declared input dims, subtracts channel means, applies the declared scale,
// runs one forward pass and optionally a softmax. Throws
// EissError("model load failed: ...") on unreadable/corrupt files and
// EissError("metadata mismatch: ...") when metadata and model disagree.
std::unique_ptr<ClassifierContract> load_pretrained(const std::string& model_path,
                                                    const std::string& meta_path);

}  // namespace eiss
