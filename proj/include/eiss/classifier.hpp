#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eiss/image.hpp"

namespace eiss {

// Per-class probabilities from a classifier backend. Elementwise in [0,1],
// summing to 1 within 1e-6.
struct ResponseVector {
  std::vector<double> probs;
  std::optional<std::vector<std::string>> labels;

  int size() const { return static_cast<int>(probs.size()); }
};

// The fixed black box EISS scores against. classify must be deterministic:
// identical input bits give identical output bits.
class ClassifierContract {
 public:
  virtual ~ClassifierContract() = default;

  virtual int input_width() const = 0;
  virtual int input_height() const = 0;
  virtual int class_count() const = 0;
  virtual ResponseVector classify(const Image& img) const = 0;

  // Backends that cannot take concurrent classify calls return false and the
  // engine serializes; results are identical either way.
  virtual bool thread_safe() const { return true; }
};

// classify() applied to every image; output i corresponds to images[i] and is
// independent of how the batch is partitioned or scheduled. Per-image
// failures are rethrown with the offending index.
std::vector<ResponseVector> classify_batch(const ClassifierContract& contract,
                                           std::span<const Image> images,
                                           int workers = 1);

}  // namespace eiss
