#include "eiss/classifier.hpp"

#include "eiss/errors.hpp"
#include "eiss/parallel.hpp"

namespace eiss {

std::vector<ResponseVector> classify_batch(const ClassifierContract& contract,
                                           std::span<const Image> images,
                                           int workers) {
  std::vector<ResponseVector> out(images.size());
  const int effective_workers = contract.thread_safe() ? workers : 1;
  parallel_for(images.size(), effective_workers, [&](size_t i) {
    try {
      out[i] = contract.classify(images[i]);
    } catch (const std::exception& e) {
      throw EissError("classify failed at batch index " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

}  // namespace eiss
