#include "eiss/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eiss/errors.hpp"
#include "eiss/image.hpp"
#include "eiss/parallel.hpp"

namespace eiss {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kEtaThreshold: return "eta_threshold";
    case StopReason::kMaxIterations: return "max_iterations";
    case StopReason::kDegenerateRegion: return "degenerate_region";
  }
  return "unknown";
}

StopReason stop_reason_from_string(const std::string& name) {
  if (name == "eta_threshold") return StopReason::kEtaThreshold;
  if (name == "max_iterations") return StopReason::kMaxIterations;
  if (name == "degenerate_region") return StopReason::kDegenerateRegion;
  throw EissError("unknown stop reason: " + name);
}

namespace {

void validate_config(const EissConfig& cfg, int class_count) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw EissError("alpha must be in (0,1)");
  if (cfg.eta < 0.0) throw EissError("eta must be >= 0");
  if (cfg.top_k < 1 || cfg.top_k > class_count) throw EissError("top_k must be in [1, class count]");
  if (cfg.max_iterations < 1) throw EissError("max_iterations must be >= 1");
  if (cfg.stride < 1) throw EissError("stride must be >= 1");
  if (cfg.top_regions_per_branch < 1) throw EissError("top_regions_per_branch must be >= 1");
  if (cfg.sample_count && *cfg.sample_count < 1) throw EissError("sample_count must be >= 1");
  if (cfg.min_region_side < 1) throw EissError("min_region_side must be >= 1");
}

// Indices of the `count` lowest scores. Ties break toward the lower
// candidate index (candidates are in row-major order).
std::vector<size_t> lowest_indices(const std::vector<double>& scores, int count) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  const size_t take = std::min<size_t>(static_cast<size_t>(count), order.size());
  std::partial_sort(order.begin(), order.begin() + take, order.end(),
                    [&](size_t a, size_t b) {
                      if (scores[a] != scores[b]) return scores[a] < scores[b];
                      return a < b;
                    });
  order.resize(take);
  return order;
}

}  // namespace

TopKReference initial_reference(const ClassifierContract& classifier, const Image& img, int k) {
  if (k < 1 || k > classifier.class_count()) throw EissError("top_k must be in [1, class count]");
  const Image resized =
      crop_rescale(img, img.frame(), classifier.input_width(), classifier.input_height());
  const ResponseVector resp = classifier.classify(resized);

  std::vector<int> order(resp.probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (resp.probs[a] != resp.probs[b]) return resp.probs[a] > resp.probs[b];
    return a < b;
  });

  TopKReference ref;
  ref.class_indices.assign(order.begin(), order.begin() + k);
  ref.ref_probs.reserve(k);
  for (int idx : ref.class_indices) ref.ref_probs.push_back(resp.probs[idx]);
  ref.initial_score = 0.0;
  for (double p : ref.ref_probs) ref.initial_score += p * p;
  return ref;
}

double score_proposal(const ResponseVector& resp, const TopKReference& ref) {
  double score = 0.0;
  for (size_t i = 0; i < ref.class_indices.size(); ++i) {
    score += resp.probs[ref.class_indices[i]] * ref.ref_probs[i];
  }
  return score;
}

bool should_stop(double blackened, double cropped, double s0, double eta_percent) {
  return (cropped - blackened) < (eta_percent / 100.0) * s0;
}

std::vector<Region> sample_regions(const Region& parent, double alpha, int m, Rng& rng) {
  if (m < 1) throw EissError("sample_count must be >= 1");
  std::vector<Region> grid = propose_grid(parent, alpha, 1);
  if (static_cast<size_t>(m) >= grid.size()) return grid;

  std::vector<size_t> idx(grid.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  for (int i = 0; i < m; ++i) {
    const size_t j = i + rng.below(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  std::sort(idx.begin(), idx.end());  // back to row-major order

  std::vector<Region> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(grid[i]);
  return out;
}

IterationRecord run_iteration(const Image& img, const ClassifierContract& classifier,
                              const TopKReference& ref, const Region& parent,
                              const EissConfig& cfg, Rng& rng, int workers,
                              IterationDebug* debug) {
  const auto [cw, ch] = child_size(parent, cfg.alpha);
  if (cw < cfg.min_region_side || ch < cfg.min_region_side) throw DegenerateRegionError();

  const std::vector<Region> candidates =
      cfg.sample_count ? sample_regions(parent, cfg.alpha, *cfg.sample_count, rng)
                       : propose_grid(parent, cfg.alpha, cfg.stride);
  if (candidates.empty()) throw DegenerateRegionError();

  const int in_w = classifier.input_width();
  const int in_h = classifier.input_height();
  const size_t n = candidates.size();
  std::vector<double> blackened_scores(n, 0.0);
  std::vector<double> cropped_scores(n, 0.0);

  // Both versions of every candidate go through the model in fixed-size
  // chunks so memory stays bounded on large grids.
  const size_t chunk = 64;
  std::vector<Image> batch;
  for (size_t base = 0; base < n; base += chunk) {
    const size_t count = std::min(chunk, n - base);
    batch.assign(2 * count, Image{});
    parallel_for(count, classifier.thread_safe() ? workers : 1, [&](size_t i) {
      const Region& r = candidates[base + i];
      batch[2 * i] = blacken(img, r);
      batch[2 * i + 1] = crop_rescale(img, r, in_w, in_h);
    });
    const std::vector<ResponseVector> responses = classify_batch(classifier, batch, workers);
    for (size_t i = 0; i < count; ++i) {
      blackened_scores[base + i] = score_proposal(responses[2 * i], ref);
      cropped_scores[base + i] = score_proposal(responses[2 * i + 1], ref);
    }
  }

  // Each branch keeps the regions whose modified image deviates most below
  // the reference response: blackening an informative region drains the
  // score, and a crop that isolates the object overshoots the response peak.
  const std::vector<size_t> top_b =
      lowest_indices(blackened_scores, cfg.top_regions_per_branch);
  const std::vector<size_t> top_c =
      lowest_indices(cropped_scores, cfg.top_regions_per_branch);

  std::vector<Region> selected;
  selected.reserve(top_b.size() + top_c.size());
  for (size_t i : top_b) selected.push_back(candidates[i]);
  for (size_t i : top_c) selected.push_back(candidates[i]);
  const Region resultant = bounding_union(selected);

  IterationRecord rec;
  rec.resultant_region = resultant;
  rec.proposal_count = static_cast<int>(n);
  rec.blackened_score = score_proposal(classifier.classify(blacken(img, resultant)), ref);
  try {
    rec.cropped_score =
        score_proposal(classifier.classify(crop_rescale(img, resultant, in_w, in_h)), ref);
  } catch (const EmptyCropError&) {
    rec.cropped_score = 0.0;
  }

  if (debug) {
    debug->candidates = candidates;
    debug->blackened_scores = blackened_scores;
    debug->cropped_scores = cropped_scores;
    debug->top_blackened.clear();
    debug->top_cropped.clear();
    for (size_t i : top_b) debug->top_blackened.push_back(candidates[i]);
    for (size_t i : top_c) debug->top_cropped.push_back(candidates[i]);
  }
  return rec;
}

EissResult run_eiss(const Image& img, const ClassifierContract& classifier,
                    const EissConfig& cfg, std::optional<Region> ground_truth,
                    int workers) {
  if (img.empty()) throw EissError("image is empty");
  validate_config(cfg, classifier.class_count());

  EissResult result;
  result.reference = initial_reference(classifier, img, cfg.top_k);
  Rng rng(cfg.seed);
  Region parent = img.frame();
  result.stop_reason = StopReason::kMaxIterations;

  for (int t = 1; t <= cfg.max_iterations; ++t) {
    IterationRecord rec;
    try {
      rec = run_iteration(img, classifier, result.reference, parent, cfg, rng, workers);
    } catch (const DegenerateRegionError&) {
      if (result.records.empty()) {
        throw EissError("image too small for configuration: first iteration is degenerate");
      }
      result.stop_reason = StopReason::kDegenerateRegion;
      break;
    } catch (const EissError& e) {
      throw EissError("iteration " + std::to_string(t) + ": " + e.what());
    }
    rec.iteration = t;
    if (ground_truth) rec.iou_vs_truth = iou(rec.resultant_region, *ground_truth);
    result.records.push_back(rec);

    if (should_stop(rec.blackened_score, rec.cropped_score, result.reference.initial_score,
                    cfg.eta)) {
      result.stop_reason = StopReason::kEtaThreshold;
      break;
    }
    parent = rec.resultant_region;
  }

  result.final_region = result.records.back().resultant_region;
  return result;
}

}  // namespace eiss
