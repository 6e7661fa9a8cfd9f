#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eiss/classifier.hpp"
#include "eiss/geometry.hpp"
#include "eiss/rng.hpp"

namespace eiss {

struct EissConfig {
  double alpha = 0.8;               // per-axis shrink factor, in (0,1)
  double eta = 10.0;                // stop threshold as a percentage of S0
  int top_k = 1;                    // reference classes
  int max_iterations = 30;
  int stride = 1;
  int top_regions_per_branch = 5;
  std::optional<int> sample_count;  // M; absent means explicit full sweep
  int min_region_side = 8;          // shrink floor in pixels
  uint64_t seed = 0;                // drives sampling when M is set
};

// Frozen top-K class identities and probabilities from the original image.
// initial_score realizes "the initial global top-K response" as the image's
// own self score, S0 = sum of squared reference probabilities.
struct TopKReference {
  std::vector<int> class_indices;   // descending probability, ties by index
  std::vector<double> ref_probs;    // non-increasing
  double initial_score = 0.0;       // S0 > 0
};

struct IterationRecord {
  int iteration = 0;                // 1-based
  Region resultant_region;
  double blackened_score = 0.0;
  double cropped_score = 0.0;
  int proposal_count = 0;
  std::optional<double> iou_vs_truth;
};

enum class StopReason { kEtaThreshold, kMaxIterations, kDegenerateRegion };

std::string to_string(StopReason reason);
StopReason stop_reason_from_string(const std::string& name);

struct EissResult {
  Region final_region;
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::kMaxIterations;
  TopKReference reference;
};

// Top-5 selections of one iteration, for sweep-equivalence checks.
struct IterationDebug {
  std::vector<Region> candidates;
  std::vector<double> blackened_scores;
  std::vector<double> cropped_scores;
  std::vector<Region> top_blackened;
  std::vector<Region> top_cropped;
};

// Classifies the original image (resized to the backend input dims) and
// freezes the top-K reference. Ties break toward the lower class index.
TopKReference initial_reference(const ClassifierContract& classifier, const Image& img, int k);

// Inner product of the proposal response with the reference, restricted to
// the reference's frozen class indices.
double score_proposal(const ResponseVector& resp, const TopKReference& ref);

// True iff (cropped - blackened) < (eta/100) * s0. The signed difference
// fires before the blackened/cropped curves cross.
bool should_stop(double blackened, double cropped, double s0, double eta_percent);

// M regions drawn uniformly without replacement from the stride-1 grid
// (the whole grid when M covers it), sorted row-major.
std::vector<Region> sample_regions(const Region& parent, double alpha, int m, Rng& rng);

// One EISS iteration: propose candidates inside parent, score the blackened
// and cropped version of each against the reference, union the most
// informative regions of both branches, and score the resultant. Blackening
// and cropping always apply to the original full image. Throws
// DegenerateRegionError when the child side falls below the configured floor.
IterationRecord run_iteration(const Image& img, const ClassifierContract& classifier,
                              const TopKReference& ref, const Region& parent,
                              const EissConfig& cfg, Rng& rng, int workers = 1,
                              IterationDebug* debug = nullptr);

// Full greedy search from the whole frame. Deterministic in
// (image bytes, config, backend); worker count never changes the result.
EissResult run_eiss(const Image& img, const ClassifierContract& classifier,
                    const EissConfig& cfg, std::optional<Region> ground_truth = {},
                    int workers = 1);

}  // namespace eiss
