#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "radialplan/attention.hpp"
#include "radialplan/radial.hpp"
#include "radialplan/rng.hpp"

namespace radialplan {

enum class Mode { StaticRatio, DynamicThreshold };

// Full sparsity configuration for one mask build.  near_param / far_param
// are the mode's two distance-conditioned knobs: retention ratios in
// static mode, score thresholds in dynamic mode.  The near knob applies
// where the window decay length is still at least one block wide.
struct SparsityConfig {
  Mode mode = Mode::StaticRatio;
  RadialParams radial;
  double mask_threshold = 0.75;  // block activation fraction
  double col_threshold = 0.20;   // column activation fraction
  double near_param = 0.25;
  double far_param = 0.55;
  int fallback_k = 1;  // dynamic mode: pairs kept when none clear the bar

  void validate() const;
};

// Distance regime of a frame pair: 0 for t <= 1 (dense band), 1 while the
// decay length is >= one block, 2 beyond.
int distance_tier(int frame_i, int frame_j, const RadialParams& p,
                  const GridSpec& g);

// Static mode: fraction of the candidate set to keep.  1.0 for t <= 1.
double retention_ratio(int frame_i, int frame_j, const SparsityConfig& c,
                       const GridSpec& g);

// Dynamic mode: normalized-score cutoff.  -inf for t <= 1.
double score_threshold(int frame_i, int frame_j, const SparsityConfig& c,
                       const GridSpec& g);

// Per-pair sampling stream seed.  Part of the reproducibility contract.
inline std::uint64_t pair_seed(std::uint64_t seed, int frame_i, int frame_j) {
  return mix64(seed, static_cast<std::uint64_t>(frame_i),
               static_cast<std::uint64_t>(frame_j));
}

// Uniform sample without replacement of max(1, floor(count * ratio)) pairs,
// via a partial Fisher-Yates shuffle of the canonical flat indices.  Order
// of the result follows the shuffle, not the canonical order.
std::vector<std::pair<std::int64_t, std::int64_t>> static_select(
    const CandidateSet& cands, double ratio, std::uint64_t seed);

// Mean head-wise scaled dot products between frame_i queries and frame_j
// keys, one score per candidate pair in canonical order.  Accumulation
// order is pinned (per-head dot in double, head mean in double) so a
// reimplementation can match scores bitwise.
std::vector<float> proxy_scores(const FeatureBatch& features, int frame_i,
                                int frame_j, const CandidateSet& cands,
                                std::int64_t tokens_per_frame);

struct ScoreStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

// Standardize scores against their own candidate set.  Returns the stats
// used; scores are replaced by (s - mean) / (stddev + 1e-8) computed in
// double, written back as double precision values in a float vector's
// stead: the normalized vector is double to keep threshold comparisons
// exact across implementations.
std::vector<double> normalize_scores(const std::vector<float>& scores,
                                     ScoreStats* stats = nullptr);

// Keep candidates whose normalized score clears the threshold (>=).  When
// none do, fall back to the fallback_k best, ties broken toward the
// lexicographically smallest pair.
std::vector<std::pair<std::int64_t, std::int64_t>> dynamic_select(
    const CandidateSet& cands, const std::vector<double>& normalized,
    double threshold, int fallback_k = 1);

}  // namespace radialplan
