#include "radialplan/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace radialplan {

void SparsityConfig::validate() const {
  if (!(radial.decay_factor > 0.0))
    throw std::invalid_argument("config: decay_factor must be positive");
  if (!(radial.long_range_factor > 0.0))
    throw std::invalid_argument("config: long_range_factor must be positive");
  if (!(mask_threshold > 0.0 && mask_threshold <= 1.0))
    throw std::invalid_argument("config: mask_threshold must be in (0, 1]");
  if (!(col_threshold > 0.0 && col_threshold <= 1.0))
    throw std::invalid_argument("config: col_threshold must be in (0, 1]");
  if (fallback_k < 1)
    throw std::invalid_argument("config: fallback_k must be >= 1");
  if (mode == Mode::StaticRatio) {
    if (!(near_param > 0.0 && near_param <= 1.0) ||
        !(far_param > 0.0 && far_param <= 1.0))
      throw std::invalid_argument(
          "config: static retention ratios must be in (0, 1]");
  } else {
    if (!std::isfinite(near_param) || !std::isfinite(far_param))
      throw std::invalid_argument(
          "config: dynamic thresholds must be finite");
  }
}

int distance_tier(int frame_i, int frame_j, const RadialParams& p,
                  const GridSpec& g) {
  const std::int64_t t = std::llabs(static_cast<long long>(frame_i) - frame_j);
  if (t <= 1) return 0;
  const double len =
      decay_length(t, p.decay_factor, base_span(g.tokens_per_frame));
  return len >= static_cast<double>(g.block_size) ? 1 : 2;
}

double retention_ratio(int frame_i, int frame_j, const SparsityConfig& c,
                       const GridSpec& g) {
  switch (distance_tier(frame_i, frame_j, c.radial, g)) {
    case 0: return 1.0;
    case 1: return c.near_param;
    default: return c.far_param;
  }
}

double score_threshold(int frame_i, int frame_j, const SparsityConfig& c,
                       const GridSpec& g) {
  switch (distance_tier(frame_i, frame_j, c.radial, g)) {
    case 0: return -std::numeric_limits<double>::infinity();
    case 1: return c.near_param;
    default: return c.far_param;
  }
}

std::vector<std::pair<std::int64_t, std::int64_t>> static_select(
    const CandidateSet& cands, double ratio, std::uint64_t seed) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  const std::int64_t n = cands.pair_count();
  if (n == 0) return out;
  if (!(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument("static_select: ratio must be in (0, 1]");
  const std::int64_t k = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(static_cast<double>(n) * ratio)));

  // Partial Fisher-Yates over the canonical flat indices.  The candidate
  // count fits 32 bits by construction (tokens_per_frame^2 bounds it).
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0u);
  SplitMix64 rng(pair_seed(seed, cands.frame_i, cands.frame_j));
  for (std::int64_t d = 0; d < k; ++d) {
    const std::int64_t r =
        d + static_cast<std::int64_t>(rng.bounded(static_cast<std::uint64_t>(n - d)));
    std::swap(idx[d], idx[r]);
  }

  const auto off = cands.row_offsets();
  out.reserve(static_cast<std::size_t>(k));
  for (std::int64_t d = 0; d < k; ++d) {
    const std::int64_t flat = idx[d];
    const auto it = std::upper_bound(off.begin(), off.end(), flat);
    const std::int64_t u = (it - off.begin()) - 1;
    out.emplace_back(u, cands.v_lo(u) + (flat - off[u]));
  }
  return out;
}

std::vector<float> proxy_scores(const FeatureBatch& features, int frame_i,
                                int frame_j, const CandidateSet& cands,
                                std::int64_t tokens_per_frame) {
  if (features.heads < 1)
    throw std::invalid_argument("proxy_scores: batch has no heads");
  const std::int64_t qi = static_cast<std::int64_t>(frame_i) * tokens_per_frame;
  const std::int64_t kj = static_cast<std::int64_t>(frame_j) * tokens_per_frame;
  if (qi + tokens_per_frame > features.tokens ||
      kj + tokens_per_frame > features.tokens)
    throw std::out_of_range("proxy_scores: frame outside feature batch");

  // Pinned arithmetic: per-head dot and head mean both accumulate in
  // double, in index order, so scores reproduce exactly elsewhere.
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(features.head_dim));
  std::vector<float> scores;
  scores.reserve(static_cast<std::size_t>(cands.pair_count()));
  cands.visit([&](std::int64_t u, std::int64_t v) {
    double acc = 0.0;
    for (int h = 0; h < features.heads; ++h) {
      const auto& q = features.queries[h];
      const auto& k = features.keys[h];
      double dot = 0.0;
      for (int d = 0; d < features.head_dim; ++d)
        dot += static_cast<double>(q(qi + u, d)) *
               static_cast<double>(k(kj + v, d));
      acc += dot * inv_sqrt_d;
    }
    scores.push_back(static_cast<float>(acc / features.heads));
  });
  return scores;
}

std::vector<double> normalize_scores(const std::vector<float>& scores,
                                     ScoreStats* stats) {
  const std::size_t n = scores.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) {
    if (stats) *stats = {};
    return out;
  }
  // Two-pass population statistics over the candidate set only.
  double sum = 0.0;
  for (float s : scores) sum += static_cast<double>(s);
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (float s : scores) {
    const double d = static_cast<double>(s) - mean;
    sq += d * d;
  }
  const double sd = std::sqrt(sq / static_cast<double>(n));
  if (stats) *stats = {mean, sd};
  const double denom = sd + 1e-8;
  for (std::size_t i = 0; i < n; ++i)
    out[i] = (static_cast<double>(scores[i]) - mean) / denom;
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> dynamic_select(
    const CandidateSet& cands, const std::vector<double>& normalized,
    double threshold, int fallback_k) {
  const std::int64_t n = cands.pair_count();
  if (static_cast<std::int64_t>(normalized.size()) != n)
    throw std::invalid_argument("dynamic_select: score count mismatch");
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  if (n == 0) return out;

  std::vector<std::int64_t> kept;
  for (std::int64_t i = 0; i < n; ++i)
    if (normalized[i] >= threshold) kept.push_back(i);

  if (kept.empty()) {
    // Best fallback_k by score; canonical index order breaks ties, which
    // is exactly lexicographic (u, v) order.
    const std::int64_t k = std::min<std::int64_t>(fallback_k, n);
    kept.resize(static_cast<std::size_t>(n));
    std::iota(kept.begin(), kept.end(), 0);
    std::stable_sort(kept.begin(), kept.end(),
                     [&](std::int64_t a, std::int64_t b) {
                       return normalized[a] > normalized[b];
                     });
    kept.resize(static_cast<std::size_t>(k));
    std::sort(kept.begin(), kept.end());
  }

  const auto off = cands.row_offsets();
  out.reserve(kept.size());
  for (std::int64_t flat : kept) {
    const auto it = std::upper_bound(off.begin(), off.end(), flat);
    const std::int64_t u = (it - off.begin()) - 1;
    out.emplace_back(u, cands.v_lo(u) + (flat - off[u]));
  }
  return out;
}

}  // namespace radialplan
