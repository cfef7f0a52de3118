#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "radialplan/grid.hpp"

namespace radialplan {

// Distance-dependent candidate construction.  Frame pairs at temporal
// distance t get a banded window of token pairs whose width shrinks
// geometrically with the octave of t, and far octaves are additionally
// thinned by keeping only every split_factor-th distance.
struct RadialParams {
  double decay_factor = 1.0;       // scales the window decay length
  double long_range_factor = 1.0;  // scales the split decay length
  double split_epsilon = 1e-6;     // guards the split divisor
};

// Octave index of a temporal distance: number of bits in t.  t >= 1.
int group_index(std::int64_t t);

// Smallest power of two >= tokens_per_frame.  Anchors both decay lengths.
std::int64_t base_span(std::int64_t tokens_per_frame);

// decay_factor * base / 2^group_index(t); halves every octave of t.
double decay_length(std::int64_t t, double factor, std::int64_t base);

// Token band half-width for a frame pair.  Adjacent frames (t <= 1) get the
// full frame width; farther pairs get the rounded decay length, floored at
// one block so a band never vanishes into sub-block noise.
std::int64_t window_width(int frame_i, int frame_j, const RadialParams& p,
                          const GridSpec& g);

// Distance thinning period: 1 keeps every distance, larger values keep only
// multiples.  Grows as the split decay length falls below the block size.
std::int64_t split_factor(std::int64_t t, const RadialParams& p,
                          const GridSpec& g);

// Whether the frame pair at distance t survives thinning.  t <= 1 always
// survives.
bool frame_retained(std::int64_t t, const RadialParams& p, const GridSpec& g);

// Candidate token pairs for one ordered frame pair, kept lazy: the set is
// fully described by the band half-width and the retained flag.  Member
// helpers enumerate pairs in canonical row-major order (u ascending, then v
// ascending), which is the order all sampling and scoring code indexes into.
struct CandidateSet {
  int frame_i = 0;
  int frame_j = 0;
  std::int64_t distance = 0;
  std::int64_t tokens_per_frame = 0;
  std::int64_t width = 0;  // band half-width in tokens
  bool retained = false;

  std::int64_t pair_count() const;

  // First and last v for a given u, inclusive.  Valid only when retained.
  std::int64_t v_lo(std::int64_t u) const;
  std::int64_t v_hi(std::int64_t u) const;

  // Pair at a flat canonical index in [0, pair_count()).
  std::pair<std::int64_t, std::int64_t> pair_at(std::int64_t index) const;

  // Inclusive prefix: number of pairs in rows < u.
  std::vector<std::int64_t> row_offsets() const;

  bool contains(std::int64_t u, std::int64_t v) const;

  void visit(const std::function<void(std::int64_t, std::int64_t)>& fn) const;
};

CandidateSet candidate_set(int frame_i, int frame_j, const RadialParams& p,
                           const GridSpec& g);

// Mean candidate count per query token over the whole grid.  The census
// behind the near-linear scaling claim: with thinning disabled it grows
// logarithmically in n_frames, so doubling frames should well less than
// double this number per token.
double mean_candidates_per_query(const GridSpec& g, const RadialParams& p,
                                 bool ignore_split);

}  // namespace radialplan
