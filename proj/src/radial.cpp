#include "radialplan/radial.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace radialplan {

int group_index(std::int64_t t) {
  if (t < 1) throw std::invalid_argument("group_index: t must be >= 1");
  return std::bit_width(static_cast<std::uint64_t>(t));
}

std::int64_t base_span(std::int64_t tokens_per_frame) {
  if (tokens_per_frame < 1)
    throw std::invalid_argument("base_span: tokens_per_frame must be >= 1");
  return static_cast<std::int64_t>(
      std::bit_ceil(static_cast<std::uint64_t>(tokens_per_frame)));
}

double decay_length(std::int64_t t, double factor, std::int64_t base) {
  // Exact octave form: base / 2^bits(t), not the smooth base / t curve it
  // approximates.  Constant within an octave, halves at each power of two.
  const int g = group_index(t);
  return factor * static_cast<double>(base) /
         static_cast<double>(std::int64_t{1} << g);
}

std::int64_t window_width(int frame_i, int frame_j, const RadialParams& p,
                          const GridSpec& g) {
  const std::int64_t t = std::llabs(static_cast<long long>(frame_i) - frame_j);
  if (t <= 1) return g.tokens_per_frame;
  const double len =
      decay_length(t, p.decay_factor, base_span(g.tokens_per_frame));
  // Round half away from zero, then floor at one block.
  const std::int64_t rounded = std::llround(len);
  return std::max<std::int64_t>(g.block_size, rounded);
}

std::int64_t split_factor(std::int64_t t, const RadialParams& p,
                          const GridSpec& g) {
  if (t < 1) throw std::invalid_argument("split_factor: t must be >= 1");
  const double len =
      decay_length(t, p.long_range_factor, base_span(g.tokens_per_frame));
  const double raw = static_cast<double>(g.block_size) /
                     (len + p.split_epsilon);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(raw));
}

bool frame_retained(std::int64_t t, const RadialParams& p, const GridSpec& g) {
  if (t <= 1) return true;
  return t % split_factor(t, p, g) == 0;
}

std::int64_t CandidateSet::pair_count() const {
  if (!retained) return 0;
  const std::int64_t n = tokens_per_frame;
  if (width >= n - 1) return n * n;
  const std::int64_t m = n - 1 - width;
  return n * n - m * (m + 1);
}

std::int64_t CandidateSet::v_lo(std::int64_t u) const {
  return std::max<std::int64_t>(0, u - width);
}

std::int64_t CandidateSet::v_hi(std::int64_t u) const {
  return std::min(tokens_per_frame - 1, u + width);
}

std::vector<std::int64_t> CandidateSet::row_offsets() const {
  std::vector<std::int64_t> off(static_cast<std::size_t>(tokens_per_frame) + 1,
                                0);
  if (!retained) return off;
  for (std::int64_t u = 0; u < tokens_per_frame; ++u)
    off[u + 1] = off[u] + (v_hi(u) - v_lo(u) + 1);
  return off;
}

std::pair<std::int64_t, std::int64_t> CandidateSet::pair_at(
    std::int64_t index) const {
  // Linear row scan; bulk consumers convert through row_offsets() instead.
  if (index < 0 || index >= pair_count())
    throw std::out_of_range("pair_at: index outside candidate set");
  std::int64_t u = 0;
  std::int64_t rest = index;
  while (true) {
    const std::int64_t row = v_hi(u) - v_lo(u) + 1;
    if (rest < row) break;
    rest -= row;
    ++u;
  }
  return {u, v_lo(u) + rest};
}

bool CandidateSet::contains(std::int64_t u, std::int64_t v) const {
  if (!retained) return false;
  if (u < 0 || u >= tokens_per_frame || v < 0 || v >= tokens_per_frame)
    return false;
  return std::llabs(static_cast<long long>(u) - v) <= width;
}

void CandidateSet::visit(
    const std::function<void(std::int64_t, std::int64_t)>& fn) const {
  if (!retained) return;
  for (std::int64_t u = 0; u < tokens_per_frame; ++u)
    for (std::int64_t v = v_lo(u); v <= v_hi(u); ++v) fn(u, v);
}

CandidateSet candidate_set(int frame_i, int frame_j, const RadialParams& p,
                           const GridSpec& g) {
  CandidateSet c;
  c.frame_i = frame_i;
  c.frame_j = frame_j;
  c.distance = std::llabs(static_cast<long long>(frame_i) - frame_j);
  c.tokens_per_frame = g.tokens_per_frame;
  c.width = window_width(frame_i, frame_j, p, g);
  c.retained = frame_retained(c.distance, p, g);
  return c;
}

double mean_candidates_per_query(const GridSpec& g, const RadialParams& p,
                                 bool ignore_split) {
  // Sum over ordered frame pairs of the band size, by distance.  All pairs
  // at equal distance share a window, so the census is O(n_frames).
  long double total = 0.0L;
  for (std::int64_t t = 0; t < g.n_frames; ++t) {
    const std::int64_t pairs_at_t = t == 0 ? g.n_frames : 2 * (g.n_frames - t);
    if (!ignore_split && !frame_retained(t, p, g)) continue;
    CandidateSet c;
    c.tokens_per_frame = g.tokens_per_frame;
    c.width = window_width(0, static_cast<int>(t), p, g);
    c.retained = true;
    total += static_cast<long double>(pairs_at_t) *
             static_cast<long double>(c.pair_count());
  }
  return static_cast<double>(total / static_cast<long double>(g.total_tokens));
}

}  // namespace radialplan
