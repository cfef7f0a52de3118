#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>

namespace radialplan {

// Token layout for a video sequence: n_frames frames of tokens_per_frame
// tokens each, flattened frame-major.  The block grid pads the token axis up
// to a multiple of block_size; padding tokens belong to the last frame and
// carry no content, so they may always be masked.
struct GridSpec {
  int n_frames = 0;
  int tokens_per_frame = 0;
  int block_size = 0;

  std::int64_t total_tokens = 0;   // n_frames * tokens_per_frame
  std::int64_t padded_tokens = 0;  // total_tokens rounded up to block_size
  std::int64_t blocks_per_dim = 0; // padded_tokens / block_size
};

inline GridSpec make_grid(int n_frames, int tokens_per_frame, int block_size) {
  if (n_frames < 1) throw std::invalid_argument("grid: n_frames must be >= 1");
  if (tokens_per_frame < 1)
    throw std::invalid_argument("grid: tokens_per_frame must be >= 1");
  if (block_size < 2 ||
      !std::has_single_bit(static_cast<unsigned>(block_size)))
    throw std::invalid_argument(
        "grid: block_size must be a power of two >= 2");

  GridSpec g;
  g.n_frames = n_frames;
  g.tokens_per_frame = tokens_per_frame;
  g.block_size = block_size;
  g.total_tokens =
      static_cast<std::int64_t>(n_frames) * tokens_per_frame;
  const std::int64_t b = block_size;
  g.padded_tokens = (g.total_tokens + b - 1) / b * b;
  g.blocks_per_dim = g.padded_tokens / b;
  return g;
}

// Block row/column owning a (padded) token index.
inline std::int64_t block_of(std::int64_t token, const GridSpec& g) {
  if (token < 0 || token >= g.padded_tokens)
    throw std::out_of_range("block_of: token outside padded range");
  return token / g.block_size;
}

// Frame owning a token; padding tokens count as part of the last frame.
inline int frame_of(std::int64_t token, const GridSpec& g) {
  if (token < 0 || token >= g.padded_tokens)
    throw std::out_of_range("frame_of: token outside padded range");
  if (token >= g.total_tokens) return g.n_frames - 1;
  return static_cast<int>(token / g.tokens_per_frame);
}

}  // namespace radialplan
