#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "radialplan/grid.hpp"
#include "radialplan/selection.hpp"

namespace radialplan {

// Square bitmap over the block grid, row-major, one bit per block, each row
// padded to a byte boundary.  Bit order within a byte is LSB first: block
// column c lives in byte c/8 at bit c%8.  This layout is also the on-disk
// payload of the binary format.
struct BlockMask {
  std::int64_t dim = 0;
  std::int64_t row_bytes = 0;
  std::vector<std::uint8_t> bits;

  BlockMask() = default;
  explicit BlockMask(std::int64_t blocks_per_dim);

  bool get(std::int64_t row, std::int64_t col) const {
    return (bits[row * row_bytes + col / 8] >> (col % 8)) & 1u;
  }
  void set(std::int64_t row, std::int64_t col) {
    bits[row * row_bytes + col / 8] |=
        static_cast<std::uint8_t>(1u << (col % 8));
  }
  void merge(const BlockMask& other);  // bitwise or
  std::int64_t active_count() const;
  bool operator==(const BlockMask&) const = default;
};

// Token-level expansion of a block mask (padded token axis, same bit
// packing).  Convenience for the attention evaluators.
struct TokenMask {
  std::int64_t dim = 0;
  std::int64_t row_bytes = 0;
  std::vector<std::uint8_t> bits;

  TokenMask() = default;
  explicit TokenMask(std::int64_t tokens);

  bool get(std::int64_t row, std::int64_t col) const {
    return (bits[row * row_bytes + col / 8] >> (col % 8)) & 1u;
  }
  void set(std::int64_t row, std::int64_t col) {
    bits[row * row_bytes + col / 8] |=
        static_cast<std::uint8_t>(1u << (col % 8));
  }
};

// Fraction of inactive blocks.
double sparsity(const BlockMask& mask);

TokenMask expand_mask(const BlockMask& mask, const GridSpec& g);

// Tile activation rule shared by the builder: a tile column is active when
// its kept-pair count reaches col_threshold of block_size, and the tile is
// active when enough columns are.  Both denominators are block_size itself,
// never the populated subset, so edge tiles are judged by the same bar.
bool aggregate_block(const std::vector<std::pair<int, int>>& kept_in_tile,
                     double col_threshold, double mask_threshold,
                     int block_size);

struct BuildTimings {
  double candidates_s = 0.0;
  double selection_s = 0.0;
  double aggregation_s = 0.0;
  std::int64_t retained_frame_pairs = 0;
  std::int64_t scored_pairs = 0;
};

struct BuildOptions {
  bool disable_split = false;      // keep every frame distance
  BuildTimings* timings = nullptr;
  const FeatureBatch* features = nullptr;  // required in dynamic mode
};

// Full mask construction: per ordered frame pair, build the radial
// candidate band, select by ratio or threshold, aggregate into block tiles,
// merge.  Intra-frame pairs activate their whole block rectangle.  The
// result is deterministic in (grid, config, features, seed) and independent
// of thread count.
BlockMask build_mask(const GridSpec& g, const SparsityConfig& c,
                     std::uint64_t seed, const BuildOptions& opt = {});

enum class MaskFormat { Binary, Csv, Pgm };

// Infers Binary/Csv/Pgm from a .bin/.csv/.pgm extension.
MaskFormat mask_format_for_path(const std::string& path);

void write_mask(const BlockMask& mask, MaskFormat format,
                const std::string& path);

// Reads the binary format only; validates magic, version, and that the
// payload length matches the header dimension exactly.
BlockMask read_mask(const std::string& path);

}  // namespace radialplan
