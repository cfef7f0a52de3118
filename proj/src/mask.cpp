#include "radialplan/mask.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "radialplan/parallel.hpp"

namespace radialplan {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

BlockMask::BlockMask(std::int64_t blocks_per_dim)
    : dim(blocks_per_dim),
      row_bytes((blocks_per_dim + 7) / 8),
      bits(static_cast<std::size_t>(dim * row_bytes), 0) {}

void BlockMask::merge(const BlockMask& other) {
  if (other.dim != dim)
    throw std::invalid_argument("merge: mask dimensions differ");
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] |= other.bits[i];
}

std::int64_t BlockMask::active_count() const {
  std::int64_t n = 0;
  for (std::uint8_t b : bits) n += std::popcount(static_cast<unsigned>(b));
  return n;
}

TokenMask::TokenMask(std::int64_t tokens)
    : dim(tokens),
      row_bytes((tokens + 7) / 8),
      bits(static_cast<std::size_t>(dim * row_bytes), 0) {}

double sparsity(const BlockMask& mask) {
  const double total = static_cast<double>(mask.dim) * mask.dim;
  return 1.0 - static_cast<double>(mask.active_count()) / total;
}

TokenMask expand_mask(const BlockMask& mask, const GridSpec& g) {
  if (mask.dim != g.blocks_per_dim)
    throw std::invalid_argument("expand_mask: mask does not fit grid");
  TokenMask t(g.padded_tokens);
  for (std::int64_t r = 0; r < g.padded_tokens; ++r) {
    const std::int64_t br = r / g.block_size;
    for (std::int64_t bc = 0; bc < mask.dim; ++bc) {
      if (!mask.get(br, bc)) continue;
      for (std::int64_t c = bc * g.block_size;
           c < (bc + 1) * g.block_size && c < g.padded_tokens; ++c)
        t.set(r, c);
    }
  }
  return t;
}

bool aggregate_block(const std::vector<std::pair<int, int>>& kept_in_tile,
                     double col_threshold, double mask_threshold,
                     int block_size) {
  std::vector<int> col_count(static_cast<std::size_t>(block_size), 0);
  for (const auto& [r, c] : kept_in_tile) {
    if (r < 0 || r >= block_size || c < 0 || c >= block_size)
      throw std::out_of_range("aggregate_block: pair outside tile");
    ++col_count[c];
  }
  int active_cols = 0;
  for (int c = 0; c < block_size; ++c)
    if (static_cast<double>(col_count[c]) / block_size >= col_threshold)
      ++active_cols;
  return static_cast<double>(active_cols) / block_size >= mask_threshold;
}

namespace {

// Per frame pair scatter-and-threshold state, reused across pairs.
struct TileCounts {
  std::int64_t r0 = 0, c0 = 0, tr = 0, tc = 0;
  int block = 0;
  std::vector<std::uint32_t> counts;  // (tile_row, tile_col, in-tile col)

  void reset(int frame_i, int frame_j, const GridSpec& g) {
    block = g.block_size;
    const std::int64_t qi = static_cast<std::int64_t>(frame_i) *
                            g.tokens_per_frame;
    const std::int64_t kj = static_cast<std::int64_t>(frame_j) *
                            g.tokens_per_frame;
    r0 = qi / block;
    c0 = kj / block;
    tr = (qi + g.tokens_per_frame - 1) / block - r0 + 1;
    tc = (kj + g.tokens_per_frame - 1) / block - c0 + 1;
    counts.assign(static_cast<std::size_t>(tr * tc * block), 0);
  }

  void add(std::int64_t global_row, std::int64_t global_col) {
    const std::int64_t rr = global_row / block - r0;
    const std::int64_t cc = global_col / block - c0;
    ++counts[static_cast<std::size_t>(((rr * tc) + cc) * block +
                                      global_col % block)];
  }

  void apply(double col_threshold, double mask_threshold,
             BlockMask& mask) const {
    for (std::int64_t r = 0; r < tr; ++r)
      for (std::int64_t c = 0; c < tc; ++c) {
        const std::uint32_t* col =
            counts.data() + static_cast<std::size_t>(((r * tc) + c) * block);
        int active_cols = 0;
        for (int k = 0; k < block; ++k)
          if (static_cast<double>(col[k]) / block >= col_threshold)
            ++active_cols;
        if (static_cast<double>(active_cols) / block >= mask_threshold)
          mask.set(r0 + r, c0 + c);
      }
  }
};

// Closed-form counts for a fully kept band: every (u, v) with |u - v| <=
// width contributes, so each tile column's count is the length of a row
// interval intersection.  Must stay scatter-equivalent; the tests hold the
// two paths to identical masks.
void count_full_band(const CandidateSet& cands, const GridSpec& g,
                     TileCounts& tiles) {
  const std::int64_t nt = g.tokens_per_frame;
  const std::int64_t qi = static_cast<std::int64_t>(cands.frame_i) * nt;
  const std::int64_t kj = static_cast<std::int64_t>(cands.frame_j) * nt;
  for (std::int64_t c = 0; c < tiles.tc; ++c) {
    for (int k = 0; k < tiles.block; ++k) {
      const std::int64_t gc = (tiles.c0 + c) * tiles.block + k;
      const std::int64_t lv = gc - kj;
      if (lv < 0 || lv >= nt) continue;
      const std::int64_t ulo = std::max<std::int64_t>(0, lv - cands.width);
      const std::int64_t uhi = std::min(nt - 1, lv + cands.width);
      if (ulo > uhi) continue;
      for (std::int64_t r = 0; r < tiles.tr; ++r) {
        const std::int64_t row_lo =
            std::max(qi + ulo, (tiles.r0 + r) * tiles.block);
        const std::int64_t row_hi = std::min(
            qi + uhi, (tiles.r0 + r) * tiles.block + tiles.block - 1);
        if (row_lo > row_hi) continue;
        tiles.counts[static_cast<std::size_t>(((r * tiles.tc) + c) *
                                                  tiles.block +
                                              k)] +=
            static_cast<std::uint32_t>(row_hi - row_lo + 1);
      }
    }
  }
}

}  // namespace

BlockMask build_mask(const GridSpec& g, const SparsityConfig& c,
                     std::uint64_t seed, const BuildOptions& opt) {
  c.validate();
  if (c.mode == Mode::DynamicThreshold) {
    if (!opt.features)
      throw std::invalid_argument("build_mask: dynamic mode needs features");
    opt.features->validate(false);
    if (opt.features->tokens < g.total_tokens)
      throw std::invalid_argument("build_mask: feature batch too short");
  }

  BlockMask mask(g.blocks_per_dim);

  // Intra-frame pairs activate the whole covering block rectangle; the
  // diagonal is always present regardless of thresholds.
  for (int i = 0; i < g.n_frames; ++i) {
    const std::int64_t lo = static_cast<std::int64_t>(i) * g.tokens_per_frame;
    const std::int64_t hi = lo + g.tokens_per_frame - 1;
    for (std::int64_t r = lo / g.block_size; r <= hi / g.block_size; ++r)
      for (std::int64_t cb = lo / g.block_size; cb <= hi / g.block_size; ++cb)
        mask.set(r, cb);
  }

  std::vector<std::pair<int, int>> jobs;
  for (int i = 0; i < g.n_frames; ++i)
    for (int j = 0; j < g.n_frames; ++j) {
      const std::int64_t t = std::llabs(static_cast<long long>(i) - j);
      if (t < 1) continue;
      if (!opt.disable_split && !frame_retained(t, c.radial, g)) continue;
      jobs.emplace_back(i, j);
    }

  const int workers =
      static_cast<int>(std::min<std::int64_t>(thread_budget(),
                                              std::max<std::size_t>(jobs.size(), 1)));
  std::vector<BlockMask> local(static_cast<std::size_t>(workers));
  std::vector<BuildTimings> local_times(static_cast<std::size_t>(workers));

  parallel_for(static_cast<std::int64_t>(jobs.size()),
               [&](int w, std::int64_t begin, std::int64_t end) {
    BlockMask& lm = local[w];
    if (lm.dim == 0) lm = BlockMask(g.blocks_per_dim);
    BuildTimings& bt = local_times[w];
    TileCounts tiles;
    std::vector<std::uint32_t> fy;

    for (std::int64_t jix = begin; jix < end; ++jix) {
      const auto [i, j] = jobs[static_cast<std::size_t>(jix)];
      auto t0 = std::chrono::steady_clock::now();
      const CandidateSet cands = candidate_set(i, j, c.radial, g);
      tiles.reset(i, j, g);
      bt.candidates_s += seconds_since(t0);
      ++bt.retained_frame_pairs;

      const std::int64_t qi =
          static_cast<std::int64_t>(i) * g.tokens_per_frame;
      const std::int64_t kj =
          static_cast<std::int64_t>(j) * g.tokens_per_frame;

      t0 = std::chrono::steady_clock::now();
      bool full_band = false;
      std::vector<std::pair<std::int64_t, std::int64_t>> kept;
      if (c.mode == Mode::StaticRatio) {
        const double ratio = retention_ratio(i, j, c, g);
        if (ratio >= 1.0) {
          full_band = true;
        } else {
          // Inline partial Fisher-Yates; matches static_select exactly but
          // reuses the flat index buffer across pairs.
          const std::int64_t n = cands.pair_count();
          const std::int64_t k = std::max<std::int64_t>(
              1, static_cast<std::int64_t>(
                     std::floor(static_cast<double>(n) * ratio)));
          fy.resize(static_cast<std::size_t>(n));
          for (std::int64_t x = 0; x < n; ++x)
            fy[static_cast<std::size_t>(x)] = static_cast<std::uint32_t>(x);
          SplitMix64 rng(pair_seed(seed, i, j));
          const auto off = cands.row_offsets();
          kept.clear();
          kept.reserve(static_cast<std::size_t>(k));
          for (std::int64_t d = 0; d < k; ++d) {
            const std::int64_t r =
                d + static_cast<std::int64_t>(
                        rng.bounded(static_cast<std::uint64_t>(n - d)));
            std::swap(fy[d], fy[r]);
            const std::int64_t flat = fy[d];
            const auto it = std::upper_bound(off.begin(), off.end(), flat);
            const std::int64_t u = (it - off.begin()) - 1;
            kept.emplace_back(u, cands.v_lo(u) + (flat - off[u]));
          }
        }
      } else {
        const double tau = score_threshold(i, j, c, g);
        if (tau == -std::numeric_limits<double>::infinity()) {
          full_band = true;
        } else {
          const auto scores =
              proxy_scores(*opt.features, i, j, cands, g.tokens_per_frame);
          bt.scored_pairs += static_cast<std::int64_t>(scores.size());
          const auto norm = normalize_scores(scores);
          kept = dynamic_select(cands, norm, tau, c.fallback_k);
        }
      }
      bt.selection_s += seconds_since(t0);

      t0 = std::chrono::steady_clock::now();
      if (full_band) {
        count_full_band(cands, g, tiles);
      } else {
        for (const auto& [u, v] : kept) tiles.add(qi + u, kj + v);
      }
      tiles.apply(c.col_threshold, c.mask_threshold, lm);
      bt.aggregation_s += seconds_since(t0);
    }
  });

  for (int w = 0; w < workers; ++w) {
    if (local[w].dim != 0) mask.merge(local[w]);
    if (opt.timings) {
      opt.timings->candidates_s += local_times[w].candidates_s;
      opt.timings->selection_s += local_times[w].selection_s;
      opt.timings->aggregation_s += local_times[w].aggregation_s;
      opt.timings->retained_frame_pairs += local_times[w].retained_frame_pairs;
      opt.timings->scored_pairs += local_times[w].scored_pairs;
    }
  }
  return mask;
}

MaskFormat mask_format_for_path(const std::string& path) {
  const auto dot = path.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".bin") return MaskFormat::Binary;
  if (ext == ".csv") return MaskFormat::Csv;
  if (ext == ".pgm") return MaskFormat::Pgm;
  throw std::invalid_argument("mask path needs a .bin/.csv/.pgm extension: " +
                              path);
}

namespace {
constexpr char kMagic[4] = {'D', 'R', 'B', 'M'};
constexpr std::uint16_t kVersion = 1;
}  // namespace

void write_mask(const BlockMask& mask, MaskFormat format,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  switch (format) {
    case MaskFormat::Binary: {
      out.write(kMagic, 4);
      const std::uint16_t v = kVersion;
      const std::uint32_t d = static_cast<std::uint32_t>(mask.dim);
      std::uint8_t hdr[6] = {
          static_cast<std::uint8_t>(v & 0xff),
          static_cast<std::uint8_t>(v >> 8),
          static_cast<std::uint8_t>(d & 0xff),
          static_cast<std::uint8_t>((d >> 8) & 0xff),
          static_cast<std::uint8_t>((d >> 16) & 0xff),
          static_cast<std::uint8_t>((d >> 24) & 0xff),
      };
      out.write(reinterpret_cast<const char*>(hdr), 6);
      out.write(reinterpret_cast<const char*>(mask.bits.data()),
                static_cast<std::streamsize>(mask.bits.size()));
      break;
    }
    case MaskFormat::Csv: {
      for (std::int64_t r = 0; r < mask.dim; ++r)
        for (std::int64_t c = 0; c < mask.dim; ++c)
          if (mask.get(r, c)) out << r << ',' << c << '\n';
      break;
    }
    case MaskFormat::Pgm: {
      out << "P5\n" << mask.dim << ' ' << mask.dim << "\n255\n";
      std::vector<std::uint8_t> row(static_cast<std::size_t>(mask.dim));
      for (std::int64_t r = 0; r < mask.dim; ++r) {
        for (std::int64_t c = 0; c < mask.dim; ++c)
          row[static_cast<std::size_t>(c)] = mask.get(r, c) ? 0 : 255;
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size()));
      }
      break;
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

BlockMask read_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4] = {};
  std::uint8_t hdr[6] = {};
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(hdr), 6);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("mask file has bad magic: " + path);
  const std::uint16_t version =
      static_cast<std::uint16_t>(hdr[0] | (hdr[1] << 8));
  if (version != kVersion)
    throw std::runtime_error("unsupported mask version in " + path);
  const std::uint32_t dim = static_cast<std::uint32_t>(
      hdr[2] | (hdr[3] << 8) | (static_cast<std::uint32_t>(hdr[4]) << 16) |
      (static_cast<std::uint32_t>(hdr[5]) << 24));
  if (dim == 0 || dim > (1u << 26))
    throw std::runtime_error("mask dimension out of range in " + path);
  BlockMask mask(static_cast<std::int64_t>(dim));
  in.read(reinterpret_cast<char*>(mask.bits.data()),
          static_cast<std::streamsize>(mask.bits.size()));
  if (in.gcount() != static_cast<std::streamsize>(mask.bits.size()))
    throw std::runtime_error("mask payload truncated: " + path);
  in.peek();
  if (!in.eof())
    throw std::runtime_error("mask payload has trailing bytes: " + path);
  return mask;
}

}  // namespace radialplan
