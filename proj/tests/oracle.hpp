#pragma once

// Reference reimplementation used by the tests.  Everything here is written
// from the definitions, on purpose in a different style from the library:
// dense pair lists instead of lazy bands, a token-level boolean grid
// instead of tile count buffers, scan loops instead of closed forms.  Tests
// hold the two sides to bit-identical results.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "radialplan/attention.hpp"
#include "radialplan/selection.hpp"

namespace oracle {

struct Grid {
  int nf = 0;
  int nt = 0;
  int bs = 0;
  long long tokens = 0;
  long long padded = 0;
  long long blocks = 0;
};

Grid grid(int nf, int nt, int bs);

int bit_length(long long t);
long long pow2_at_least(long long x);
double decay_len(long long t, double factor, long long base);
long long window(long long t, double gamma, const Grid& g);
long long split(long long t, double lambda, const Grid& g, double eps);
bool retained(long long t, double lambda, const Grid& g, double eps);

// All band pairs in row-major order.
std::vector<std::pair<int, int>> band_pairs(const Grid& g, long long width);

std::uint64_t mix(std::uint64_t z);
std::uint64_t stream_next(std::uint64_t& state);

std::vector<std::pair<int, int>> pick_static(
    const std::vector<std::pair<int, int>>& pairs, double ratio,
    std::uint64_t stream_seed);

std::vector<float> score_pairs(const radialplan::FeatureBatch& f, int fi,
                               int fj, int nt,
                               const std::vector<std::pair<int, int>>& pairs);

std::vector<double> standardize(const std::vector<float>& s);

std::vector<std::pair<int, int>> pick_dynamic(
    const std::vector<std::pair<int, int>>& pairs,
    const std::vector<double>& z, double tau, int fallback_k);

struct DenseMask {
  long long blocks = 0;
  std::vector<std::uint8_t> a;  // row-major bytes, one per block

  bool get(long long r, long long c) const {
    return a[static_cast<std::size_t>(r * blocks + c)] != 0;
  }
  void set(long long r, long long c) {
    a[static_cast<std::size_t>(r * blocks + c)] = 1;
  }
};

DenseMask build(const Grid& g, const radialplan::SparsityConfig& cfg,
                const radialplan::FeatureBatch* features, std::uint64_t seed,
                bool no_split);

// Binary mask file parser, written against the format description alone.
DenseMask read_mask_file(const std::string& path);

bool same_mask(const DenseMask& ours, const radialplan::BlockMask& theirs);

}  // namespace oracle
