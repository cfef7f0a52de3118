#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracle {

Grid grid(int nf, int nt, int bs) {
  Grid g;
  g.nf = nf;
  g.nt = nt;
  g.bs = bs;
  g.tokens = static_cast<long long>(nf) * nt;
  g.padded = ((g.tokens + bs - 1) / bs) * bs;
  g.blocks = g.padded / bs;
  return g;
}

int bit_length(long long t) {
  int bits = 0;
  while (t > 0) {
    ++bits;
    t >>= 1;
  }
  return bits;
}

long long pow2_at_least(long long x) {
  long long p = 1;
  while (p < x) p *= 2;
  return p;
}

double decay_len(long long t, double factor, long long base) {
  long long denom = 1;
  for (int i = 0; i < bit_length(t); ++i) denom *= 2;
  return factor * static_cast<double>(base) / static_cast<double>(denom);
}

long long window(long long t, double gamma, const Grid& g) {
  if (t <= 1) return g.nt;
  const double len = decay_len(t, gamma, pow2_at_least(g.nt));
  long long r = std::llround(len);
  if (r < g.bs) r = g.bs;
  return r;
}

long long split(long long t, double lambda, const Grid& g, double eps) {
  const double len = decay_len(t, lambda, pow2_at_least(g.nt));
  const long long f =
      static_cast<long long>(static_cast<double>(g.bs) / (len + eps));
  return f < 1 ? 1 : f;
}

bool retained(long long t, double lambda, const Grid& g, double eps) {
  if (t <= 1) return true;
  return t % split(t, lambda, g, eps) == 0;
}

std::vector<std::pair<int, int>> band_pairs(const Grid& g, long long width) {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < g.nt; ++u)
    for (int v = 0; v < g.nt; ++v)
      if (std::abs(u - v) <= width) out.emplace_back(u, v);
  return out;
}

std::uint64_t mix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t stream_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<std::pair<int, int>> pick_static(
    const std::vector<std::pair<int, int>>& pairs, double ratio,
    std::uint64_t stream_seed) {
  const long long n = static_cast<long long>(pairs.size());
  long long k = static_cast<long long>(
      std::floor(static_cast<double>(n) * ratio));
  if (k < 1) k = 1;
  std::vector<std::pair<int, int>> deck = pairs;
  std::uint64_t state = stream_seed;
  for (long long d = 0; d < k; ++d) {
    const long long r =
        d + static_cast<long long>(stream_next(state) %
                                   static_cast<std::uint64_t>(n - d));
    std::swap(deck[static_cast<std::size_t>(d)],
              deck[static_cast<std::size_t>(r)]);
  }
  deck.resize(static_cast<std::size_t>(k));
  return deck;
}

std::vector<float> score_pairs(const radialplan::FeatureBatch& f, int fi,
                               int fj, int nt,
                               const std::vector<std::pair<int, int>>& pairs) {
  std::vector<float> out;
  out.reserve(pairs.size());
  const double root = std::sqrt(static_cast<double>(f.head_dim));
  for (const auto& [u, v] : pairs) {
    double total = 0.0;
    for (int h = 0; h < f.heads; ++h) {
      double dot = 0.0;
      for (int d = 0; d < f.head_dim; ++d)
        dot += static_cast<double>(
                   f.queries[static_cast<std::size_t>(h)](fi * nt + u, d)) *
               static_cast<double>(
                   f.keys[static_cast<std::size_t>(h)](fj * nt + v, d));
      total += dot * (1.0 / root);
    }
    out.push_back(static_cast<float>(total / f.heads));
  }
  return out;
}

std::vector<double> standardize(const std::vector<float>& s) {
  const std::size_t n = s.size();
  double m = 0.0;
  for (float x : s) m += static_cast<double>(x);
  m /= static_cast<double>(n);
  double var = 0.0;
  for (float x : s) {
    const double d = static_cast<double>(x) - m;
    var += d * d;
  }
  const double sd = std::sqrt(var / static_cast<double>(n));
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i)
    z[i] = (static_cast<double>(s[i]) - m) / (sd + 1e-8);
  return z;
}

std::vector<std::pair<int, int>> pick_dynamic(
    const std::vector<std::pair<int, int>>& pairs,
    const std::vector<double>& z, double tau, int fallback_k) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (z[i] >= tau) out.push_back(pairs[i]);
  if (!out.empty()) return out;

  std::vector<std::size_t> idx(pairs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return z[a] > z[b]; });
  std::size_t k = static_cast<std::size_t>(fallback_k);
  if (k > pairs.size()) k = pairs.size();
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i : idx) out.push_back(pairs[i]);
  return out;
}

DenseMask build(const Grid& g, const radialplan::SparsityConfig& cfg,
                const radialplan::FeatureBatch* features, std::uint64_t seed,
                bool no_split) {
  DenseMask mask;
  mask.blocks = g.blocks;
  mask.a.assign(static_cast<std::size_t>(g.blocks * g.blocks), 0);

  const long long base = pow2_at_least(g.nt);
  const bool is_static = cfg.mode == radialplan::Mode::StaticRatio;

  // Scratch per-tile column counts over the whole block grid.
  std::vector<int> counts;

  for (int i = 0; i < g.nf; ++i) {
    for (int j = 0; j < g.nf; ++j) {
      const long long t = std::abs(i - j);

      if (t == 0) {
        const long long lo = static_cast<long long>(i) * g.nt;
        const long long hi = lo + g.nt - 1;
        for (long long r = lo / g.bs; r <= hi / g.bs; ++r)
          for (long long c = lo / g.bs; c <= hi / g.bs; ++c) mask.set(r, c);
        continue;
      }
      if (!no_split &&
          !retained(t, cfg.radial.long_range_factor, g,
                    cfg.radial.split_epsilon))
        continue;

      const long long w = window(t, cfg.radial.decay_factor, g);
      const auto pairs = band_pairs(g, w);

      // Tier of the pair: dense band at t <= 1, then by decay length.
      int tier;
      if (t <= 1)
        tier = 0;
      else if (decay_len(t, cfg.radial.decay_factor, base) >=
               static_cast<double>(g.bs))
        tier = 1;
      else
        tier = 2;

      std::vector<std::pair<int, int>> kept;
      if (is_static) {
        const double ratio =
            tier == 0 ? 1.0 : (tier == 1 ? cfg.near_param : cfg.far_param);
        if (ratio >= 1.0) {
          kept = pairs;
        } else {
          const std::uint64_t s = mix(
              mix(mix(seed) ^ static_cast<std::uint64_t>(i)) ^
              static_cast<std::uint64_t>(j));
          kept = pick_static(pairs, ratio, s);
        }
      } else {
        if (tier == 0) {
          kept = pairs;
        } else {
          const double tau = tier == 1 ? cfg.near_param : cfg.far_param;
          const auto sc = score_pairs(*features, i, j, g.nt, pairs);
          kept = pick_dynamic(pairs, standardize(sc), tau, cfg.fallback_k);
        }
      }

      // Aggregate this frame pair on its own, then or into the mask.
      counts.assign(static_cast<std::size_t>(g.blocks * g.blocks * g.bs), 0);
      for (const auto& [u, v] : kept) {
        const long long gr = static_cast<long long>(i) * g.nt + u;
        const long long gc = static_cast<long long>(j) * g.nt + v;
        ++counts[static_cast<std::size_t>(
            ((gr / g.bs) * g.blocks + gc / g.bs) * g.bs + gc % g.bs)];
      }
      for (long long r = 0; r < g.blocks; ++r)
        for (long long c = 0; c < g.blocks; ++c) {
          int active_cols = 0;
          for (int cc = 0; cc < g.bs; ++cc) {
            const int cnt = counts[static_cast<std::size_t>(
                (r * g.blocks + c) * g.bs + cc)];
            if (static_cast<double>(cnt) / g.bs >= cfg.col_threshold)
              ++active_cols;
          }
          if (static_cast<double>(active_cols) / g.bs >= cfg.mask_threshold)
            mask.set(r, c);
        }
    }
  }
  return mask;
}

DenseMask read_mask_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("oracle: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 10 || bytes[0] != 'D' || bytes[1] != 'R' ||
      bytes[2] != 'B' || bytes[3] != 'M')
    throw std::runtime_error("oracle: bad header in " + path);
  const unsigned version = bytes[4] | (bytes[5] << 8u);
  if (version != 1) throw std::runtime_error("oracle: bad version");
  const unsigned long long dim = static_cast<unsigned long long>(bytes[6]) |
                                 (static_cast<unsigned long long>(bytes[7])
                                  << 8u) |
                                 (static_cast<unsigned long long>(bytes[8])
                                  << 16u) |
                                 (static_cast<unsigned long long>(bytes[9])
                                  << 24u);
  const unsigned long long row_bytes = (dim + 7) / 8;
  if (bytes.size() != 10 + dim * row_bytes)
    throw std::runtime_error("oracle: payload size mismatch");
  DenseMask m;
  m.blocks = static_cast<long long>(dim);
  m.a.assign(static_cast<std::size_t>(dim * dim), 0);
  for (unsigned long long r = 0; r < dim; ++r)
    for (unsigned long long c = 0; c < dim; ++c) {
      const unsigned char byte = bytes[10 + r * row_bytes + c / 8];
      if ((byte >> (c % 8)) & 1u)
        m.set(static_cast<long long>(r), static_cast<long long>(c));
    }
  return m;
}

bool same_mask(const DenseMask& ours, const radialplan::BlockMask& theirs) {
  if (ours.blocks != theirs.dim) return false;
  for (long long r = 0; r < ours.blocks; ++r)
    for (long long c = 0; c < ours.blocks; ++c)
      if (ours.get(r, c) != theirs.get(r, c)) return false;
  return true;
}

}  // namespace oracle
