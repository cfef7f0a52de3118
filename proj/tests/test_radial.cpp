#include <doctest.h>

#include <set>

#include "oracle.hpp"
#include "radialplan/radial.hpp"

using namespace radialplan;

TEST_CASE("octave index counts bits") {
  CHECK(group_index(1) == 1);
  CHECK(group_index(3) == 2);
  CHECK(group_index(8) == 4);
  CHECK_THROWS_AS(group_index(0), std::invalid_argument);
  for (std::int64_t t = 1; t < 300; ++t)
    CHECK(group_index(t) == oracle::bit_length(t));
}

TEST_CASE("base span rounds the frame width up to a power of two") {
  CHECK(base_span(8) == 8);
  CHECK(base_span(10) == 16);
  CHECK(base_span(1) == 1);
  CHECK(base_span(3667) == 4096);
}

TEST_CASE("decay length halves per octave") {
  CHECK(decay_length(2, 2.0, 8) == doctest::Approx(4.0));
  CHECK(decay_length(1, 1.0, 8) == doctest::Approx(4.0));
  CHECK(decay_length(4, 1.0, 8) == doctest::Approx(1.0));
  // Constant within an octave, halving between octaves.
  for (std::int64_t t : {4, 5, 6, 7})
    CHECK(decay_length(t, 1.5, 64) == decay_length(4, 1.5, 64));
  CHECK(decay_length(8, 1.5, 64) ==
        doctest::Approx(0.5 * decay_length(4, 1.5, 64)));
}

TEST_CASE("window width: dense near band, block floor far out") {
  const GridSpec g = make_grid(8, 8, 4);
  RadialParams p;
  p.decay_factor = 2.0;
  CHECK(window_width(3, 3, p, g) == 8);
  CHECK(window_width(3, 4, p, g) == 8);
  CHECK(window_width(0, 2, p, g) == 4);
  p.decay_factor = 1.0;
  CHECK(window_width(0, 4, p, g) == 4);  // floored at block size

  // Monotone: wider decay factor never shrinks a window.
  const GridSpec g2 = make_grid(16, 64, 8);
  for (int t = 2; t < 16; ++t) {
    RadialParams a, b;
    a.decay_factor = 1.0;
    b.decay_factor = 2.5;
    CHECK(window_width(0, t, a, g2) <= window_width(0, t, b, g2));
  }
  // Dense at t <= 1, floored at one block beyond.
  for (int t = 0; t < 16; ++t) {
    RadialParams q;
    q.decay_factor = 1.7;
    const std::int64_t w = window_width(0, t, q, g2);
    if (t <= 1)
      CHECK(w == g2.tokens_per_frame);
    else
      CHECK(w >= g2.block_size);
  }
}

TEST_CASE("distance thinning keeps multiples of the split factor") {
  const GridSpec g = make_grid(16, 8, 4);
  RadialParams p;
  p.long_range_factor = 1.0;
  CHECK(split_factor(2, p, g) == 2);
  CHECK(frame_retained(2, p, g));
  CHECK_FALSE(frame_retained(3, p, g));
  p.long_range_factor = 0.3;
  CHECK(split_factor(2, p, g) == 6);

  // Adjacent distances always survive.
  CHECK(frame_retained(0, p, g));
  CHECK(frame_retained(1, p, g));

  // A long enough split length keeps everything.
  RadialParams wide;
  wide.long_range_factor = 1.0;
  const GridSpec g64 = make_grid(16, 64, 8);
  for (int t = 1; t < 16; ++t) CHECK(frame_retained(t, wide, g64));
}

TEST_CASE("candidate band size matches the dense scan") {
  const GridSpec g = make_grid(8, 8, 4);
  RadialParams p;
  p.decay_factor = 2.0;
  const CandidateSet c = candidate_set(0, 2, p, g);
  CHECK(c.width == 4);
  CHECK(c.pair_count() == 52);

  // Full width covers the whole frame square.
  const CandidateSet adj = candidate_set(3, 4, p, g);
  CHECK(adj.pair_count() == 64);

  // Pruned pair contributes nothing.
  RadialParams thin;
  thin.long_range_factor = 0.3;
  const CandidateSet pruned = candidate_set(0, 2, thin, g);
  CHECK_FALSE(pruned.retained);
  CHECK(pruned.pair_count() == 0);

  for (int nt : {3, 5, 8, 13}) {
    const GridSpec gg = make_grid(4, nt, 4);
    for (std::int64_t w = 0; w <= nt + 1; ++w) {
      CandidateSet cs;
      cs.tokens_per_frame = nt;
      cs.width = w;
      cs.retained = true;
      CHECK(cs.pair_count() ==
            static_cast<std::int64_t>(oracle::band_pairs(
                oracle::grid(4, nt, 4), w).size()));
    }
  }
}

TEST_CASE("candidate enumeration is row-major and self-consistent") {
  CandidateSet c;
  c.tokens_per_frame = 7;
  c.width = 2;
  c.retained = true;
  std::vector<std::pair<std::int64_t, std::int64_t>> seen;
  c.visit([&](std::int64_t u, std::int64_t v) { seen.emplace_back(u, v); });
  CHECK(static_cast<std::int64_t>(seen.size()) == c.pair_count());
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i - 1] < seen[i]);
  for (std::int64_t i = 0; i < c.pair_count(); ++i)
    CHECK(c.pair_at(i) == seen[static_cast<std::size_t>(i)]);
  const auto off = c.row_offsets();
  CHECK(off.back() == c.pair_count());
  for (const auto& [u, v] : seen) CHECK(c.contains(u, v));
  CHECK_FALSE(c.contains(0, 3));
  CHECK_THROWS_AS(c.pair_at(c.pair_count()), std::out_of_range);
}

TEST_CASE("census grows slowly with distance coverage") {
  const GridSpec g = make_grid(16, 64, 8);
  RadialParams p;
  p.decay_factor = 1.5;
  const double with_split = mean_candidates_per_query(g, p, false);
  const double without = mean_candidates_per_query(g, p, true);
  CHECK(with_split <= without);
  CHECK(with_split > 0.0);

  // Against a direct per-pair sum.
  long double expect = 0.0L;
  for (int i = 0; i < g.n_frames; ++i)
    for (int j = 0; j < g.n_frames; ++j)
      expect += static_cast<long double>(
          candidate_set(i, j, p, g).pair_count());
  CHECK(with_split ==
        doctest::Approx(static_cast<double>(expect / g.total_tokens)));
}
