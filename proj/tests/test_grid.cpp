#include <doctest.h>

#include "radialplan/grid.hpp"

using namespace radialplan;

TEST_CASE("grid sizes for a small video") {
  const GridSpec g = make_grid(4, 8, 4);
  CHECK(g.total_tokens == 32);
  CHECK(g.padded_tokens == 32);
  CHECK(g.blocks_per_dim == 8);
}

TEST_CASE("grid pads a lone token up to one block") {
  const GridSpec g = make_grid(1, 1, 2);
  CHECK(g.total_tokens == 1);
  CHECK(g.padded_tokens == 2);
  CHECK(g.blocks_per_dim == 1);
}

TEST_CASE("grid sizes at production scale") {
  const GridSpec g = make_grid(72, 3667, 32);
  CHECK(g.total_tokens == 264024);
  CHECK(g.padded_tokens == 264032);
  CHECK(g.blocks_per_dim == 8251);
}

TEST_CASE("block size must be a power of two at least 2") {
  CHECK_THROWS_AS(make_grid(2, 4, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(2, 4, 12), std::invalid_argument);
  CHECK_NOTHROW(make_grid(2, 4, 2));
  CHECK_NOTHROW(make_grid(2, 4, 64));
}

TEST_CASE("degenerate grid arguments are rejected") {
  CHECK_THROWS_AS(make_grid(0, 4, 4), std::invalid_argument);
  CHECK_THROWS_AS(make_grid(4, 0, 4), std::invalid_argument);
}

TEST_CASE("block and frame ownership of tokens") {
  const GridSpec g = make_grid(4, 8, 4);
  CHECK(block_of(0, g) == 0);
  CHECK(block_of(7, g) == 1);
  CHECK(block_of(31, g) == 7);
  CHECK_THROWS_AS(block_of(32, g), std::out_of_range);
  CHECK(frame_of(0, g) == 0);
  CHECK(frame_of(15, g) == 1);

  // Padding tokens belong to the last frame.
  const GridSpec p = make_grid(3, 5, 4);
  CHECK(p.total_tokens == 15);
  CHECK(p.padded_tokens == 16);
  CHECK(frame_of(15, p) == 2);
}

TEST_CASE("padding never exceeds one block") {
  for (int nf : {1, 3, 7})
    for (int nt : {1, 5, 9, 64})
      for (int bs : {2, 4, 16}) {
        const GridSpec g = make_grid(nf, nt, bs);
        CHECK(g.padded_tokens >= g.total_tokens);
        CHECK(g.padded_tokens - g.total_tokens < bs);
        CHECK(g.padded_tokens % bs == 0);
        CHECK(g.blocks_per_dim * bs == g.padded_tokens);
      }
}
