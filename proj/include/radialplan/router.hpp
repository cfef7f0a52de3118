#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "radialplan/profiler.hpp"

namespace radialplan {

// Half-open score bins: [0, low_upper) -> Low, [low_upper, mid_upper) ->
// Mid, [mid_upper, 1] -> High.
struct RegimeBins {
  double low_upper = 0.3;
  double mid_upper = 0.7;

  void validate() const;
};

// Scores are clamped to [0, 1] before binning.
Regime discretize(double score, const RegimeBins& bins = {});

enum class RouteFailure { MissingRegime, FallbackUnavailable };

struct RoutingError : std::runtime_error {
  RouteFailure failure;
  RoutingError(RouteFailure f, const std::string& what)
      : std::runtime_error(what), failure(f) {}
};

struct RouteResult {
  Regime regime = Regime::Mid;
  bool conservative_default = false;  // no usable score, fell back to Mid
  RegimeLUT::Entry entry;
};

// Pick a configuration for a clip.  With a score: bin it and look up the
// regime (MissingRegime if absent).  Without one: fall back to the Mid
// entry, but only if that entry is static; a guessed clip must never get a
// threshold mode, so a dynamic or absent Mid entry raises
// FallbackUnavailable.
RouteResult route(std::optional<double> score, const RegimeLUT& lut,
                  const RegimeBins& bins = {});

// Keyword lexicon for prompt-only scoring.  Weights are signed: positive
// terms push toward High, negative toward Low.
struct Lexicon {
  struct Term {
    std::string phrase;  // stored lowercase
    double weight = 0.0;
  };
  std::vector<Term> terms;
};

Lexicon load_lexicon(const std::string& path);

// 0.5 plus the summed weights of every term whose phrase occurs in the
// lowercased prompt, clamped to [0, 1].  An empty prompt scores 0.5.
double heuristic_score(const std::string& prompt, const Lexicon& lexicon);

}  // namespace radialplan
