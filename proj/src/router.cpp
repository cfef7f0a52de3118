#include "radialplan/router.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

namespace radialplan {

void RegimeBins::validate() const {
  if (!(0.0 < low_upper && low_upper < mid_upper && mid_upper <= 1.0))
    throw std::invalid_argument(
        "bins: need 0 < low_upper < mid_upper <= 1");
}

Regime discretize(double score, const RegimeBins& bins) {
  bins.validate();
  if (!std::isfinite(score))
    throw std::invalid_argument("discretize: score must be finite");
  const double s = std::clamp(score, 0.0, 1.0);
  if (s < bins.low_upper) return Regime::Low;
  if (s < bins.mid_upper) return Regime::Mid;
  return Regime::High;
}

RouteResult route(std::optional<double> score, const RegimeLUT& lut,
                  const RegimeBins& bins) {
  RouteResult res;
  if (score.has_value()) {
    res.regime = discretize(*score, bins);
    const auto it = lut.entries.find(res.regime);
    if (it == lut.entries.end())
      throw RoutingError(RouteFailure::MissingRegime,
                         std::string("no table entry for scored regime: ") +
                             regime_name(res.regime));
    res.entry = it->second;
    return res;
  }
  // No usable score.  The safe default is the Mid static entry; handing an
  // unscored clip a threshold mode would couple its mask to uncalibrated
  // score statistics.
  res.regime = Regime::Mid;
  res.conservative_default = true;
  const auto it = lut.entries.find(Regime::Mid);
  if (it == lut.entries.end())
    throw RoutingError(RouteFailure::FallbackUnavailable,
                       "no mid entry to fall back to");
  if (it->second.config.mode != Mode::StaticRatio)
    throw RoutingError(RouteFailure::FallbackUnavailable,
                       "mid entry is not static; refusing default route");
  res.entry = it->second;
  return res;
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("lexicon parse error: ") + e.what());
  }
  Lexicon lex;
  for (const auto& [phrase, weight] : j.at("terms").items()) {
    Lexicon::Term t;
    t.phrase = phrase;
    std::transform(t.phrase.begin(), t.phrase.end(), t.phrase.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    t.weight = weight.get<double>();
    if (t.phrase.empty())
      throw std::runtime_error("lexicon has an empty phrase: " + path);
    lex.terms.push_back(std::move(t));
  }
  return lex;
}

double heuristic_score(const std::string& prompt, const Lexicon& lexicon) {
  std::string low = prompt;
  std::transform(low.begin(), low.end(), low.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  double score = 0.5;
  for (const auto& term : lexicon.terms)
    if (low.find(term.phrase) != std::string::npos) score += term.weight;
  return std::clamp(score, 0.0, 1.0);
}

}  // namespace radialplan
