#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radialplan/mask.hpp"
#include "radialplan/proxy.hpp"
#include "radialplan/rng.hpp"
#include "radialplan/selection.hpp"

namespace radialplan {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

// Search bounds for the six tunables of one mode.  Defaults are the
// published ranges; validate() rejects inverted or empty intervals.
struct SearchSpace {
  Interval gamma{1.0, 3.0};
  Interval lambda{0.1, 1.0};
  Interval theta_c{0.1, 1.0};
  Interval theta_m{0.1, 1.0};
  Interval rho_near{0.3, 1.0};   // static mode
  Interval rho_far{0.1, 0.8};
  Interval tau_near{-10.0, 5.0};  // dynamic mode
  Interval tau_far{-5.0, 8.0};

  void validate() const;
  // The six active intervals for a mode, in canonical parameter order:
  // gamma, lambda, theta_c, theta_m, near, far.
  std::vector<Interval> active(Mode mode) const;
};

std::vector<double> config_params(const SparsityConfig& c);
SparsityConfig config_from_params(Mode mode, const std::vector<double>& x);

struct TrialRecord {
  int trial_index = 0;
  SparsityConfig config;
  double loss = 0.0;
  double mse = 0.0;
  double achieved_sparsity = 0.0;
};

// Dense attention of the batch, cached across trials: softmax numerators
// and row sums so each trial only re-weights by its mask.
struct DenseProxyCache {
  Eigen::MatrixXf weights;         // exp(logits - row max)
  std::vector<double> row_sums;
  double reference_sq_norm = 0.0;  // |A_dense|_F^2
};

DenseProxyCache build_proxy_cache(const ProxyBatch& batch);

// Masked-vs-dense reconstruction error plus a hinge on missed sparsity:
// loss = mse + penalty_weight * max(0, target - achieved).  The mask seed
// is derived from the batch seed, so the objective is a pure function of
// its arguments.  Error is measured over real tokens only; sparsity over
// the full padded block grid.
TrialRecord objective(const SparsityConfig& c, const ProxyBatch& batch,
                      double penalty_weight, double sparsity_target,
                      const DenseProxyCache* cache = nullptr);

// One suggestion from a tree-structured Parzen estimator over the mode's
// six parameters.  Pinned procedure: below n_startup history entries the
// suggestion is uniform; otherwise history is split at the loss quantile q
// into good/bad, each parameter gets a truncated-Gaussian mixture density
// per side (bandwidth max(range/10, nearest-neighbor gap)), n_candidates
// draws from the good mixture are scored by sum of log density ratios, and
// the best candidate wins.  Loss ties order by earlier trial index.
struct TpeParams {
  int n_startup = 10;
  int n_candidates = 24;
  double quantile = 0.25;
};

SparsityConfig random_config(Mode mode, const SearchSpace& space,
                             SplitMix64& rng);
SparsityConfig tpe_suggest(const std::vector<TrialRecord>& history, Mode mode,
                           const SearchSpace& space, SplitMix64& rng,
                           const TpeParams& tpe = {});

struct ProfileSettings {
  int feature_dim = 64;
  double spatial_scale = -1.0;  // <= 0: tokens_per_frame / 8
  double penalty_weight = 10.0;
  double sparsity_target = 0.80;
  bool resample_batch = false;  // fresh batch per trial instead of frozen
  bool random_search = false;   // baseline sampler instead of the TPE
  TpeParams tpe;
};

struct ProfileResult {
  Regime regime = Regime::Mid;
  Mode mode = Mode::StaticRatio;
  TrialRecord best;
  std::vector<TrialRecord> history;
};

// Full search for one regime and mode on a frozen simulated batch.
ProfileResult profile_regime(Regime regime, Mode mode, int trials,
                             const GridSpec& g, std::uint64_t seed,
                             const SearchSpace& space = {},
                             const ProfileSettings& settings = {});

// Routing table: best configuration per regime with its provenance.
struct RegimeLUT {
  struct Entry {
    SparsityConfig config;
    double achieved_sparsity = 0.0;
    double loss = 0.0;
  };
  std::map<Regime, Entry> entries;

  GridSpec grid;
  std::uint64_t seed = 0;
  int trials = 0;
  bool low_confidence = false;  // set when trials < 10
  std::string created_at;
};

// Throws std::invalid_argument on a duplicate regime.
RegimeLUT build_lut(
    const std::vector<std::pair<Regime, RegimeLUT::Entry>>& entries,
    const GridSpec& g, std::uint64_t seed, int trials);

struct LutLookupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Throws LutLookupError when the regime has no entry.
const RegimeLUT::Entry& lookup(const RegimeLUT& lut, Regime r);

std::string lut_to_json(const RegimeLUT& lut, int indent = 2);
RegimeLUT lut_from_json(const std::string& text);
void write_lut(const RegimeLUT& lut, const std::string& path);
RegimeLUT read_lut(const std::string& path);

// FNV-1a over the canonical compact serialization with created_at removed.
// Equal hashes mean the searches found identical tables.
std::uint64_t canonical_hash(const RegimeLUT& lut);

void write_history_csv(const std::vector<TrialRecord>& history,
                       const std::string& path);

}  // namespace radialplan
