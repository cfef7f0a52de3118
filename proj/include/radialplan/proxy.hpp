#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "radialplan/attention.hpp"
#include "radialplan/grid.hpp"

namespace radialplan {

enum class Regime { Low, Mid, High };

const char* regime_name(Regime r);
Regime regime_from_name(const std::string& name);

// Per-frame feature drift rate of each regime.
double regime_drift(Regime r);

// Synthetic token features with controlled temporal decay: a first-order
// autoregression across frames whose innovations are smoothed along the
// token axis.  Because the smoothing weights are L2-normalized and the AR
// update is sqrt(1 - delta^2) h + delta eps, every entry stays exactly unit
// variance and the lag-t correlation is exactly (1 - delta^2)^(t/2).
struct ProxyBatch {
  GridSpec grid;
  int feature_dim = 0;
  double spatial_scale = 0.0;
  double drift_rate = 0.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXf features;  // total_tokens x feature_dim
};

// spatial_scale <= 0 selects the default tokens_per_frame / 8.
ProxyBatch simulate(double drift_rate, const GridSpec& g, int feature_dim,
                    double spatial_scale, std::uint64_t seed);
ProxyBatch simulate(Regime r, const GridSpec& g, int feature_dim,
                    double spatial_scale, std::uint64_t seed);

// Mean attention mass per ordered frame pair at each temporal distance
// t = 0 .. n_frames-1, computed from the dense row-stochastic attention
// matrix of the batch.  Normalizing by the number of frame pairs at each
// distance removes the sequence-length falloff, so a drift-free batch
// yields a flat profile.
std::vector<double> distance_mass_profile(const ProxyBatch& batch);

struct DecayFit {
  double amplitude = 0.0;  // C in C * exp(-rate * t)
  double rate = 0.0;       // per-frame decay of attention mass
  double residual = 0.0;   // mean squared log residual
};

// Least squares on log mass over t = 1 .. n_frames-1.
DecayFit fit_decay(const std::vector<double>& profile);
DecayFit fit_decay(const ProxyBatch& batch);

// Smallest C such that profile[t] <= C * exp(-rate * t) for all t >= 1.
double envelope_amplitude(const std::vector<double>& profile, double rate);

// Flat float32 row-major features plus a JSON sidecar (same path with
// ".json" appended) carrying grid and simulation parameters.
void write_batch(const ProxyBatch& batch, const std::string& path);
ProxyBatch read_batch(const std::string& path);

// View the batch as self-attention projections (queries = keys = features)
// for candidate scoring.  fused_heads > 1 splits the feature dim into that
// many equal head slices; feature_dim must divide evenly.
FeatureBatch scoring_features(const ProxyBatch& batch, int fused_heads = 1);

}  // namespace radialplan
