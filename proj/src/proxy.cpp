#include "radialplan/proxy.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "radialplan/rng.hpp"

namespace radialplan {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Low: return "low";
    case Regime::Mid: return "mid";
    default: return "high";
  }
}

Regime regime_from_name(const std::string& name) {
  if (name == "low") return Regime::Low;
  if (name == "mid") return Regime::Mid;
  if (name == "high") return Regime::High;
  throw std::invalid_argument("unknown regime: " + name);
}

double regime_drift(Regime r) {
  switch (r) {
    case Regime::Low: return 0.02;
    case Regime::Mid: return 0.15;
    default: return 0.40;
  }
}

namespace {

// Truncated Gaussian smoothing weights along the token axis, one span per
// output position.  L2 normalization (not L1) keeps smoothed white noise at
// exactly unit variance, which the whole batch's statistics lean on.
struct SmoothKernel {
  int radius = 0;
  std::vector<std::vector<double>> weights;  // per output token

  SmoothKernel(std::int64_t tokens, double sigma) {
    if (sigma <= 0.0) return;
    radius = static_cast<int>(std::ceil(3.0 * sigma));
    weights.resize(static_cast<std::size_t>(tokens));
    for (std::int64_t u = 0; u < tokens; ++u) {
      const std::int64_t lo = std::max<std::int64_t>(0, u - radius);
      const std::int64_t hi = std::min<std::int64_t>(tokens - 1, u + radius);
      auto& w = weights[static_cast<std::size_t>(u)];
      w.resize(static_cast<std::size_t>(hi - lo + 1));
      double sq = 0.0;
      for (std::int64_t m = lo; m <= hi; ++m) {
        const double d = static_cast<double>(u - m);
        const double v = std::exp(-d * d / (2.0 * sigma * sigma));
        w[static_cast<std::size_t>(m - lo)] = v;
        sq += v * v;
      }
      const double inv = 1.0 / std::sqrt(sq);
      for (double& v : w) v *= inv;
    }
  }

  bool identity() const { return weights.empty(); }

  std::int64_t lo(std::int64_t u) const {
    return std::max<std::int64_t>(0, u - radius);
  }
};

}  // namespace

ProxyBatch simulate(double drift_rate, const GridSpec& g, int feature_dim,
                    double spatial_scale, std::uint64_t seed) {
  if (!(drift_rate >= 0.0 && drift_rate <= 1.0))
    throw std::invalid_argument("simulate: drift_rate must be in [0, 1]");
  if (feature_dim < 1)
    throw std::invalid_argument("simulate: feature_dim must be >= 1");

  ProxyBatch b;
  b.grid = g;
  b.feature_dim = feature_dim;
  b.spatial_scale = spatial_scale <= 0.0
                        ? static_cast<double>(g.tokens_per_frame) / 8.0
                        : spatial_scale;
  b.drift_rate = drift_rate;
  b.seed = seed;
  b.features.resize(g.total_tokens, feature_dim);

  const std::int64_t nt = g.tokens_per_frame;
  const SmoothKernel kernel(nt, b.spatial_scale);
  const float carry = static_cast<float>(
      std::sqrt(1.0 - drift_rate * drift_rate));
  const float gain = static_cast<float>(drift_rate);

  // Innovation noise is addressed by coordinate, never by stream position,
  // so any sub-range of frames reproduces identically.
  std::vector<double> raw(static_cast<std::size_t>(nt));
  Eigen::MatrixXf eps(nt, 1);
  for (int f = 0; f < g.n_frames; ++f) {
    const std::uint64_t fkey = mix64(seed, static_cast<std::uint64_t>(f));
    for (int d = 0; d < feature_dim; ++d) {
      for (std::int64_t u = 0; u < nt; ++u)
        raw[static_cast<std::size_t>(u)] = gaussian_at(
            mix64(fkey, static_cast<std::uint64_t>(u),
                  static_cast<std::uint64_t>(d)));
      for (std::int64_t u = 0; u < nt; ++u) {
        double s;
        if (kernel.identity()) {
          s = raw[static_cast<std::size_t>(u)];
        } else {
          const auto& w = kernel.weights[static_cast<std::size_t>(u)];
          const std::int64_t lo = kernel.lo(u);
          s = 0.0;
          for (std::size_t m = 0; m < w.size(); ++m)
            s += w[m] * raw[static_cast<std::size_t>(lo) + m];
        }
        const std::int64_t row = static_cast<std::int64_t>(f) * nt + u;
        if (f == 0)
          b.features(row, d) = static_cast<float>(s);
        else
          b.features(row, d) =
              carry * b.features(row - nt, d) + gain * static_cast<float>(s);
      }
    }
  }
  return b;
}

ProxyBatch simulate(Regime r, const GridSpec& g, int feature_dim,
                    double spatial_scale, std::uint64_t seed) {
  return simulate(regime_drift(r), g, feature_dim, spatial_scale, seed);
}

std::vector<double> distance_mass_profile(const ProxyBatch& batch) {
  const GridSpec& g = batch.grid;
  const Eigen::MatrixXf a = attention_matrix(batch.features);
  std::vector<double> mass(static_cast<std::size_t>(g.n_frames), 0.0);
  const std::int64_t nt = g.tokens_per_frame;
  for (std::int64_t r = 0; r < g.total_tokens; ++r) {
    const std::int64_t fr = r / nt;
    for (std::int64_t c = 0; c < g.total_tokens; ++c) {
      const std::int64_t t = std::llabs(static_cast<long long>(fr - c / nt));
      mass[static_cast<std::size_t>(t)] += static_cast<double>(a(r, c));
    }
  }
  // Per ordered frame pair, so sequence length does not tilt the profile.
  for (int t = 0; t < g.n_frames; ++t) {
    const std::int64_t pairs =
        t == 0 ? g.n_frames : 2 * static_cast<std::int64_t>(g.n_frames - t);
    mass[static_cast<std::size_t>(t)] /= static_cast<double>(pairs);
  }
  return mass;
}

DecayFit fit_decay(const std::vector<double>& profile) {
  const std::int64_t n = static_cast<std::int64_t>(profile.size());
  if (n < 3)
    throw std::invalid_argument("fit_decay: need at least distances 1 and 2");
  // Least squares of log mass against t over t >= 1.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double m = static_cast<double>(n - 1);
  for (std::int64_t t = 1; t < n; ++t) {
    const double x = static_cast<double>(t);
    const double y = std::log(profile[static_cast<std::size_t>(t)]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = m * sxx - sx * sx;
  const double slope = (m * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / m;
  DecayFit fit;
  fit.rate = -slope;
  fit.amplitude = std::exp(intercept);
  double rss = 0.0;
  for (std::int64_t t = 1; t < n; ++t) {
    const double e = std::log(profile[static_cast<std::size_t>(t)]) -
                     (intercept + slope * static_cast<double>(t));
    rss += e * e;
  }
  fit.residual = rss / m;
  return fit;
}

DecayFit fit_decay(const ProxyBatch& batch) {
  return fit_decay(distance_mass_profile(batch));
}

double envelope_amplitude(const std::vector<double>& profile, double rate) {
  if (profile.size() < 2)
    throw std::invalid_argument("envelope_amplitude: profile too short");
  double c = 0.0;
  for (std::size_t t = 1; t < profile.size(); ++t)
    c = std::max(c, profile[t] * std::exp(rate * static_cast<double>(t)));
  return c;
}

void write_batch(const ProxyBatch& batch, const std::string& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    // Row-major float32, token rows then feature columns.
    for (std::int64_t r = 0; r < batch.features.rows(); ++r)
      for (int d = 0; d < batch.feature_dim; ++d) {
        const float v = batch.features(r, d);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    if (!out) throw std::runtime_error("write failed: " + path);
  }
  nlohmann::json meta{
      {"n_frames", batch.grid.n_frames},
      {"tokens_per_frame", batch.grid.tokens_per_frame},
      {"block_size", batch.grid.block_size},
      {"feature_dim", batch.feature_dim},
      {"spatial_scale", batch.spatial_scale},
      {"drift_rate", batch.drift_rate},
      {"seed", batch.seed},
  };
  std::ofstream meta_out(path + ".json", std::ios::trunc);
  if (!meta_out) throw std::runtime_error("cannot write sidecar for " + path);
  meta_out << meta.dump(2) << '\n';
}

ProxyBatch read_batch(const std::string& path) {
  nlohmann::json meta;
  {
    std::ifstream in(path + ".json");
    if (!in) throw std::runtime_error("missing sidecar: " + path + ".json");
    in >> meta;
  }
  ProxyBatch b;
  b.grid = make_grid(meta.at("n_frames").get<int>(),
                     meta.at("tokens_per_frame").get<int>(),
                     meta.at("block_size").get<int>());
  b.feature_dim = meta.at("feature_dim").get<int>();
  b.spatial_scale = meta.at("spatial_scale").get<double>();
  b.drift_rate = meta.at("drift_rate").get<double>();
  b.seed = meta.at("seed").get<std::uint64_t>();
  if (b.feature_dim < 1)
    throw std::runtime_error("sidecar feature_dim out of range: " + path);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  b.features.resize(b.grid.total_tokens, b.feature_dim);
  for (std::int64_t r = 0; r < b.grid.total_tokens; ++r)
    for (int d = 0; d < b.feature_dim; ++d) {
      float v;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) throw std::runtime_error("feature payload truncated: " + path);
      b.features(r, d) = v;
    }
  in.peek();
  if (!in.eof())
    throw std::runtime_error("feature payload has trailing bytes: " + path);
  return b;
}

FeatureBatch scoring_features(const ProxyBatch& batch, int fused_heads) {
  if (fused_heads < 1)
    throw std::invalid_argument("scoring_features: fused_heads must be >= 1");
  if (batch.feature_dim % fused_heads != 0)
    throw std::invalid_argument(
        "scoring_features: feature_dim not divisible by fused_heads");
  FeatureBatch f;
  f.tokens = batch.features.rows();
  f.heads = fused_heads;
  f.head_dim = batch.feature_dim / fused_heads;
  for (int h = 0; h < fused_heads; ++h) {
    Eigen::MatrixXf slice =
        batch.features.middleCols(static_cast<Eigen::Index>(h) * f.head_dim,
                                  f.head_dim);
    f.queries.push_back(slice);
    f.keys.push_back(std::move(slice));
  }
  return f;
}

}  // namespace radialplan
