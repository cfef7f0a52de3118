#include "radialplan/profiler.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace radialplan {

void SearchSpace::validate() const {
  for (const Interval& iv :
       {gamma, lambda, theta_c, theta_m, rho_near, rho_far, tau_near,
        tau_far})
    if (!(iv.lo < iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw std::invalid_argument("search space: bad interval");
}

std::vector<Interval> SearchSpace::active(Mode mode) const {
  if (mode == Mode::StaticRatio)
    return {gamma, lambda, theta_c, theta_m, rho_near, rho_far};
  return {gamma, lambda, theta_c, theta_m, tau_near, tau_far};
}

std::vector<double> config_params(const SparsityConfig& c) {
  return {c.radial.decay_factor, c.radial.long_range_factor, c.col_threshold,
          c.mask_threshold, c.near_param, c.far_param};
}

SparsityConfig config_from_params(Mode mode, const std::vector<double>& x) {
  if (x.size() != 6)
    throw std::invalid_argument("config_from_params: expected 6 parameters");
  SparsityConfig c;
  c.mode = mode;
  c.radial.decay_factor = x[0];
  c.radial.long_range_factor = x[1];
  c.col_threshold = x[2];
  c.mask_threshold = x[3];
  c.near_param = x[4];
  c.far_param = x[5];
  return c;
}

DenseProxyCache build_proxy_cache(const ProxyBatch& batch) {
  DenseProxyCache cache;
  const std::int64_t n = batch.features.rows();
  const float scale =
      1.0f / std::sqrt(static_cast<float>(batch.features.cols()));
  cache.weights = scale * (batch.features * batch.features.transpose());
  cache.row_sums.assign(static_cast<std::size_t>(n), 0.0);
  for (std::int64_t r = 0; r < n; ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::int64_t c = 0; c < n; ++c)
      m = std::max(m, static_cast<double>(cache.weights(r, c)));
    double sum = 0.0;
    for (std::int64_t c = 0; c < n; ++c) {
      const double e = std::exp(static_cast<double>(cache.weights(r, c)) - m);
      cache.weights(r, c) = static_cast<float>(e);
      sum += e;
    }
    cache.row_sums[static_cast<std::size_t>(r)] = sum;
  }
  double sq = 0.0;
  for (std::int64_t r = 0; r < n; ++r) {
    const double rs = cache.row_sums[static_cast<std::size_t>(r)];
    for (std::int64_t c = 0; c < n; ++c) {
      const double a = static_cast<double>(cache.weights(r, c)) / rs;
      sq += a * a;
    }
  }
  cache.reference_sq_norm = sq;
  return cache;
}

TrialRecord objective(const SparsityConfig& c, const ProxyBatch& batch,
                      double penalty_weight, double sparsity_target,
                      const DenseProxyCache* cache) {
  c.validate();
  const GridSpec& g = batch.grid;

  DenseProxyCache local;
  if (!cache) {
    local = build_proxy_cache(batch);
    cache = &local;
  }

  // The mask seed is derived, not passed: identical configs on an identical
  // batch must produce identical records.
  const std::uint64_t mask_seed = mix64(batch.seed, 0x6d61736bull);
  BuildOptions opt;
  FeatureBatch scoring;
  if (c.mode == Mode::DynamicThreshold) {
    scoring = scoring_features(batch);
    opt.features = &scoring;
  }
  const BlockMask mask = build_mask(g, c, mask_seed, opt);

  // Reconstruction error over real tokens; a fully masked row falls back to
  // a point mass on the diagonal, mirroring the evaluator.
  const std::int64_t n = batch.features.rows();
  const std::int64_t bs = g.block_size;
  double num = 0.0;
  for (std::int64_t r = 0; r < n; ++r) {
    const std::int64_t br = r / bs;
    const double rs_dense = cache->row_sums[static_cast<std::size_t>(r)];
    double rs_mask = 0.0;
    for (std::int64_t cb = 0; cb * bs < n; ++cb) {
      if (!mask.get(br, cb)) continue;
      const std::int64_t hi = std::min(n, (cb + 1) * bs);
      for (std::int64_t col = cb * bs; col < hi; ++col)
        rs_mask += static_cast<double>(cache->weights(r, col));
    }
    if (rs_mask == 0.0) {
      for (std::int64_t col = 0; col < n; ++col) {
        const double dense =
            static_cast<double>(cache->weights(r, col)) / rs_dense;
        const double sparse = col == r ? 1.0 : 0.0;
        const double d = dense - sparse;
        num += d * d;
      }
      continue;
    }
    for (std::int64_t cb = 0; cb * bs < n; ++cb) {
      const bool active = mask.get(br, cb);
      const std::int64_t hi = std::min(n, (cb + 1) * bs);
      for (std::int64_t col = cb * bs; col < hi; ++col) {
        const double w = static_cast<double>(cache->weights(r, col));
        const double dense = w / rs_dense;
        const double d = active ? dense - w / rs_mask : dense;
        num += d * d;
      }
    }
  }

  TrialRecord rec;
  rec.config = c;
  rec.mse = num / cache->reference_sq_norm;
  rec.achieved_sparsity = sparsity(mask);
  rec.loss = rec.mse + penalty_weight *
                           std::max(0.0, sparsity_target -
                                             rec.achieved_sparsity);
  return rec;
}

SparsityConfig random_config(Mode mode, const SearchSpace& space,
                             SplitMix64& rng) {
  space.validate();
  const auto ivs = space.active(mode);
  std::vector<double> x(6);
  for (int i = 0; i < 6; ++i)
    x[static_cast<std::size_t>(i)] =
        ivs[static_cast<std::size_t>(i)].lo +
        rng.u01() * (ivs[static_cast<std::size_t>(i)].hi -
                     ivs[static_cast<std::size_t>(i)].lo);
  return config_from_params(mode, x);
}

namespace {

double normal_pdf(double z) {
  static const double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * z * z);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Equal-weight mixture of Gaussians truncated to [lo, hi].
struct ParzenSide {
  std::vector<double> mu;
  std::vector<double> bw;
  double lo = 0.0, hi = 1.0;

  static ParzenSide fit(const std::vector<double>& values, double lo,
                        double hi) {
    ParzenSide side;
    side.lo = lo;
    side.hi = hi;
    side.mu = values;
    const double floor_bw = (hi - lo) / 10.0;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    side.bw.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      double gap = std::numeric_limits<double>::infinity();
      const auto it =
          std::lower_bound(sorted.begin(), sorted.end(), values[i]);
      const std::size_t pos = static_cast<std::size_t>(it - sorted.begin());
      if (pos > 0) gap = std::min(gap, values[i] - sorted[pos - 1]);
      if (pos + 1 < sorted.size())
        gap = std::min(gap, sorted[pos + 1] - values[i]);
      if (!std::isfinite(gap)) gap = 0.0;
      side.bw[i] = std::max(floor_bw, gap);
    }
    return side;
  }

  double density(double x) const {
    if (mu.empty()) return 1.0 / (hi - lo);  // uniform fallback
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double z = normal_cdf((hi - mu[i]) / bw[i]) -
                       normal_cdf((lo - mu[i]) / bw[i]);
      acc += normal_pdf((x - mu[i]) / bw[i]) / (bw[i] * z);
    }
    return acc / static_cast<double>(mu.size());
  }

  double sample(SplitMix64& rng) const {
    const std::size_t i =
        static_cast<std::size_t>(rng.bounded(mu.size()));
    double x = 0.0;
    for (int attempt = 0; attempt < 100; ++attempt) {
      x = mu[i] + bw[i] * rng.gaussian();
      if (x >= lo && x <= hi) return x;
    }
    return std::clamp(x, lo, hi);
  }
};

}  // namespace

SparsityConfig tpe_suggest(const std::vector<TrialRecord>& history, Mode mode,
                           const SearchSpace& space, SplitMix64& rng,
                           const TpeParams& tpe) {
  space.validate();
  if (static_cast<int>(history.size()) < tpe.n_startup)
    return random_config(mode, space, rng);

  // Split at the loss quantile; ties resolve toward the earlier trial.
  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (history[a].loss != history[b].loss)
      return history[a].loss < history[b].loss;
    return history[a].trial_index < history[b].trial_index;
  });
  const std::size_t n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(
             tpe.quantile * static_cast<double>(history.size()))));

  const auto ivs = space.active(mode);
  std::vector<ParzenSide> good(6), bad(6);
  for (int p = 0; p < 6; ++p) {
    std::vector<double> gv, bv;
    for (std::size_t i = 0; i < order.size(); ++i) {
      const double v = config_params(history[order[i]].config)
                           [static_cast<std::size_t>(p)];
      (i < n_good ? gv : bv).push_back(v);
    }
    const Interval& iv = ivs[static_cast<std::size_t>(p)];
    good[static_cast<std::size_t>(p)] = ParzenSide::fit(gv, iv.lo, iv.hi);
    bad[static_cast<std::size_t>(p)] = ParzenSide::fit(bv, iv.lo, iv.hi);
  }

  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> best_x(6, 0.0);
  for (int cand = 0; cand < tpe.n_candidates; ++cand) {
    std::vector<double> x(6);
    double score = 0.0;
    for (int p = 0; p < 6; ++p) {
      const double v = good[static_cast<std::size_t>(p)].sample(rng);
      x[static_cast<std::size_t>(p)] = v;
      score += std::log(good[static_cast<std::size_t>(p)].density(v)) -
               std::log(bad[static_cast<std::size_t>(p)].density(v));
    }
    if (score > best_score) {
      best_score = score;
      best_x = x;
    }
  }
  return config_from_params(mode, best_x);
}

ProfileResult profile_regime(Regime regime, Mode mode, int trials,
                             const GridSpec& g, std::uint64_t seed,
                             const SearchSpace& space,
                             const ProfileSettings& settings) {
  if (trials < 1)
    throw std::invalid_argument("profile_regime: trials must be >= 1");
  space.validate();

  const std::uint64_t regime_tag = static_cast<std::uint64_t>(regime) + 1;
  const std::uint64_t mode_tag = mode == Mode::StaticRatio ? 1 : 2;
  SplitMix64 rng(mix64(seed, regime_tag, mode_tag));

  ProxyBatch batch;
  DenseProxyCache cache;
  if (!settings.resample_batch) {
    batch = simulate(regime, g, settings.feature_dim, settings.spatial_scale,
                     mix64(seed, regime_tag));
    cache = build_proxy_cache(batch);
  }

  ProfileResult result;
  result.regime = regime;
  result.mode = mode;
  result.history.reserve(static_cast<std::size_t>(trials));
  for (int tr = 0; tr < trials; ++tr) {
    SparsityConfig config =
        settings.random_search
            ? random_config(mode, space, rng)
            : tpe_suggest(result.history, mode, space, rng, settings.tpe);
    TrialRecord rec;
    if (settings.resample_batch) {
      ProxyBatch fresh =
          simulate(regime, g, settings.feature_dim, settings.spatial_scale,
                   mix64(seed, regime_tag, 1000 + static_cast<std::uint64_t>(tr)));
      rec = objective(config, fresh, settings.penalty_weight,
                      settings.sparsity_target, nullptr);
    } else {
      rec = objective(config, batch, settings.penalty_weight,
                      settings.sparsity_target, &cache);
    }
    rec.trial_index = tr;
    result.history.push_back(rec);
  }

  result.best = result.history.front();
  for (const TrialRecord& r : result.history)
    if (r.loss < result.best.loss) result.best = r;
  return result;
}

RegimeLUT build_lut(
    const std::vector<std::pair<Regime, RegimeLUT::Entry>>& entries,
    const GridSpec& g, std::uint64_t seed, int trials) {
  RegimeLUT lut;
  lut.grid = g;
  lut.seed = seed;
  lut.trials = trials;
  lut.low_confidence = trials < 10;
  for (const auto& [regime, entry] : entries) {
    entry.config.validate();
    if (!lut.entries.emplace(regime, entry).second)
      throw std::invalid_argument(std::string("duplicate regime entry: ") +
                                  regime_name(regime));
  }
  char buf[32];
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  lut.created_at = buf;
  return lut;
}

const RegimeLUT::Entry& lookup(const RegimeLUT& lut, Regime r) {
  const auto it = lut.entries.find(r);
  if (it == lut.entries.end())
    throw LutLookupError(std::string("no entry for regime: ") +
                         regime_name(r));
  return it->second;
}

namespace {

const char* mode_name(Mode m) {
  return m == Mode::StaticRatio ? "static_ratio" : "dynamic_threshold";
}

Mode mode_from_name(const std::string& s) {
  if (s == "static_ratio") return Mode::StaticRatio;
  if (s == "dynamic_threshold") return Mode::DynamicThreshold;
  throw std::runtime_error("unknown mode: " + s);
}

nlohmann::json lut_json(const RegimeLUT& lut) {
  nlohmann::json j;
  j["version"] = 1;
  j["grid"] = {{"n_frames", lut.grid.n_frames},
               {"tokens_per_frame", lut.grid.tokens_per_frame},
               {"block_size", lut.grid.block_size}};
  j["seed"] = lut.seed;
  j["trials"] = lut.trials;
  j["low_confidence"] = lut.low_confidence;
  j["created_at"] = lut.created_at;
  nlohmann::json regimes = nlohmann::json::object();
  for (const auto& [regime, e] : lut.entries) {
    regimes[regime_name(regime)] = {
        {"mode", mode_name(e.config.mode)},
        {"gamma", e.config.radial.decay_factor},
        {"lambda", e.config.radial.long_range_factor},
        {"theta_m", e.config.mask_threshold},
        {"theta_c", e.config.col_threshold},
        {"near_param", e.config.near_param},
        {"far_param", e.config.far_param},
        {"achieved_sparsity", e.achieved_sparsity},
        {"loss", e.loss},
    };
  }
  j["regimes"] = regimes;
  return j;
}

}  // namespace

std::string lut_to_json(const RegimeLUT& lut, int indent) {
  return lut_json(lut).dump(indent);
}

RegimeLUT lut_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("lut parse error: ") + e.what());
  }
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("unsupported lut version");
  RegimeLUT lut;
  const auto& g = j.at("grid");
  lut.grid = make_grid(g.at("n_frames").get<int>(),
                       g.at("tokens_per_frame").get<int>(),
                       g.at("block_size").get<int>());
  lut.seed = j.at("seed").get<std::uint64_t>();
  lut.trials = j.at("trials").get<int>();
  lut.low_confidence = j.value("low_confidence", lut.trials < 10);
  lut.created_at = j.value("created_at", std::string());
  for (const auto& [key, e] : j.at("regimes").items()) {
    const Regime regime = regime_from_name(key);
    RegimeLUT::Entry entry;
    entry.config.mode = mode_from_name(e.at("mode").get<std::string>());
    entry.config.radial.decay_factor = e.at("gamma").get<double>();
    entry.config.radial.long_range_factor = e.at("lambda").get<double>();
    entry.config.mask_threshold = e.at("theta_m").get<double>();
    entry.config.col_threshold = e.at("theta_c").get<double>();
    entry.config.near_param = e.at("near_param").get<double>();
    entry.config.far_param = e.at("far_param").get<double>();
    entry.achieved_sparsity = e.at("achieved_sparsity").get<double>();
    entry.loss = e.at("loss").get<double>();
    entry.config.validate();
    if (!lut.entries.emplace(regime, entry).second)
      throw std::runtime_error("duplicate regime entry in lut: " + key);
  }
  return lut;
}

void write_lut(const RegimeLUT& lut, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << lut_to_json(lut) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

RegimeLUT read_lut(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return lut_from_json(text);
}

std::uint64_t canonical_hash(const RegimeLUT& lut) {
  nlohmann::json j = lut_json(lut);
  j.erase("created_at");
  const std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_history_csv(const std::vector<TrialRecord>& history,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "trial_index,loss,mse,sparsity,mode,gamma,lambda,theta_c,theta_m,"
         "near_param,far_param\n";
  char line[512];
  for (const TrialRecord& r : history) {
    const auto x = config_params(r.config);
    std::snprintf(line, sizeof(line),
                  "%d,%.17g,%.17g,%.17g,%s,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g\n",
                  r.trial_index, r.loss, r.mse, r.achieved_sparsity,
                  mode_name(r.config.mode), x[0], x[1], x[2], x[3], x[4],
                  x[5]);
    out << line;
  }
}

}  // namespace radialplan
