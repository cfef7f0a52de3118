// radialplan: block-sparse attention mask planning for video sequences.
//
// Subcommands:
//   mask     build one mask and write it to .bin/.csv/.pgm
//   profile  search per-regime configurations and emit a lookup table
//   eval     score a configuration against a fresh simulated batch
//   route    pick a regime and configuration for a clip
//   bench    time the mask build phases
//
// Exit codes: 0 success, 2 usage error, 1 runtime failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "radialplan/mask.hpp"
#include "radialplan/parallel.hpp"
#include "radialplan/profiler.hpp"
#include "radialplan/proxy.hpp"
#include "radialplan/router.hpp"

namespace rp = radialplan;
using nlohmann::json;

namespace {

std::string iso_now() {
  char buf[32];
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

json make_manifest(const std::string& command, const json& parameters,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs,
                   std::uint64_t seed) {
  return json{{"tool", "radialplan"},   {"manifest_version", 1},
              {"command", command},     {"created_at", iso_now()},
              {"parameters", parameters}, {"inputs", inputs},
              {"outputs", outputs},     {"seed", seed},
              {"threads", rp::thread_budget()}};
}

void write_manifest(const json& manifest, const std::string& out_path) {
  const std::string path = out_path + ".manifest.json";
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << manifest.dump(2) << '\n';
}

json grid_json(const rp::GridSpec& g) {
  return json{{"n_frames", g.n_frames},
              {"tokens_per_frame", g.tokens_per_frame},
              {"block_size", g.block_size},
              {"total_tokens", g.total_tokens},
              {"padded_tokens", g.padded_tokens},
              {"blocks_per_dim", g.blocks_per_dim}};
}

json config_json(const rp::SparsityConfig& c) {
  return json{{"mode", c.mode == rp::Mode::StaticRatio ? "static_ratio"
                                                       : "dynamic_threshold"},
              {"gamma", c.radial.decay_factor},
              {"lambda", c.radial.long_range_factor},
              {"theta_m", c.mask_threshold},
              {"theta_c", c.col_threshold},
              {"near_param", c.near_param},
              {"far_param", c.far_param}};
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Shared flag bundles --------------------------------------------------

struct GridFlags {
  int frames = 16;
  int tokens = 64;
  int block = 8;

  void attach(CLI::App* cmd) {
    cmd->add_option("--frames", frames, "frames in the sequence");
    cmd->add_option("--tokens", tokens, "tokens per frame");
    cmd->add_option("--block", block, "block size (power of two >= 2)");
  }
  rp::GridSpec grid() const { return rp::make_grid(frames, tokens, block); }
};

struct ConfigFlags {
  std::string mode = "static";
  double gamma = 2.0;
  double lambda = 0.3;
  double theta_m = 0.75;
  double theta_c = 0.20;
  std::optional<double> rho1, rho2, tau1, tau2;
  int fallback_k = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "static or dynamic")
        ->check(CLI::IsMember({"static", "dynamic"}));
    cmd->add_option("--gamma", gamma, "window decay factor");
    cmd->add_option("--lambda", lambda, "split decay factor");
    cmd->add_option("--theta-m", theta_m, "block activation fraction");
    cmd->add_option("--theta-c", theta_c, "column activation fraction");
    cmd->add_option("--rho1", rho1, "static near retention ratio");
    cmd->add_option("--rho2", rho2, "static far retention ratio");
    cmd->add_option("--tau1", tau1, "dynamic near threshold");
    cmd->add_option("--tau2", tau2, "dynamic far threshold");
    cmd->add_option("--fallback-k", fallback_k,
                    "dynamic: pairs kept when none clear the threshold");
  }

  rp::SparsityConfig config() const {
    rp::SparsityConfig c;
    c.radial.decay_factor = gamma;
    c.radial.long_range_factor = lambda;
    c.mask_threshold = theta_m;
    c.col_threshold = theta_c;
    c.fallback_k = fallback_k;
    if (mode == "static") {
      c.mode = rp::Mode::StaticRatio;
      if (!rho1 || !rho2)
        throw CLI::ValidationError(
            "--mode static requires --rho1 and --rho2");
      if (tau1 || tau2)
        throw CLI::ValidationError("--tau1/--tau2 are dynamic-mode flags");
      c.near_param = *rho1;
      c.far_param = *rho2;
    } else {
      c.mode = rp::Mode::DynamicThreshold;
      if (!tau1 || !tau2)
        throw CLI::ValidationError(
            "--mode dynamic requires --tau1 and --tau2");
      if (rho1 || rho2)
        throw CLI::ValidationError("--rho1/--rho2 are static-mode flags");
      c.near_param = *tau1;
      c.far_param = *tau2;
    }
    return c;
  }
};

struct FeatureFlags {
  std::string features_path;
  std::string proxy_regime;
  int feature_dim = 64;
  double sigma_s = -1.0;
  std::uint64_t proxy_seed = 0;
  bool proxy_seed_set = false;
  int fused_heads = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--features", features_path,
                    "feature batch file (with .json sidecar)");
    cmd->add_option("--proxy", proxy_regime,
                    "simulate features for a drift regime")
        ->check(CLI::IsMember({"low", "mid", "high"}));
    cmd->add_option("--feature-dim", feature_dim, "simulated feature dim");
    cmd->add_option("--sigma-s", sigma_s,
                    "token smoothing scale; <= 0 means tokens/8");
    cmd->add_option_function<std::uint64_t>(
           "--proxy-seed",
           [this](std::uint64_t v) {
             proxy_seed = v;
             proxy_seed_set = true;
           },
           "simulation seed; defaults to a value derived from --seed");
    cmd->add_option("--fused-heads", fused_heads,
                    "split the feature dim into this many scoring heads");
  }

  // Returns the batch and the path it came from, if any.
  std::optional<rp::ProxyBatch> load(const rp::GridSpec& g,
                                     std::uint64_t run_seed) const {
    if (!features_path.empty() && !proxy_regime.empty())
      throw CLI::ValidationError("--features and --proxy are exclusive");
    if (!features_path.empty()) return rp::read_batch(features_path);
    if (!proxy_regime.empty()) {
      const std::uint64_t s = proxy_seed_set
                                  ? proxy_seed
                                  : rp::mix64(run_seed, 0x70726f7879ull);
      return rp::simulate(rp::regime_from_name(proxy_regime), g, feature_dim,
                          sigma_s, s);
    }
    return std::nullopt;
  }
};

// Subcommand runners ---------------------------------------------------

int run_mask(const GridFlags& gf, const ConfigFlags& cf,
             const FeatureFlags& ff, const std::string& lut_path,
             const std::string& regime_name, std::uint64_t seed,
             const std::string& out, const std::string& format_override,
             bool no_split) {
  const rp::GridSpec g = gf.grid();

  rp::SparsityConfig config;
  if (!lut_path.empty()) {
    if (regime_name.empty())
      throw CLI::ValidationError("--lut requires --regime");
    const rp::RegimeLUT lut = rp::read_lut(lut_path);
    config = rp::lookup(lut, rp::regime_from_name(regime_name)).config;
  } else {
    config = cf.config();
  }

  std::optional<rp::ProxyBatch> batch = ff.load(g, seed);
  rp::FeatureBatch scoring;
  rp::BuildOptions opt;
  opt.disable_split = no_split;
  rp::BuildTimings timings;
  opt.timings = &timings;
  if (config.mode == rp::Mode::DynamicThreshold) {
    if (!batch)
      throw CLI::ValidationError(
          "dynamic mode needs --features or --proxy");
    if (batch->grid.total_tokens < g.total_tokens)
      throw std::runtime_error("feature batch shorter than the grid");
    scoring = rp::scoring_features(*batch, ff.fused_heads);
    opt.features = &scoring;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const rp::BlockMask mask = rp::build_mask(g, config, seed, opt);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  const rp::MaskFormat fmt = format_override.empty()
                                 ? rp::mask_format_for_path(out)
                                 : rp::mask_format_for_path("x." + format_override);
  rp::write_mask(mask, fmt, out);

  std::printf(
      "mask %lldx%lld blocks, %lld active, sparsity %.4f, %.3fs\n",
      static_cast<long long>(mask.dim), static_cast<long long>(mask.dim),
      static_cast<long long>(mask.active_count()), rp::sparsity(mask), wall);

  json params{{"grid", grid_json(g)},
              {"config", config_json(config)},
              {"no_split", no_split},
              {"wall_s", wall},
              {"timings",
               {{"candidates_s", timings.candidates_s},
                {"selection_s", timings.selection_s},
                {"aggregation_s", timings.aggregation_s},
                {"retained_frame_pairs", timings.retained_frame_pairs}}},
              {"sparsity", rp::sparsity(mask)},
              {"active_blocks", mask.active_count()}};
  std::vector<std::string> inputs;
  if (!lut_path.empty()) inputs.push_back(lut_path);
  if (!ff.features_path.empty()) inputs.push_back(ff.features_path);
  write_manifest(make_manifest("mask", params, inputs, {out}, seed), out);
  return 0;
}

int run_profile(const GridFlags& gf, const std::string& regimes_csv,
                const std::string& modes_csv, int trials, std::uint64_t seed,
                const std::string& out, const std::string& history_dir,
                rp::ProfileSettings settings) {
  const rp::GridSpec g = gf.grid();
  const auto regime_names = split_csv(regimes_csv);
  const auto mode_names = split_csv(modes_csv);
  if (regime_names.empty() || mode_names.empty())
    throw CLI::ValidationError("--regimes and --modes must be non-empty");
  for (const auto& m : mode_names)
    if (m != "static" && m != "dynamic")
      throw CLI::ValidationError("--modes entries must be static or dynamic");

  std::string stem = out;
  if (const auto dot = stem.rfind(".json"); dot != std::string::npos)
    stem = stem.substr(0, dot);
  std::string hist_prefix = history_dir.empty() ? stem : history_dir + "/";
  if (!history_dir.empty()) {
    const auto slash = stem.find_last_of('/');
    hist_prefix += slash == std::string::npos ? stem : stem.substr(slash + 1);
  }

  std::vector<std::pair<rp::Regime, rp::RegimeLUT::Entry>> entries;
  std::vector<std::string> outputs{out};
  json summary = json::object();
  for (const auto& rn : regime_names) {
    const rp::Regime regime = rp::regime_from_name(rn);
    std::optional<rp::ProfileResult> best;
    for (const auto& mn : mode_names) {
      const rp::Mode mode = mn == "static" ? rp::Mode::StaticRatio
                                           : rp::Mode::DynamicThreshold;
      rp::ProfileResult res =
          rp::profile_regime(regime, mode, trials, g, seed, {}, settings);
      const std::string csv_path = hist_prefix + "_" + rn + "_" + mn + ".csv";
      rp::write_history_csv(res.history, csv_path);
      outputs.push_back(csv_path);
      std::printf("%s/%s: best loss %.6f, mse %.6f, sparsity %.4f\n",
                  rn.c_str(), mn.c_str(), res.best.loss, res.best.mse,
                  res.best.achieved_sparsity);
      if (!best || res.best.loss < best->best.loss) best = std::move(res);
    }
    rp::RegimeLUT::Entry entry;
    entry.config = best->best.config;
    entry.achieved_sparsity = best->best.achieved_sparsity;
    entry.loss = best->best.loss;
    entries.emplace_back(regime, entry);
    summary[rn] = config_json(entry.config);
  }

  rp::RegimeLUT lut = rp::build_lut(entries, g, seed, trials);
  rp::write_lut(lut, out);
  std::printf("wrote %s (hash %016llx)%s\n", out.c_str(),
              static_cast<unsigned long long>(rp::canonical_hash(lut)),
              lut.low_confidence ? " [low confidence: few trials]" : "");

  json params{{"grid", grid_json(g)},
              {"regimes", regime_names},
              {"modes", mode_names},
              {"trials", trials},
              {"feature_dim", settings.feature_dim},
              {"spatial_scale", settings.spatial_scale},
              {"penalty_weight", settings.penalty_weight},
              {"sparsity_target", settings.sparsity_target},
              {"resample", settings.resample_batch},
              {"random_search", settings.random_search},
              {"lut_hash",
               static_cast<std::uint64_t>(rp::canonical_hash(lut))},
              {"summary", summary}};
  write_manifest(make_manifest("profile", params, {}, outputs, seed), out);
  return 0;
}

int run_eval(const GridFlags& gf, const ConfigFlags& cf,
             const std::string& lut_path, const std::string& regime_name,
             const std::string& proxy_regime, std::uint64_t seed,
             double penalty_weight, double target, int feature_dim,
             double sigma_s) {
  const rp::GridSpec g = gf.grid();

  rp::SparsityConfig config;
  std::string drift_name;
  if (!lut_path.empty()) {
    if (regime_name.empty())
      throw CLI::ValidationError("--lut requires --regime");
    config = rp::lookup(rp::read_lut(lut_path),
                        rp::regime_from_name(regime_name))
                 .config;
    drift_name = regime_name;
  } else {
    config = cf.config();
    if (proxy_regime.empty())
      throw CLI::ValidationError(
          "explicit-config eval needs --proxy for the batch regime");
    drift_name = proxy_regime;
  }

  // Fresh batch: not the one any profile run was fitted on.
  const rp::ProxyBatch batch =
      rp::simulate(rp::regime_from_name(drift_name), g, feature_dim, sigma_s,
                   rp::mix64(seed, 0x6576616cull));
  const rp::TrialRecord rec =
      rp::objective(config, batch, penalty_weight, target);

  json params{{"grid", grid_json(g)},
              {"config", config_json(config)},
              {"regime", drift_name},
              {"penalty_weight", penalty_weight},
              {"sparsity_target", target}};
  std::vector<std::string> inputs;
  if (!lut_path.empty()) inputs.push_back(lut_path);
  json result{{"regime", drift_name},
              {"config", config_json(config)},
              {"loss", rec.loss},
              {"mse", rec.mse},
              {"sparsity", rec.achieved_sparsity},
              {"manifest", make_manifest("eval", params, inputs, {}, seed)}};
  std::cout << result.dump(2) << '\n';
  return 0;
}

int run_route(const std::string& lut_path, std::optional<double> score,
              const std::string& prompt, bool use_stdin,
              const std::string& bins_csv, const std::string& lexicon_path) {
  const rp::RegimeLUT lut = rp::read_lut(lut_path);
  rp::RegimeBins bins;
  if (!bins_csv.empty()) {
    const auto parts = split_csv(bins_csv);
    if (parts.size() != 2)
      throw CLI::ValidationError("--bins wants two comma-separated numbers");
    bins.low_upper = std::stod(parts[0]);
    bins.mid_upper = std::stod(parts[1]);
    bins.validate();
  }

  auto emit = [&](std::optional<double> s, const std::string& source,
                  bool with_manifest) {
    const rp::RouteResult res = rp::route(s, lut, bins);
    json line{{"score", s.has_value() ? json(*s) : json(nullptr)},
              {"score_source", source},
              {"regime", rp::regime_name(res.regime)},
              {"conservative_default", res.conservative_default},
              {"config", config_json(res.entry.config)},
              {"achieved_sparsity", res.entry.achieved_sparsity}};
    if (with_manifest) {
      json params{{"bins", {bins.low_upper, bins.mid_upper}},
                  {"score_source", source}};
      line["manifest"] =
          make_manifest("route", params, {lut_path}, {}, lut.seed);
    }
    std::cout << line.dump(with_manifest ? 2 : -1) << '\n';
  };

  if (use_stdin) {
    std::string linebuf;
    while (std::getline(std::cin, linebuf)) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(linebuf, &pos);
        while (pos < linebuf.size() && std::isspace(
                   static_cast<unsigned char>(linebuf[pos])))
          ++pos;
        if (pos != linebuf.size())
          emit(std::nullopt, "none", false);
        else
          emit(v, "provided", false);
      } catch (const std::invalid_argument&) {
        emit(std::nullopt, "none", false);
      } catch (const std::out_of_range&) {
        emit(std::nullopt, "none", false);
      }
    }
    return 0;
  }

  if (score.has_value()) {
    emit(score, "provided", true);
  } else if (!prompt.empty()) {
    const rp::Lexicon lex = rp::load_lexicon(lexicon_path);
    emit(rp::heuristic_score(prompt, lex), "heuristic", true);
  } else {
    emit(std::nullopt, "none", true);
  }
  return 0;
}

int run_bench(const GridFlags& gf, const ConfigFlags& cf,
              const FeatureFlags& ff, std::uint64_t seed, int reps,
              bool as_json, bool no_split) {
  if (reps < 1) throw CLI::ValidationError("--reps must be >= 1");
  const rp::GridSpec g = gf.grid();
  const rp::SparsityConfig config = cf.config();

  std::optional<rp::ProxyBatch> batch = ff.load(g, seed);
  rp::FeatureBatch scoring;
  if (config.mode == rp::Mode::DynamicThreshold) {
    if (!batch)
      throw CLI::ValidationError("dynamic mode needs --features or --proxy");
    scoring = rp::scoring_features(*batch, ff.fused_heads);
  }

  std::vector<rp::BuildTimings> times;
  std::vector<double> walls;
  double sp = 0.0;
  for (int r = 0; r < reps; ++r) {
    rp::BuildTimings bt;
    rp::BuildOptions opt;
    opt.disable_split = no_split;
    opt.timings = &bt;
    if (config.mode == rp::Mode::DynamicThreshold) opt.features = &scoring;
    const auto t0 = std::chrono::steady_clock::now();
    const rp::BlockMask mask = rp::build_mask(g, config, seed, opt);
    walls.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count());
    times.push_back(bt);
    sp = rp::sparsity(mask);
  }

  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  std::vector<double> cand, sel, agg;
  for (const auto& t : times) {
    cand.push_back(t.candidates_s);
    sel.push_back(t.selection_s);
    agg.push_back(t.aggregation_s);
  }
  const double med_wall = median(walls);
  const std::int64_t pairs = times.front().retained_frame_pairs;

  json params{{"grid", grid_json(g)},   {"config", config_json(config)},
              {"reps", reps},           {"no_split", no_split},
              {"sparsity", sp},         {"median_wall_s", med_wall},
              {"median_candidates_s", median(cand)},
              {"median_selection_s", median(sel)},
              {"median_aggregation_s", median(agg)},
              {"retained_frame_pairs", pairs}};
  const json manifest = make_manifest("bench", params, {}, {}, seed);

  if (as_json) {
    json out = params;
    out["per_frame_pair_ms"] =
        pairs > 0 ? 1e3 * med_wall / static_cast<double>(pairs) : 0.0;
    out["manifest"] = manifest;
    std::cout << out.dump(2) << '\n';
  } else {
    std::printf("grid %dx%d block %d, %d reps, sparsity %.4f\n", g.n_frames,
                g.tokens_per_frame, g.block_size, reps, sp);
    std::printf("median wall      %.4fs\n", med_wall);
    std::printf("median candidates %.4fs (worker time)\n", median(cand));
    std::printf("median selection  %.4fs (worker time)\n", median(sel));
    std::printf("median aggregation %.4fs (worker time)\n", median(agg));
    std::printf("retained frame pairs %lld, %.3f ms per pair\n",
                static_cast<long long>(pairs),
                pairs > 0 ? 1e3 * med_wall / static_cast<double>(pairs)
                          : 0.0);
    std::printf("manifest: %s\n", manifest.dump(-1).c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-sparse attention mask planner"};
  app.require_subcommand(1);

  // mask
  auto* mask_cmd = app.add_subcommand("mask", "build one block mask");
  GridFlags mask_grid;
  ConfigFlags mask_cfg;
  FeatureFlags mask_feat;
  std::string mask_lut, mask_regime, mask_out, mask_fmt;
  std::uint64_t mask_seed = 0;
  bool mask_nosplit = false;
  mask_grid.attach(mask_cmd);
  mask_cfg.attach(mask_cmd);
  mask_feat.attach(mask_cmd);
  mask_cmd->add_option("--lut", mask_lut, "take the config from this table");
  mask_cmd->add_option("--regime", mask_regime, "table regime to use")
      ->check(CLI::IsMember({"low", "mid", "high"}));
  mask_cmd->add_option("--seed", mask_seed, "sampling seed");
  mask_cmd->add_option("--out", mask_out, "output path (.bin/.csv/.pgm)")
      ->required();
  mask_cmd->add_option("--format", mask_fmt, "override format")
      ->check(CLI::IsMember({"bin", "csv", "pgm"}));
  mask_cmd->add_flag("--no-split", mask_nosplit,
                     "keep every frame distance (no thinning)");

  // profile
  auto* prof_cmd =
      app.add_subcommand("profile", "search configurations, emit a table");
  GridFlags prof_grid;
  std::string prof_regimes = "low,mid,high";
  std::string prof_modes = "static,dynamic";
  std::string prof_out, prof_histdir;
  int prof_trials = 30;
  std::uint64_t prof_seed = 0;
  rp::ProfileSettings prof_settings;
  prof_grid.attach(prof_cmd);
  prof_cmd->add_option("--regimes", prof_regimes, "comma list of regimes");
  prof_cmd->add_option("--modes", prof_modes, "comma list of modes");
  prof_cmd->add_option("--trials", prof_trials, "search trials per run");
  prof_cmd->add_option("--seed", prof_seed, "search and batch seed");
  prof_cmd->add_option("--out", prof_out, "lookup table path")->required();
  prof_cmd->add_option("--history-dir", prof_histdir,
                       "directory for trial CSVs (default: beside --out)");
  prof_cmd->add_option("--feature-dim", prof_settings.feature_dim,
                       "proxy feature dim");
  prof_cmd->add_option("--sigma-s", prof_settings.spatial_scale,
                       "token smoothing scale; <= 0 means tokens/8");
  prof_cmd->add_option("--alpha", prof_settings.penalty_weight,
                       "sparsity shortfall penalty weight");
  prof_cmd->add_option("--target", prof_settings.sparsity_target,
                       "sparsity target");
  prof_cmd->add_flag("--resample", prof_settings.resample_batch,
                     "fresh batch per trial instead of one frozen batch");
  prof_cmd->add_flag("--random-search", prof_settings.random_search,
                     "uniform sampling baseline instead of the TPE");

  // eval
  auto* eval_cmd =
      app.add_subcommand("eval", "score a configuration on a fresh batch");
  GridFlags eval_grid;
  ConfigFlags eval_cfg;
  std::string eval_lut, eval_regime, eval_proxy;
  std::uint64_t eval_seed = 0;
  double eval_alpha = 10.0, eval_target = 0.80;
  int eval_fdim = 64;
  double eval_sigma = -1.0;
  eval_grid.attach(eval_cmd);
  eval_cfg.attach(eval_cmd);
  eval_cmd->add_option("--lut", eval_lut, "take the config from this table");
  eval_cmd->add_option("--regime", eval_regime, "table regime to use")
      ->check(CLI::IsMember({"low", "mid", "high"}));
  eval_cmd->add_option("--proxy", eval_proxy,
                       "batch regime for explicit-config eval")
      ->check(CLI::IsMember({"low", "mid", "high"}));
  eval_cmd->add_option("--seed", eval_seed, "eval batch seed");
  eval_cmd->add_option("--alpha", eval_alpha, "penalty weight");
  eval_cmd->add_option("--target", eval_target, "sparsity target");
  eval_cmd->add_option("--feature-dim", eval_fdim, "proxy feature dim");
  eval_cmd->add_option("--sigma-s", eval_sigma, "token smoothing scale");

  // route
  auto* route_cmd =
      app.add_subcommand("route", "pick a regime and config for a clip");
  std::string route_lut, route_prompt, route_bins, route_lex =
      "data/motion_lexicon.json";
  std::optional<double> route_score;
  bool route_stdin = false;
  route_cmd->add_option("--lut", route_lut, "lookup table")->required();
  route_cmd->add_option("--score", route_score, "motion score in [0, 1]");
  route_cmd->add_option("--prompt", route_prompt,
                        "prompt text for heuristic scoring");
  route_cmd->add_flag("--stdin", route_stdin,
                      "read one score per line, emit one JSON per line");
  route_cmd->add_option("--bins", route_bins,
                        "regime bin edges, e.g. 0.3,0.7");
  route_cmd->add_option("--lexicon", route_lex, "keyword lexicon path");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "time the mask build");
  GridFlags bench_grid;
  ConfigFlags bench_cfg;
  FeatureFlags bench_feat;
  std::uint64_t bench_seed = 0;
  int bench_reps = 5;
  bool bench_json = false, bench_nosplit = false;
  bench_grid.attach(bench_cmd);
  bench_cfg.attach(bench_cmd);
  bench_feat.attach(bench_cmd);
  bench_cmd->add_option("--seed", bench_seed, "sampling seed");
  bench_cmd->add_option("--reps", bench_reps, "repetitions (median reported)");
  bench_cmd->add_flag("--json", bench_json, "machine-readable output");
  bench_cmd->add_flag("--no-split", bench_nosplit,
                      "keep every frame distance (no thinning)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*mask_cmd)
      return run_mask(mask_grid, mask_cfg, mask_feat, mask_lut, mask_regime,
                      mask_seed, mask_out, mask_fmt, mask_nosplit);
    if (*prof_cmd)
      return run_profile(prof_grid, prof_regimes, prof_modes, prof_trials,
                         prof_seed, prof_out, prof_histdir, prof_settings);
    if (*eval_cmd)
      return run_eval(eval_grid, eval_cfg, eval_lut, eval_regime, eval_proxy,
                      eval_seed, eval_alpha, eval_target, eval_fdim,
                      eval_sigma);
    if (*route_cmd)
      return run_route(route_lut, route_score, route_prompt, route_stdin,
                       route_bins, route_lex);
    if (*bench_cmd)
      return run_bench(bench_grid, bench_cfg, bench_feat, bench_seed,
                       bench_reps, bench_json, bench_nosplit);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
