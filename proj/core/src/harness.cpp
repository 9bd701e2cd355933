#include "fedfence/harness.hpp"

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "fedfence/thresholds.hpp"

namespace fedfence {
namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// --seed flag > explicit config seed > FEDFENCE_SEED > config default.
u64 resolve_seed(const ExperimentConfig& cfg, const std::optional<u64>& flag) {
  if (flag) return *flag;
  if (cfg.seed_given) return cfg.protocol.seed;
  if (const char* env = std::getenv("FEDFENCE_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0' || *env == '-')
      throw ConfigError("FEDFENCE_SEED: cannot parse '" + std::string(env) +
                        "' as an unsigned integer");
    return static_cast<u64>(v);
  }
  return cfg.protocol.seed;
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open output file '" + path + "'");
  return file;
}

void write_metrics_row(std::ostream& out, const RoundMetrics& r, bool timing) {
  out << r.round << "," << fmt(r.accuracy) << "," << fmt(r.asr) << ","
      << fmt(r.est_error) << "," << fmt(r.lambda_max) << ","
      << fmt(timing ? r.wall_ms : 0.0) << "," << (r.robust_bound_ok ? 1 : 0)
      << "\n";
}

}  // namespace

std::string regime_label(std::size_t n, std::size_t p) {
  if (p == n) return "zero_privacy";
  if (p == 1) return "single_shard";
  return "sharded";
}

ProtocolResult simulate_experiment(const ExperimentConfig& cfg) {
  SeededRng root(cfg.protocol.seed);
  TrainTask task = build_task(cfg.task, root);
  ProtocolConfig pc = cfg.protocol;
  if (cfg.target_const && !pc.attack.target_model)
    pc.attack.target_model =
        RealVector(task.model_dim(), *cfg.target_const);
  return run_protocol(pc, task);
}

void write_metrics_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds,
                       bool timing) {
  out << kMetricsCsvHeader << "\n";
  for (const auto& r : rounds) write_metrics_row(out, r, timing);
}

int cmd_simulate(const SimulateOptions& opt) {
  ExperimentConfig cfg = load_config_file(opt.config_path);
  cfg.protocol.seed = resolve_seed(cfg, opt.seed_override);
  const bool timing = opt.timing || cfg.timing;
  ProtocolResult result = simulate_experiment(cfg);
  std::ofstream file;
  std::ostream& out = open_or_stdout(opt.out_path, file);
  write_metrics_csv(out, result.rounds, timing);
  if (!opt.quiet && !result.rounds.empty()) {
    const RoundMetrics& last = result.rounds.back();
    std::cerr << "final: round=" << last.round << " accuracy="
              << fmt(last.accuracy) << " asr=" << fmt(last.asr)
              << " est_error=" << fmt(last.est_error) << " robust_bound_ok="
              << (last.robust_bound_ok ? 1 : 0) << "\n";
  }
  return 0;
}

// Sweepable knobs get short names; anything else must be a full schema key.
static std::string expand_sweep_param(const std::string& p) {
  if (p == "p") return "protocol.p";
  if (p == "epsilon") return "attack.epsilon";
  if (p == "sections") return "filter.sections";
  if (p == "eta") return "filter.eta";
  return p;
}

int cmd_sweep(const SweepOptions& opt) {
  ExperimentConfig base = load_config_file(opt.config_path);
  if (opt.param.empty()) throw ConfigError("sweep: --param is required");
  if (opt.values.empty()) throw ConfigError("sweep: --values is required");
  const std::string key = expand_sweep_param(opt.param);
  std::vector<u64> seeds = opt.seeds;
  if (seeds.empty()) seeds.push_back(resolve_seed(base, std::nullopt));

  // Reject every bad value before the output stream is touched, so a usage
  // error cannot truncate an existing file or leave a partial grid behind.
  for (const auto& value : opt.values) {
    ExperimentConfig probe = base;
    apply_override(probe, key, value);
  }

  std::ofstream file;
  std::ostream& out = open_or_stdout(opt.out_path, file);
  out << kSweepCsvHeader << "\n";
  for (const auto& value : opt.values) {
    for (const u64 seed : seeds) {
      ExperimentConfig cfg = base;
      apply_override(cfg, key, value);
      cfg.protocol.seed = seed;
      const std::string regime = regime_label(cfg.protocol.n, cfg.protocol.p);
      ProtocolResult result = simulate_experiment(cfg);
      for (const auto& r : result.rounds) {
        out << opt.param << "," << value << "," << seed << "," << regime << ",";
        write_metrics_row(out, r, opt.timing || cfg.timing);
      }
    }
  }
  return 0;
}

SecaggCheckReport run_secagg_check(const SecaggCheckOptions& opt) {
  if (opt.n == 0 || opt.p == 0 || opt.p > opt.n || opt.d == 0 ||
      opt.trials == 0)
    throw ConfigError("secagg-check: need n >= p >= 1, d >= 1, trials >= 1");
  const FixedPointParams params;
  SecaggCheckReport report;
  std::vector<u64> hist_real(thresholds::kUniformityBins, 0);
  std::vector<u64> hist_ideal(thresholds::kUniformityBins, 0);
  SeededRng root(opt.seed);

  for (std::size_t t = 0; t < opt.trials; ++t) {
    SeededRng part_rng = root.derive({stream::kBench, t, 1});
    SeededRng mask_rng = root.derive({stream::kBench, t, 2});
    SeededRng data_rng = root.derive({stream::kBench, t, 3});
    SeededRng ideal_rng = root.derive({stream::kBench, t, 4});

    ShardPlan plan = partition_shards(opt.n, opt.p, part_rng);
    MaskTable table = generate_masks(plan, opt.d, mask_rng);
    std::vector<RealVector> updates(opt.n, RealVector(opt.d));
    for (auto& u : updates)
      for (auto& x : u) x = data_rng.next_gaussian();

    ServerTranscript real;
    real.n = opt.n;
    real.d = opt.d;
    real.round = t;
    real.plan = plan;
    real.masked.resize(opt.n);
    for (std::size_t i = 0; i < opt.n; ++i)
      real.masked[i] =
          mask_update(updates[i], static_cast<ClientId>(i), table, params);

    // Exact cancellation: the mod-q sum of each shard's masked rows must
    // equal the mod-q sum of the plaintext encodings.
    for (ShardId s = 0; s < static_cast<ShardId>(opt.p); ++s) {
      FieldVector masked_sum(opt.d, 0);
      FieldVector plain_sum(opt.d, 0);
      for (const ClientId c : plan.shards[s]) {
        const FieldVector enc = encode_fixed(updates[c], params);
        for (std::size_t j = 0; j < opt.d; ++j) {
          masked_sum[j] += real.masked[c][j];
          plain_sum[j] += enc[j];
        }
      }
      ++report.shards_checked;
      if (masked_sum != plain_sum && !report.first_bad)
        report.first_bad = {t, s};
    }

    std::vector<RealVector> shard_sums(opt.p, RealVector(opt.d, 0.0));
    for (std::size_t i = 0; i < opt.n; ++i)
      axpy(1.0, updates[i], shard_sums[plan.shard_of[i]]);
    ServerTranscript ideal =
        simulate_ideal_transcript(plan, shard_sums, params, ideal_rng);

    accumulate_value_histogram(real, hist_real);
    accumulate_value_histogram(ideal, hist_ideal);
    report.coords_checked += opt.n * opt.d;
  }

  report.uniformity = chi_square_two_sample(hist_real, hist_ideal);
  report.uniformity_ok =
      report.uniformity.p_value >= thresholds::kUniformityPFloor;
  return report;
}

int cmd_secagg_check(const SecaggCheckOptions& opt) {
  SecaggCheckReport report = run_secagg_check(opt);
  std::cout << "secagg-check: n=" << opt.n << " p=" << opt.p << " d=" << opt.d
            << " trials=" << opt.trials << "\n";
  if (opt.p == opt.n)
    std::cout << "note: p = n makes every shard a singleton; no mask pairs "
                 "exist and masking degenerates to plain encoding\n";
  if (report.first_bad)
    std::cout << "cancellation: FAIL (first bad shard: trial "
              << report.first_bad->first << ", shard "
              << report.first_bad->second << ")\n";
  else
    std::cout << "cancellation: ok (" << report.shards_checked
              << " shards exact)\n";
  std::cout << "uniformity: chi2=" << fmt(report.uniformity.statistic)
            << " dof=" << report.uniformity.dof
            << " p=" << fmt(report.uniformity.p_value) << " ("
            << report.coords_checked << " coords, "
            << (report.uniformity_ok ? "ok" : "FAIL") << ")\n";
  std::cout << "result: " << (report.pass() ? "PASS" : "FAIL") << "\n";
  return report.pass() ? 0 : 1;
}

int cmd_clt_check(const CltCheckOptions& opt) {
  if (opt.trials < thresholds::kCltMinTrials)
    throw ConfigError("clt-check: trials must be >= " +
                      std::to_string(thresholds::kCltMinTrials) +
                      " for stable moment estimates");
  HeterogeneitySpec spec;
  std::size_t n = thresholds::kCltClients;
  if (!opt.config_path.empty()) {
    ExperimentConfig cfg = load_config_file(opt.config_path);
    spec = cfg.task.hetero;
    n = cfg.protocol.n;
  } else {
    spec.components = thresholds::kCltComponents;
    spec.component_means.assign(std::begin(thresholds::kCltComponentMeans),
                                std::end(thresholds::kCltComponentMeans));
    spec.component_sigmas.assign(std::begin(thresholds::kCltComponentSigmas),
                                 std::end(thresholds::kCltComponentSigmas));
  }
  if (n == 0) throw ConfigError("clt-check: need at least one client");

  bool all_ok = true;
  std::cout << "shard_size,trials,mean,variance,predicted_variance,"
               "variance_ratio,skew,excess_kurtosis,status\n";
  for (const std::size_t s : opt.shard_sizes) {
    if (s == 0 || n % s != 0)
      throw ConfigError("clt-check: shard size " + std::to_string(s) +
                        " must divide n=" + std::to_string(n));
    const std::vector<double> samples =
        clt_shard_mean_samples(spec, n, s, opt.trials, opt.seed);
    const CltReport r = clt_check(samples, spec, s);
    // Shape thresholds apply everywhere. The variance ratio is judged
    // against the per-shard prediction once sharding actually averages
    // (s > 1, or a single component where it holds trivially); unsharded
    // heterogeneous draws are the negative control and must instead show
    // the extra between-component variance the prediction omits.
    bool ok = std::fabs(r.moments.skewness) <= thresholds::kCltSkewAbsMax &&
              std::fabs(r.moments.excess_kurtosis) <=
                  thresholds::kCltKurtosisAbsMax;
    if (s > 1 || spec.components == 1) {
      ok = ok && r.variance_ratio >= thresholds::kCltVarianceRatioLo &&
           r.variance_ratio <= thresholds::kCltVarianceRatioHi;
    } else if (r.sigma_bar_sq > 0.0) {
      const double gap = r.sigma_env_sq / r.sigma_bar_sq;
      ok = ok && r.variance_ratio >=
                     1.0 + thresholds::kCltControlGapFraction * gap;
    }
    all_ok = all_ok && ok;
    std::cout << s << "," << opt.trials << "," << fmt(r.moments.mean) << ","
              << fmt(r.moments.variance) << "," << fmt(r.predicted_variance)
              << "," << fmt(r.variance_ratio) << "," << fmt(r.moments.skewness)
              << "," << fmt(r.moments.excess_kurtosis) << ","
              << (ok ? "ok" : "FAIL") << "\n";
  }
  return all_ok ? 0 : 1;
}

BenchCell contaminated_gaussian_bench(const EstimatorConfig& est, std::size_t d,
                                      std::size_t m, double epsilon,
                                      double shift, std::size_t trials,
                                      u64 seed) {
  if (d == 0 || m == 0 || trials == 0)
    throw std::invalid_argument("bench: d, m, trials must be positive");
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("bench: epsilon must be in [0, 1)");
  const auto bad =
      static_cast<std::size_t>(std::llround(epsilon * static_cast<double>(m)));
  if (bad >= m) throw std::invalid_argument("bench: no benign rows left");

  SeededRng root(seed);
  BenchCell cell;
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng rng = root.derive({stream::kBench, t, static_cast<u64>(d)});
    UpdateSet u;
    u.rows.assign(m, RealVector(d));
    for (std::size_t i = 0; i < bad; ++i)
      u.rows[i].assign(d, shift);
    RealVector benign_mean(d, 0.0);
    for (std::size_t i = bad; i < m; ++i) {
      for (auto& x : u.rows[i]) x = rng.next_gaussian();
      axpy(1.0, u.rows[i], benign_mean);
    }
    for (auto& x : benign_mean) x /= static_cast<double>(m - bad);

    const auto start = std::chrono::steady_clock::now();
    const RealVector estimate = apply_estimator(u, est);
    const std::chrono::duration<double, std::milli> elapsed =
        std::chrono::steady_clock::now() - start;
    cell.wall_ms += elapsed.count();
    cell.error += l2_distance(estimate, benign_mean);
  }
  cell.error /= static_cast<double>(trials);
  cell.wall_ms /= static_cast<double>(trials);
  return cell;
}

int cmd_estimator_bench(const EstimatorBenchOptions& opt) {
  const auto bad = static_cast<std::size_t>(
      std::llround(opt.epsilon * static_cast<double>(opt.m)));
  std::ofstream file;
  std::ostream& out = open_or_stdout(opt.out_path, file);
  out << "estimator,d,m,epsilon,trials,error,wall_ms\n";
  for (const auto& name : opt.estimators) {
    EstimatorConfig est;
    est.kind = parse_estimator_kind_name(name);
    est.krum_f = bad;
    est.filter.sigma = thresholds::kBenchFilterSigma;
    est.filter.eta = thresholds::kBenchFilterEta;
    est.filter.power_iters = thresholds::kBenchPowerIters;
    est.filter.spectral_mult = thresholds::kBenchFilterMult;
    est.filter.finite_sample_factor = thresholds::kBenchFiniteSample;
    est.filter.sections =
        est.kind == EstimatorKind::kFilterL2Sectioned ? opt.sections : 1;
    for (const std::size_t d : opt.dims) {
      const BenchCell cell = contaminated_gaussian_bench(
          est, d, opt.m, opt.epsilon, opt.shift, opt.trials, opt.seed);
      out << name << "," << d << "," << opt.m << "," << fmt(opt.epsilon) << ","
          << opt.trials << "," << fmt(cell.error) << ","
          << fmt(opt.timing ? cell.wall_ms : 0.0) << "\n";
    }
  }
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"sharded secure aggregation with robust mean estimation"};
  app.require_subcommand(1);

  SimulateOptions sim;
  CLI::App* sim_cmd =
      app.add_subcommand("simulate", "run one experiment, emit per-round CSV");
  sim_cmd->add_option("--config,-c", sim.config_path, "experiment config file")
      ->required();
  sim_cmd->add_option("--out,-o", sim.out_path, "output CSV (default stdout)");
  sim_cmd->add_option("--seed", sim.seed_override,
                      "seed override (beats config and FEDFENCE_SEED)");
  sim_cmd->add_flag("--timing", sim.timing, "emit real wall_ms values");
  sim_cmd->add_flag("--quiet,-q", sim.quiet,
                    "suppress the final-round summary on stderr");
  sim_cmd->footer(std::string("CSV header: ") + kMetricsCsvHeader);

  SweepOptions sweep;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "run a grid over one config key and seed list");
  sweep_cmd->add_option("--config,-c", sweep.config_path, "base config file")
      ->required();
  sweep_cmd
      ->add_option("--param", sweep.param,
                   "knob to vary: p, epsilon, sections, eta, or any full "
                   "schema key (epsilon sets the malicious count as a "
                   "fraction of n)")
      ->required();
  sweep_cmd->add_option("--values", sweep.values, "comma-separated values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--seeds", sweep.seeds, "comma-separated seeds")
      ->delimiter(',');
  sweep_cmd->add_option("--out,-o", sweep.out_path, "output CSV (default stdout)");
  sweep_cmd->add_flag("--timing", sweep.timing, "emit real wall_ms values");
  sweep_cmd->footer(std::string("CSV header: ") + kSweepCsvHeader);

  SecaggCheckOptions sc;
  CLI::App* sc_cmd = app.add_subcommand(
      "secagg-check", "mask cancellation and transcript uniformity self-test");
  sc_cmd->add_option("--n", sc.n, "clients per trial");
  sc_cmd->add_option("--p", sc.p, "shards per trial");
  sc_cmd->add_option("--d", sc.d, "coordinates per update");
  sc_cmd->add_option("--trials", sc.trials, "independent trials");
  sc_cmd->add_option("--seed", sc.seed, "seed");

  CltCheckOptions clt;
  CLI::App* clt_cmd = app.add_subcommand(
      "clt-check", "shard-mean moment report across shard sizes");
  clt_cmd->add_option("--config,-c", clt.config_path,
                      "config supplying heterogeneity and client count");
  clt_cmd->add_option("--shard-sizes", clt.shard_sizes, "comma-separated sizes")
      ->delimiter(',');
  clt_cmd->add_option("--trials", clt.trials, "independent reshardings");
  clt_cmd->add_option("--seed", clt.seed, "seed");
  clt_cmd->footer(
      "CSV header: shard_size,trials,mean,variance,predicted_variance,"
      "variance_ratio,skew,excess_kurtosis,status");

  EstimatorBenchOptions bench;
  CLI::App* bench_cmd = app.add_subcommand(
      "estimator-bench", "contaminated-Gaussian error/latency grid");
  bench_cmd->add_option("--dims", bench.dims, "comma-separated dimensions")
      ->delimiter(',');
  bench_cmd->add_option("--estimators", bench.estimators,
                        "comma-separated estimator names")
      ->delimiter(',');
  bench_cmd->add_option("--m", bench.m, "rows per trial");
  bench_cmd->add_option("--epsilon", bench.epsilon, "contaminated fraction");
  bench_cmd->add_option("--shift", bench.shift,
                        "per-coordinate offset of contaminated rows");
  bench_cmd->add_option("--trials", bench.trials, "trials per cell");
  bench_cmd->add_option("--sections", bench.sections,
                        "sections for filter_l2_sectioned");
  bench_cmd->add_option("--seed", bench.seed, "seed");
  bench_cmd->add_option("--out,-o", bench.out_path, "output CSV (default stdout)");
  bench_cmd->add_flag("--timing", bench.timing, "emit real wall_ms values");
  bench_cmd->footer("CSV header: estimator,d,m,epsilon,trials,error,wall_ms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim_cmd) return cmd_simulate(sim);
    if (*sweep_cmd) return cmd_sweep(sweep);
    if (*sc_cmd) return cmd_secagg_check(sc);
    if (*clt_cmd) return cmd_clt_check(clt);
    if (*bench_cmd) return cmd_estimator_bench(bench);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const EstimatorPreconditionError& e) {
    std::cerr << "estimator precondition: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace fedfence
