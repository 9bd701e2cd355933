#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fedfence/config.hpp"

namespace fedfence {

// Column order is a compatibility contract; wall_ms prints as 0 unless
// timing is requested, so equal seeds give byte-identical files.
inline constexpr const char* kMetricsCsvHeader =
    "round,accuracy,asr,est_error,lambda_max,wall_ms,robust_bound_ok";

inline constexpr const char* kSweepCsvHeader =
    "param,value,seed,regime,round,accuracy,asr,est_error,lambda_max,wall_ms,"
    "robust_bound_ok";

// "zero_privacy" when every shard is a single client (p == n),
// "single_shard" when all clients share one shard (p == 1), else "sharded".
std::string regime_label(std::size_t n, std::size_t p);

// Builds the task for cfg and runs the protocol. Materializes a constant
// replacement target (attack.target_const) once the model dim is known.
ProtocolResult simulate_experiment(const ExperimentConfig& cfg);

void write_metrics_csv(std::ostream& out, const std::vector<RoundMetrics>& rounds,
                       bool timing);

struct SimulateOptions {
  std::string config_path;
  std::string out_path;              // empty: stdout
  std::optional<u64> seed_override;  // --seed > config seed > FEDFENCE_SEED > 1
  bool timing = false;               // forces real wall_ms even if config says 0
  bool quiet = false;                // suppress the final-round stderr summary
};
int cmd_simulate(const SimulateOptions& opt);

struct SweepOptions {
  std::string config_path;
  // Short names p, epsilon, sections, eta, or any full schema key;
  // attack.epsilon is a pseudo-key (malicious count as a fraction of n).
  std::string param;
  std::vector<std::string> values;
  std::vector<u64> seeds;            // empty: the config's resolved seed
  std::string out_path;
  bool timing = false;
};
int cmd_sweep(const SweepOptions& opt);

// Mask-cancellation and transcript-uniformity self-test on random inputs.
struct SecaggCheckOptions {
  std::size_t n = 100;
  std::size_t p = 25;
  std::size_t d = 64;
  std::size_t trials = 20;
  u64 seed = 1;
};

struct SecaggCheckReport {
  std::size_t shards_checked = 0;
  std::size_t coords_checked = 0;
  // (trial, shard) of the first shard whose masked sum failed to match the
  // plaintext encoded sum exactly.
  std::optional<std::pair<std::size_t, ShardId>> first_bad;
  ChiSquareResult uniformity;
  bool uniformity_ok = false;

  bool pass() const { return !first_bad && uniformity_ok; }
};

SecaggCheckReport run_secagg_check(const SecaggCheckOptions& opt);
int cmd_secagg_check(const SecaggCheckOptions& opt);

// Shard-mean normality report over a list of shard sizes.
struct CltCheckOptions {
  std::string config_path;  // optional; hetero + n come from it when given
  std::vector<std::size_t> shard_sizes = {1, 50};
  std::size_t trials = 1000;
  u64 seed = 1;
};
int cmd_clt_check(const CltCheckOptions& opt);

// Contaminated-Gaussian estimator benchmark: (1 - epsilon) of the rows are
// N(0, I), the rest sit exactly at shift * ones(d). Error is the L2
// distance to the benign rows' sample mean, averaged over trials; wall_ms
// is the mean time of the estimator call alone.
struct BenchCell {
  double error = 0.0;
  double wall_ms = 0.0;
};
BenchCell contaminated_gaussian_bench(const EstimatorConfig& est, std::size_t d,
                                      std::size_t m, double epsilon,
                                      double shift, std::size_t trials,
                                      u64 seed);

struct EstimatorBenchOptions {
  std::vector<std::size_t> dims = {16, 256, 1024};
  std::vector<std::string> estimators = {"average", "filter_l2"};
  std::size_t m = 200;
  double epsilon = 0.1;
  double shift = 0.5;
  std::size_t trials = 8;
  std::size_t sections = 32;  // for filter_l2_sectioned
  u64 seed = 1;
  std::string out_path;
  bool timing = false;
};
int cmd_estimator_bench(const EstimatorBenchOptions& opt);

// Full argv entry point; maps ConfigError to 2 and estimator precondition
// violations to 3. Other failures exit 1.
int run_cli(int argc, const char* const* argv);

}  // namespace fedfence
