#pragma once

#include <vector>

#include "fedfence/attacks.hpp"
#include "fedfence/codec.hpp"
#include "fedfence/data.hpp"
#include "fedfence/estimators.hpp"
#include "fedfence/secure_agg.hpp"
#include "fedfence/stats.hpp"

namespace fedfence {

enum class LossKind { kLogistic, kSquared };

// Multiclass linear model, flattened row-major as C blocks of
// (feature_dim + 1) weights; the last entry of each block is the bias.
double sample_loss(const RealVector& w, const Dataset& d, std::size_t idx,
                   LossKind loss);
// grad += coeff * d(loss)/dw at one sample.
void add_sample_gradient(const RealVector& w, const Dataset& d,
                         std::size_t idx, LossKind loss, double coeff,
                         RealVector& grad);
u32 predict_label(const RealVector& w, const RealVector& x,
                  std::size_t num_classes);

double evaluate_accuracy(const RealVector& w, const Dataset& test);

// Fraction of triggered test samples (true label != target) classified as
// the trigger's target. Throws if no sample is eligible.
double attack_success_rate(const RealVector& w, const Dataset& test,
                           const TriggerSpec& trigger);

struct TrainOptions {
  double lr = 0.1;
  std::size_t batch = 32;
  std::size_t local_steps = 5;
  LossKind loss = LossKind::kLogistic;
};

// Returns the local delta w_local - w_global. Mean-estimation tasks
// return a raw draw from the client's component; training tasks run
// local_steps of minibatch SGD (lr = 0 gives the zero update).
RealVector local_train(const TrainTask& task, ClientId client,
                       const RealVector& w_global, const TrainOptions& opts,
                       SeededRng rng);
// Same, but against an explicit dataset (used for poisoned copies).
RealVector local_train_on(const Dataset& data, const RealVector& w_global,
                          const TrainOptions& opts, SeededRng rng);

enum class EstimatorKind {
  kAverage,
  kCoordinateMedian,
  kTrimmedMean,
  kKrum,
  kBulyan,
  kFilterL2,
  kFilterL2Sectioned
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::kFilterL2;
  TrimConfig trim;
  std::size_t krum_f = 0;
  BulyanInner bulyan_inner = BulyanInner::kKrum;
  FilterConfig filter;
};

RealVector apply_estimator(const UpdateSet& updates, const EstimatorConfig& cfg,
                           FilterDiagnostics* diag = nullptr);

struct ProtocolConfig {
  std::size_t n = 0;
  std::size_t p = 1;
  std::size_t rounds = 1;
  TrainOptions train;
  FixedPointParams codec;
  EstimatorConfig estimator;
  AttackSpec attack;
  bool reshard_every_round = true;  // static shards when false (ablation)
  // All clients start local training from the broadcast model. Turning
  // this off (ablation) gives every client an independent starting
  // perturbation in round 1, so the reported deltas stop being
  // identically distributed even on identical data.
  bool shared_init = true;
  u64 seed = 1;

  void validate() const;
};

struct RoundMetrics {
  std::size_t round = 0;
  double accuracy = 0.0;  // 0 for tasks without a test set
  double asr = 0.0;       // 0 without a trigger
  double est_error = 0.0; // distance to the benign plaintext mean
  double lambda_max = 0.0;
  double wall_ms = 0.0;
  bool robust_bound_ok = false;  // 12 * |malicious| < p
  std::vector<double> shard_weights;  // filter weights; empty otherwise
  std::size_t saturated_entries = 0;
};

struct ProtocolResult {
  std::vector<RoundMetrics> rounds;
  RealVector final_model;
};

// Runs the full loop: shard, locally train (attacks substituted), mask,
// aggregate per shard, estimate, and apply w_t = w_{t-1} + g_t. Benign
// clients use streams keyed only by (seed, round, client), so their
// updates are identical with the attack on or off.
ProtocolResult run_protocol(const ProtocolConfig& cfg, const TrainTask& task);

// Shard-mean samples for the normality harness: a fixed balanced
// component assignment (client i gets component i mod k), one fresh
// resharding per trial, the first shard's mean recorded. shard_size must
// divide n.
std::vector<double> clt_shard_mean_samples(const HeterogeneitySpec& spec,
                                           std::size_t n,
                                           std::size_t shard_size,
                                           std::size_t trials, u64 seed);

struct CltReport {
  MomentSummary moments;
  double sigma_bar_sq = 0.0;     // average in-component variance
  double sigma_env_sq = 0.0;     // variance of component means
  double predicted_variance = 0.0;  // sigma_bar_sq / shard_size
  double variance_ratio = 0.0;      // empirical / predicted
};

// Requires >= 2 samples (throws otherwise).
CltReport clt_check(const std::vector<double>& shard_means,
                    const HeterogeneitySpec& spec, std::size_t shard_size);

}  // namespace fedfence
