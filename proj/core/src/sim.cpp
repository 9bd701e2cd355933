#include "fedfence/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

namespace fedfence {

namespace {

std::size_t block_size(const Dataset& d) { return d.feature_dim + 1; }

void check_model(const RealVector& w, const Dataset& d) {
  if (w.size() != d.num_classes * block_size(d))
    throw std::invalid_argument("model: dimension mismatch with dataset");
}

void logits_of(const RealVector& w, const RealVector& x,
               std::vector<double>& out) {
  const std::size_t bs = x.size() + 1;
  out.resize(w.size() / bs);
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double* wc = w.data() + c * bs;
    double s = wc[x.size()];  // bias
    for (std::size_t j = 0; j < x.size(); ++j) s += wc[j] * x[j];
    out[c] = s;
  }
}

}  // namespace

double sample_loss(const RealVector& w, const Dataset& d, std::size_t idx,
                   LossKind loss) {
  check_model(w, d);
  std::vector<double> z;
  logits_of(w, d.features[idx], z);
  const u32 y = d.labels[idx];
  if (loss == LossKind::kSquared) {
    // One-vs-all squared error, 1/2 ||z - e_y||^2.
    double s = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      double e = z[c] - (c == y ? 1.0 : 0.0);
      s += e * e;
    }
    return 0.5 * s;
  }
  // Cross entropy with the usual max-shift for stability.
  double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return std::log(sum) - (z[y] - m);
}

void add_sample_gradient(const RealVector& w, const Dataset& d,
                         std::size_t idx, LossKind loss, double coeff,
                         RealVector& grad) {
  check_model(w, d);
  if (grad.size() != w.size())
    throw std::invalid_argument("add_sample_gradient: grad size mismatch");
  const RealVector& x = d.features[idx];
  const std::size_t bs = x.size() + 1;
  std::vector<double> z;
  logits_of(w, x, z);
  const u32 y = d.labels[idx];
  if (loss == LossKind::kLogistic) {
    double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
      v = std::exp(v - m);
      sum += v;
    }
    for (double& v : z) v /= sum;  // softmax probabilities
  }
  for (std::size_t c = 0; c < z.size(); ++c) {
    double err = z[c] - (c == y ? 1.0 : 0.0);
    if (err == 0.0) continue;
    double* gc = grad.data() + c * bs;
    double a = coeff * err;
    for (std::size_t j = 0; j < x.size(); ++j) gc[j] += a * x[j];
    gc[x.size()] += a;
  }
}

u32 predict_label(const RealVector& w, const RealVector& x,
                  std::size_t num_classes) {
  const std::size_t bs = x.size() + 1;
  if (w.size() != num_classes * bs)
    throw std::invalid_argument("predict_label: dimension mismatch");
  u32 best = 0;
  double best_v = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double* wc = w.data() + c * bs;
    double s = wc[x.size()];
    for (std::size_t j = 0; j < x.size(); ++j) s += wc[j] * x[j];
    if (c == 0 || s > best_v) {
      best_v = s;
      best = static_cast<u32>(c);
    }
  }
  return best;
}

double evaluate_accuracy(const RealVector& w, const Dataset& test) {
  test.validate();
  if (test.size() == 0)
    throw std::invalid_argument("evaluate_accuracy: empty test set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predict_label(w, test.features[i], test.num_classes) == test.labels[i])
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

double attack_success_rate(const RealVector& w, const Dataset& test,
                           const TriggerSpec& trigger) {
  test.validate();
  trigger.validate(test.feature_dim, test.num_classes);
  std::size_t eligible = 0, hits = 0;
  RealVector x;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test.labels[i] == trigger.target_label) continue;
    ++eligible;
    x = test.features[i];
    for (u32 idx : trigger.indices) x[idx] = trigger.value;
    if (predict_label(w, x, test.num_classes) == trigger.target_label) ++hits;
  }
  if (eligible == 0)
    throw std::invalid_argument(
        "attack_success_rate: no test sample outside the target class");
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

RealVector local_train_on(const Dataset& data, const RealVector& w_global,
                          const TrainOptions& opts, SeededRng rng) {
  data.validate();
  if (data.size() == 0)
    throw std::invalid_argument("local_train_on: empty dataset");
  check_model(w_global, data);
  RealVector w = w_global;
  RealVector grad(w.size());
  const std::size_t batch = std::max<std::size_t>(1, opts.batch);
  for (std::size_t step = 0; step < opts.local_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t b = 0; b < batch; ++b) {
      std::size_t idx = static_cast<std::size_t>(rng.next_below(data.size()));
      add_sample_gradient(w, data, idx, opts.loss,
                          1.0 / static_cast<double>(batch), grad);
    }
    if (opts.lr != 0.0) axpy(-opts.lr, grad, w);
  }
  RealVector delta(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) delta[i] = w[i] - w_global[i];
  return delta;
}

RealVector local_train(const TrainTask& task, ClientId client,
                       const RealVector& w_global, const TrainOptions& opts,
                       SeededRng rng) {
  if (client >= task.cfg.num_clients)
    throw std::invalid_argument("local_train: client out of range");
  if (task.cfg.kind == TaskKind::kGaussianMean) {
    const auto& h = task.cfg.hetero;
    const u32 comp = task.client_component.at(client);
    const double mu = h.component_mean(comp);
    const double sd = h.component_sigma(comp);
    RealVector out(task.cfg.mean_dim);
    for (auto& v : out) v = mu + sd * rng.next_gaussian();
    return out;
  }
  return local_train_on(task.client_data.at(client), w_global, opts, rng);
}

RealVector apply_estimator(const UpdateSet& updates, const EstimatorConfig& cfg,
                           FilterDiagnostics* diag) {
  switch (cfg.kind) {
    case EstimatorKind::kAverage:
      return average(updates);
    case EstimatorKind::kCoordinateMedian:
      return coordinate_median(updates);
    case EstimatorKind::kTrimmedMean:
      return trimmed_mean(updates, cfg.trim);
    case EstimatorKind::kKrum:
      return krum(updates, cfg.krum_f);
    case EstimatorKind::kBulyan:
      return bulyan(updates, cfg.krum_f, cfg.bulyan_inner);
    case EstimatorKind::kFilterL2:
      return filter_l2(updates, cfg.filter, diag);
    case EstimatorKind::kFilterL2Sectioned:
      return filter_l2_sectioned(updates, cfg.filter, diag);
  }
  throw std::invalid_argument("apply_estimator: unknown estimator");
}

void ProtocolConfig::validate() const {
  if (n == 0 || p == 0 || p > n)
    throw std::invalid_argument("ProtocolConfig: need 1 <= p <= n");
  if (rounds == 0)
    throw std::invalid_argument("ProtocolConfig: need >= 1 round");
  codec.validate((n + p - 1) / p + 1);  // headroom for the largest shard
  attack.validate(n);
}

namespace {

// Shard count and model dimension fix the estimator's input shape, so
// arity failures are detectable before any round runs.
void check_estimator_arity(const EstimatorConfig& est, std::size_t p,
                           std::size_t d) {
  switch (est.kind) {
    case EstimatorKind::kAverage:
    case EstimatorKind::kCoordinateMedian:
      return;
    case EstimatorKind::kTrimmedMean: {
      if (!(est.trim.beta >= 0.0) || est.trim.beta >= 0.5)
        throw EstimatorPreconditionError(
            "trimmed_mean: beta must be in [0, 0.5)");
      const auto cut =
          static_cast<std::size_t>(est.trim.beta * static_cast<double>(p));
      if (p <= 2 * cut)
        throw EstimatorPreconditionError(
            "trimmed_mean: nothing survives the trim at this shard count");
      return;
    }
    case EstimatorKind::kKrum:
      if (p < 2 * est.krum_f + 3)
        throw EstimatorPreconditionError(
            "krum: shard count below 2f + 3");
      return;
    case EstimatorKind::kBulyan:
      if (p < 4 * est.krum_f + 3)
        throw EstimatorPreconditionError(
            "bulyan: shard count below 4f + 3");
      return;
    case EstimatorKind::kFilterL2:
    case EstimatorKind::kFilterL2Sectioned:
      if (est.filter.eta == 0)
        throw EstimatorPreconditionError("filter_l2: eta must be positive");
      if (est.kind == EstimatorKind::kFilterL2Sectioned) {
        if (est.filter.sections == 0)
          throw EstimatorPreconditionError(
              "filter_l2_sectioned: sections must be positive");
        if (est.filter.sections > d)
          throw EstimatorPreconditionError(
              "filter_l2_sectioned: sections exceeds the model dimension");
      }
      return;
  }
  throw std::invalid_argument("check_estimator_arity: unknown estimator");
}

struct AttackContext {
  const ProtocolConfig& cfg;
  const TrainTask& task;
  const RealVector& w;
  const std::vector<RealVector>& honest;  // per-client honest deltas
  const RealVector& benign_mean;
  u64 round;
  SeededRng root;
};

RealVector malicious_update(const AttackContext& ctx, ClientId c,
                            std::size_t rank) {
  const AttackSpec& atk = ctx.cfg.attack;
  SeededRng rng = ctx.root.derive({stream::kAttack, ctx.round, c});
  switch (atk.kind) {
    case AttackKind::kNone:
      return ctx.honest[c];
    case AttackKind::kModelReplacement: {
      if (atk.target_model) {
        return model_replacement_update(ctx.w, *atk.target_model, atk.scale);
      }
      // Backdoored replacement: the target is this client's model after
      // training on its poisoned data.
      Dataset poisoned = poison_dataset(ctx.task.client_data.at(c),
                                        *atk.trigger, atk.poison_fraction, rng);
      RealVector delta = local_train_on(poisoned, ctx.w, ctx.cfg.train, rng);
      return scaled(delta, atk.scale);
    }
    case AttackKind::kPoisoning: {
      Dataset poisoned = poison_dataset(ctx.task.client_data.at(c),
                                        *atk.trigger, atk.poison_fraction, rng);
      RealVector delta = local_train_on(poisoned, ctx.w, ctx.cfg.train, rng);
      double clamp = atk.stealth_clamp > 0.0
                         ? atk.stealth_clamp * l2_norm(ctx.honest[c])
                         : 0.0;
      return boosted_poison_update(delta, atk.scale, clamp);
    }
    case AttackKind::kDirectedDeviation: {
      const RealVector& estimate =
          atk.collusion ? ctx.benign_mean : ctx.honest[c];
      RealVector out = directed_deviation_update(estimate, atk.scale);
      if (atk.jitter > 0.0) {
        for (auto& v : out) v += atk.jitter * rng.next_gaussian();
      }
      return out;
    }
    case AttackKind::kDistributedBackdoor: {
      TriggerSpec slice = trigger_slice(*atk.trigger, rank, atk.malicious.size());
      Dataset poisoned = poison_dataset(ctx.task.client_data.at(c), slice,
                                        atk.poison_fraction, rng);
      RealVector delta = local_train_on(poisoned, ctx.w, ctx.cfg.train, rng);
      double clamp = atk.stealth_clamp > 0.0
                         ? atk.stealth_clamp * l2_norm(ctx.honest[c])
                         : 0.0;
      return boosted_poison_update(delta, atk.scale, clamp);
    }
  }
  throw std::invalid_argument("malicious_update: unknown attack");
}

}  // namespace

ProtocolResult run_protocol(const ProtocolConfig& cfg, const TrainTask& task) {
  cfg.validate();
  if (task.cfg.num_clients != cfg.n)
    throw std::invalid_argument("run_protocol: task has wrong client count");
  const bool features = task.has_features();
  if (!features) {
    const AttackKind k = cfg.attack.kind;
    const bool needs_data =
        k == AttackKind::kPoisoning || k == AttackKind::kDistributedBackdoor ||
        (k == AttackKind::kModelReplacement && !cfg.attack.target_model);
    if (k != AttackKind::kNone && needs_data)
      throw std::invalid_argument(
          "run_protocol: data-poisoning attacks need a feature task");
  }
  if (cfg.attack.trigger && features)
    cfg.attack.trigger->validate(task.test_set.feature_dim,
                                 task.test_set.num_classes);

  const std::size_t d = task.model_dim();
  const std::size_t n = cfg.n;
  check_estimator_arity(cfg.estimator, cfg.p, d);
  SeededRng root(cfg.seed);

  ProtocolResult result;
  RealVector w(d, 0.0);
  ShardPlan static_plan;
  const bool filter_kind = cfg.estimator.kind == EstimatorKind::kFilterL2 ||
                           cfg.estimator.kind == EstimatorKind::kFilterL2Sectioned;

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    auto t0 = std::chrono::steady_clock::now();

    // Honest deltas for everyone; malicious substitutions never perturb
    // the benign streams.
    const bool jitter_init =
        !cfg.shared_init && round == 1 && task.cfg.kind != TaskKind::kGaussianMean;
    std::vector<RealVector> honest(n);
    for (ClientId c = 0; c < n; ++c) {
      SeededRng trng = root.derive({stream::kLocalTrain, round, c});
      if (jitter_init) {
        // Each client trains from its own starting point but still
        // reports the delta against the broadcast model, so the offset
        // shows up in the aggregate.
        RealVector start = w;
        SeededRng irng = root.derive({stream::kInit, c});
        for (auto& v : start) v += 0.1 * irng.next_gaussian();
        honest[c] = local_train(task, c, start, cfg.train, trng);
        for (std::size_t i = 0; i < d; ++i) honest[c][i] += start[i] - w[i];
      } else {
        honest[c] = local_train(task, c, w, cfg.train, trng);
      }
    }
    RealVector benign_mean(d, 0.0);
    std::size_t benign_count = 0;
    for (ClientId c = 0; c < n; ++c) {
      if (cfg.attack.is_malicious(c)) continue;
      axpy(1.0, honest[c], benign_mean);
      ++benign_count;
    }
    if (benign_count == 0)
      throw std::invalid_argument("run_protocol: no benign clients");
    for (auto& v : benign_mean) v /= static_cast<double>(benign_count);

    std::vector<RealVector> updates = honest;
    if (cfg.attack.kind != AttackKind::kNone) {
      AttackContext ctx{cfg, task, w, honest, benign_mean, round, root};
      for (std::size_t rank = 0; rank < cfg.attack.malicious.size(); ++rank) {
        ClientId c = cfg.attack.malicious[rank];
        updates[c] = malicious_update(ctx, c, rank);
      }
    }

    ShardPlan plan;
    if (cfg.reshard_every_round || round == 1) {
      SeededRng prng = root.derive({stream::kPartition, round});
      plan = partition_shards(n, cfg.p, prng);
      if (!cfg.reshard_every_round) static_plan = plan;
    } else {
      plan = static_plan;
    }

    SeededRng mrng = root.derive({stream::kMasks, round});
    MaskTable table = generate_masks(plan, d, mrng);
    EncodeStats enc_stats;
    ServerTranscript transcript;
    transcript.n = n;
    transcript.d = d;
    transcript.round = round;
    transcript.plan = plan;
    transcript.masked.resize(n);
    for (ClientId c = 0; c < n; ++c)
      transcript.masked[c] =
          mask_update(updates[c], c, table, cfg.codec, &enc_stats);

    std::vector<RealVector> shard_means =
        aggregate_all_shards(transcript, cfg.codec);

    UpdateSet input;
    input.rows = std::move(shard_means);
    FilterDiagnostics diag;
    RealVector estimate =
        apply_estimator(input, cfg.estimator, filter_kind ? &diag : nullptr);
    axpy(1.0, estimate, w);

    auto t1 = std::chrono::steady_clock::now();

    RoundMetrics m;
    m.round = round;
    m.est_error = l2_distance(estimate, benign_mean);
    m.robust_bound_ok = 12 * cfg.attack.malicious.size() < cfg.p;
    m.saturated_entries = enc_stats.clamped;
    m.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (features) m.accuracy = evaluate_accuracy(w, task.test_set);
    if (features && cfg.attack.trigger &&
        cfg.attack.kind != AttackKind::kNone &&
        cfg.attack.kind != AttackKind::kDirectedDeviation) {
      m.asr = attack_success_rate(w, task.test_set, *cfg.attack.trigger);
    }
    if (filter_kind) {
      m.lambda_max = diag.lambda_max();
      m.shard_weights = diag.row_weights();
    }
    result.rounds.push_back(std::move(m));
  }
  result.final_model = std::move(w);
  return result;
}

std::vector<double> clt_shard_mean_samples(const HeterogeneitySpec& spec,
                                           std::size_t n,
                                           std::size_t shard_size,
                                           std::size_t trials, u64 seed) {
  spec.validate();
  if (shard_size == 0 || n == 0 || n % shard_size != 0)
    throw std::invalid_argument("clt_shard_mean_samples: shard_size must divide n");
  const std::size_t p = n / shard_size;
  SeededRng root(seed);
  std::vector<double> values(n);
  std::vector<double> samples;
  samples.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng draw = root.derive({stream::kClientData, t});
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t c = i % spec.components;
      values[i] =
          spec.component_mean(c) + spec.component_sigma(c) * draw.next_gaussian();
    }
    SeededRng prng = root.derive({stream::kPartition, t});
    ShardPlan plan = partition_shards(n, p, prng);
    double s = 0.0;
    for (ClientId c : plan.shards[0]) s += values[c];
    samples.push_back(s / static_cast<double>(plan.shards[0].size()));
  }
  return samples;
}

CltReport clt_check(const std::vector<double>& shard_means,
                    const HeterogeneitySpec& spec, std::size_t shard_size) {
  if (shard_size == 0)
    throw std::invalid_argument("clt_check: shard_size must be positive");
  CltReport r;
  r.moments = summarize_moments(shard_means);  // throws below 2 samples
  r.sigma_bar_sq = spec.mean_component_variance();
  r.sigma_env_sq = spec.component_mean_variance();
  r.predicted_variance = r.sigma_bar_sq / static_cast<double>(shard_size);
  r.variance_ratio = r.predicted_variance > 0.0
                         ? r.moments.variance / r.predicted_variance
                         : 0.0;
  return r;
}

}  // namespace fedfence
