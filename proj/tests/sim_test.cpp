#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <vector>

#include "fedfence/sim.hpp"

using namespace fedfence;

namespace {

Dataset small_dataset(std::size_t n, std::size_t feature_dim,
                      std::size_t num_classes, SeededRng& rng) {
  Dataset d;
  d.feature_dim = feature_dim;
  d.num_classes = num_classes;
  for (std::size_t i = 0; i < n; ++i) {
    RealVector x(feature_dim);
    for (auto& v : x) v = rng.next_gaussian();
    d.features.push_back(x);
    d.labels.push_back(static_cast<u32>(rng.next_below(num_classes)));
  }
  return d;
}

RealVector random_model(std::size_t dim, SeededRng& rng, double scale = 0.3) {
  RealVector w(dim);
  for (auto& v : w) v = scale * rng.next_gaussian();
  return w;
}

TaskConfig silent_mean_task(std::size_t n, std::size_t dim = 64) {
  TaskConfig cfg;
  cfg.kind = TaskKind::kGaussianMean;
  cfg.num_clients = n;
  cfg.mean_dim = dim;
  cfg.hetero.components = 1;
  cfg.hetero.component_means = {0.0};
  cfg.hetero.component_sigmas = {0.0};
  return cfg;
}

}  // namespace

TEST_CASE("sim: analytic gradients match central differences") {
  SeededRng rng(201);
  const std::size_t fdim = 5, classes = 4;
  Dataset d = small_dataset(6, fdim, classes, rng);
  const std::size_t dim = classes * (fdim + 1);
  for (LossKind loss : {LossKind::kLogistic, LossKind::kSquared}) {
    RealVector w = random_model(dim, rng);
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
      RealVector grad(dim, 0.0);
      add_sample_gradient(w, d, idx, loss, 1.0, grad);
      const double eps = 1e-6;
      for (std::size_t j = 0; j < dim; ++j) {
        RealVector wp = w, wm = w;
        wp[j] += eps;
        wm[j] -= eps;
        double numeric =
            (sample_loss(wp, d, idx, loss) - sample_loss(wm, d, idx, loss)) /
            (2.0 * eps);
        double denom = std::max({std::fabs(numeric), std::fabs(grad[j]), 1e-3});
        CHECK(std::fabs(numeric - grad[j]) / denom < 1e-5);
      }
    }
  }
}

TEST_CASE("sim: gradient accumulation respects the coefficient") {
  SeededRng rng(203);
  Dataset d = small_dataset(3, 4, 3, rng);
  RealVector w = random_model(3 * 5, rng);
  RealVector g1(w.size(), 0.0), g2(w.size(), 0.0);
  add_sample_gradient(w, d, 0, LossKind::kLogistic, 1.0, g1);
  add_sample_gradient(w, d, 0, LossKind::kLogistic, 0.5, g2);
  add_sample_gradient(w, d, 0, LossKind::kLogistic, 0.5, g2);
  for (std::size_t j = 0; j < w.size(); ++j)
    CHECK(g2[j] == doctest::Approx(g1[j]).epsilon(1e-12));
}

TEST_CASE("sim: one squared-loss step from zero has a closed form") {
  // Single sample, batch 1, one step, w = 0: all logits are 0, so the only
  // nonzero error is -1 at the true class, and the update is lr * (x, 1)
  // in that class block.
  Dataset d;
  d.feature_dim = 3;
  d.num_classes = 2;
  d.features = {{0.5, -1.0, 2.0}};
  d.labels = {1};
  TrainOptions opts;
  opts.lr = 0.25;
  opts.batch = 1;
  opts.local_steps = 1;
  opts.loss = LossKind::kSquared;
  RealVector w0(2 * 4, 0.0);
  RealVector delta = local_train_on(d, w0, opts, SeededRng(5));
  CHECK(delta[0] == 0.0);  // class-0 block untouched
  CHECK(delta[1] == 0.0);
  CHECK(delta[2] == 0.0);
  CHECK(delta[3] == 0.0);
  CHECK(delta[4] == doctest::Approx(0.25 * 0.5));
  CHECK(delta[5] == doctest::Approx(0.25 * -1.0));
  CHECK(delta[6] == doctest::Approx(0.25 * 2.0));
  CHECK(delta[7] == doctest::Approx(0.25 * 1.0));  // bias
}

TEST_CASE("sim: zero learning rate gives the zero update") {
  SeededRng rng(205);
  Dataset d = small_dataset(10, 4, 3, rng);
  TrainOptions opts;
  opts.lr = 0.0;
  RealVector w0 = random_model(3 * 5, rng);
  RealVector delta = local_train_on(d, w0, opts, SeededRng(7));
  for (double v : delta) CHECK(v == 0.0);
}

TEST_CASE("sim: local training is deterministic in data and stream") {
  SeededRng rng(207);
  Dataset d = small_dataset(12, 4, 3, rng);
  TrainOptions opts;
  RealVector w0 = random_model(3 * 5, rng);
  RealVector a = local_train_on(d, w0, opts, SeededRng(9));
  RealVector b = local_train_on(d, w0, opts, SeededRng(9));
  RealVector c = local_train_on(d, w0, opts, SeededRng(10));
  CHECK(a == b);
  CHECK(a != c);
  CHECK_THROWS_AS(local_train_on(Dataset{}, {}, opts, SeededRng(1)),
                  std::invalid_argument);
}

TEST_CASE("sim: prediction and accuracy on a hand-built model") {
  // Two classes over one feature: class-1 score = x, class-0 score = 0,
  // ties resolve to the lower class.
  RealVector w = {0.0, 0.0, 1.0, 0.0};  // blocks (w, b) per class
  CHECK(predict_label(w, {2.0}, 2) == 1);
  CHECK(predict_label(w, {-2.0}, 2) == 0);
  CHECK(predict_label(w, {0.0}, 2) == 0);

  Dataset test;
  test.feature_dim = 1;
  test.num_classes = 2;
  test.features = {{1.0}, {-1.0}, {3.0}, {-3.0}};
  test.labels = {1, 0, 1, 1};
  CHECK(evaluate_accuracy(w, test) == doctest::Approx(0.75));
  CHECK_THROWS_AS(evaluate_accuracy({0.0, 0.0}, test), std::invalid_argument);
  Dataset empty;
  empty.num_classes = 2;
  empty.feature_dim = 1;
  CHECK_THROWS_AS(evaluate_accuracy(w, empty), std::invalid_argument);
}

TEST_CASE("sim: attack success rate counts triggered flips to the target") {
  // Three classes over two features (blocks of w0, w1, bias). Class-1
  // score = x0, others 0: the model predicts class 1 exactly when x0 > 0,
  // and the trigger stamps x0 = 5.
  RealVector w = {0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  TriggerSpec trig;
  trig.indices = {0};
  trig.value = 5.0;
  trig.target_label = 1;

  Dataset test;
  test.feature_dim = 2;
  test.num_classes = 3;
  test.features = {{-1.0, 0.0}, {-2.0, 1.0}, {1.0, 0.0}, {-3.0, 2.0}};
  test.labels = {0, 2, 1, 0};
  // Eligible: the three samples with label != 1. All get x0 = 5 -> class 1.
  CHECK(attack_success_rate(w, test, trig) == doctest::Approx(1.0));

  // A model that never predicts the target scores zero.
  RealVector never(9, 0.0);
  never[2] = 1000.0;  // huge class-0 bias
  CHECK(attack_success_rate(never, test, trig) == doctest::Approx(0.0));

  Dataset all_target;
  all_target.feature_dim = 2;
  all_target.num_classes = 3;
  all_target.features = {{0.0, 0.0}};
  all_target.labels = {1};
  CHECK_THROWS_AS(attack_success_rate(w, all_target, trig),
                  std::invalid_argument);
}

TEST_CASE("sim: mean-estimation clients draw from their component") {
  TaskConfig cfg;
  cfg.kind = TaskKind::kGaussianMean;
  cfg.num_clients = 4;
  cfg.mean_dim = 8;
  cfg.hetero.components = 2;
  cfg.hetero.component_means = {3.0, -1.0};
  cfg.hetero.component_sigmas = {0.0, 0.0};
  SeededRng rng(1);
  TrainTask task = build_task(cfg, rng);
  TrainOptions opts;
  RealVector w;
  for (ClientId c = 0; c < 4; ++c) {
    RealVector out = local_train(task, c, w, opts, SeededRng(3));
    double want = (c % 2 == 0) ? 3.0 : -1.0;
    for (double v : out) CHECK(v == want);
  }
  CHECK_THROWS_AS(local_train(task, 4, w, opts, SeededRng(3)),
                  std::invalid_argument);
}

TEST_CASE("sim: protocol run is bitwise deterministic") {
  TaskConfig tcfg;
  tcfg.kind = TaskKind::kSyntheticLogistic;
  tcfg.num_clients = 6;
  tcfg.feature_dim = 5;
  tcfg.num_classes = 3;
  tcfg.samples_per_client = 40;
  tcfg.test_samples = 150;

  ProtocolConfig cfg;
  cfg.n = 6;
  cfg.p = 3;
  cfg.rounds = 2;
  cfg.seed = 77;
  cfg.estimator.kind = EstimatorKind::kFilterL2;

  SeededRng ra(cfg.seed), rb(cfg.seed);
  TrainTask ta = build_task(tcfg, ra);
  TrainTask tb = build_task(tcfg, rb);
  ProtocolResult a = run_protocol(cfg, ta);
  ProtocolResult b = run_protocol(cfg, tb);
  CHECK(a.final_model == b.final_model);
  REQUIRE(a.rounds.size() == 2);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(a.rounds[r].accuracy == b.rounds[r].accuracy);
    CHECK(a.rounds[r].est_error == b.rounds[r].est_error);
    CHECK(a.rounds[r].lambda_max == b.rounds[r].lambda_max);
    CHECK(a.rounds[r].shard_weights == b.rounds[r].shard_weights);
  }
  // Filter estimators surface per-shard weights.
  CHECK(a.rounds[0].shard_weights.size() == cfg.p);
}

TEST_CASE("sim: model replacement through singleton shards is exact") {
  const std::size_t n = 16, dim = 64;
  TaskConfig tcfg = silent_mean_task(n, dim);
  SeededRng rng(1);
  TrainTask task = build_task(tcfg, rng);

  ProtocolConfig cfg;
  cfg.n = n;
  cfg.p = n;  // singleton shards: the estimator sees raw updates
  cfg.rounds = 2;
  cfg.estimator.kind = EstimatorKind::kAverage;
  cfg.attack.kind = AttackKind::kModelReplacement;
  cfg.attack.malicious = {0};
  cfg.attack.scale = static_cast<double>(n);
  cfg.attack.target_model = RealVector(dim, 0.25);

  ProtocolResult res = run_protocol(cfg, task);
  // Round 1 plants the target exactly (0.25 is on the fixed-point lattice
  // and every division is by a power of two); round 2 leaves it fixed.
  for (double v : res.final_model) CHECK(v == 0.25);
  CHECK(res.rounds[0].est_error ==
        doctest::Approx(0.25 * 8.0).epsilon(1e-12));  // ||target|| over d=64
  CHECK(res.rounds[1].est_error == doctest::Approx(0.0));
}

TEST_CASE("sim: sharding dilutes a bounded replacement attack as 1/n") {
  auto run_error = [](std::size_t n) {
    TaskConfig tcfg = silent_mean_task(n);
    SeededRng rng(1);
    TrainTask task = build_task(tcfg, rng);
    ProtocolConfig cfg;
    cfg.n = n;
    cfg.p = 5;
    cfg.rounds = 1;
    cfg.estimator.kind = EstimatorKind::kAverage;
    cfg.attack.kind = AttackKind::kModelReplacement;
    cfg.attack.malicious = {0};
    cfg.attack.scale = 16.0;  // fixed budget independent of n
    cfg.attack.target_model = RealVector(64, 0.25);
    return run_protocol(cfg, task).rounds[0].est_error;
  };
  double e10 = run_error(10);
  double e20 = run_error(20);
  double e40 = run_error(40);
  CHECK(e10 == doctest::Approx(32.0 / 10.0).epsilon(1e-9));
  CHECK(e20 == doctest::Approx(32.0 / 20.0).epsilon(1e-9));
  CHECK(e10 / e20 == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(e20 / e40 == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("sim: honest pipeline reproduces the benign mean to quantization") {
  TaskConfig tcfg;
  tcfg.kind = TaskKind::kGaussianMean;
  tcfg.num_clients = 24;
  tcfg.mean_dim = 64;
  SeededRng rng(1);
  TrainTask task = build_task(tcfg, rng);
  ProtocolConfig cfg;
  cfg.n = 24;
  cfg.p = 1;  // one shard holding everyone: estimate == quantized mean
  cfg.rounds = 1;
  cfg.estimator.kind = EstimatorKind::kAverage;
  ProtocolResult res = run_protocol(cfg, task);
  CHECK(res.rounds[0].est_error < 1e-6);
  CHECK(res.rounds[0].saturated_entries == 0);
}

TEST_CASE("sim: clamp saturation is surfaced in the metrics") {
  TaskConfig tcfg;
  tcfg.kind = TaskKind::kGaussianMean;
  tcfg.num_clients = 10;
  tcfg.mean_dim = 32;
  SeededRng rng(1);
  TrainTask task = build_task(tcfg, rng);
  ProtocolConfig cfg;
  cfg.n = 10;
  cfg.p = 2;
  cfg.rounds = 1;
  cfg.codec.clamp_abs = 0.01;  // nearly every N(0,1) coordinate saturates
  cfg.estimator.kind = EstimatorKind::kAverage;
  ProtocolResult res = run_protocol(cfg, task);
  CHECK(res.rounds[0].saturated_entries > 250);  // out of 320
}

TEST_CASE("sim: robust bound flag tracks 12 * malicious < p") {
  auto flag_for = [](std::size_t n, std::size_t p, std::size_t bad) {
    TaskConfig tcfg = silent_mean_task(n);
    SeededRng rng(1);
    TrainTask task = build_task(tcfg, rng);
    ProtocolConfig cfg;
    cfg.n = n;
    cfg.p = p;
    cfg.rounds = 1;
    cfg.estimator.kind = EstimatorKind::kAverage;
    if (bad > 0) {
      cfg.attack.kind = AttackKind::kDirectedDeviation;
      for (std::size_t i = 0; i < bad; ++i)
        cfg.attack.malicious.push_back(static_cast<ClientId>(i));
    }
    return run_protocol(cfg, task).rounds[0].robust_bound_ok;
  };
  CHECK(flag_for(30, 25, 2));         // 24 < 25
  CHECK_FALSE(flag_for(30, 24, 2));   // 24 < 24 fails
  CHECK(flag_for(30, 13, 1));         // 12 < 13
  CHECK_FALSE(flag_for(30, 12, 1));
}

TEST_CASE("sim: static sharding repeats the same plan every round") {
  // Silent two-component population: updates are the same every round, so
  // with a frozen plan the median-of-shard-means estimate must repeat
  // exactly; est_error is constant across rounds.
  TaskConfig tcfg;
  tcfg.kind = TaskKind::kGaussianMean;
  tcfg.num_clients = 4;
  tcfg.mean_dim = 16;
  tcfg.hetero.components = 2;
  tcfg.hetero.component_means = {0.0, 10.0};
  tcfg.hetero.component_sigmas = {0.0, 0.0};
  SeededRng rng(1);
  TrainTask task = build_task(tcfg, rng);
  ProtocolConfig cfg;
  cfg.n = 4;
  cfg.p = 2;
  cfg.rounds = 3;
  cfg.reshard_every_round = false;
  cfg.estimator.kind = EstimatorKind::kCoordinateMedian;
  ProtocolResult res = run_protocol(cfg, task);
  CHECK(res.rounds[1].est_error == res.rounds[0].est_error);
  CHECK(res.rounds[2].est_error == res.rounds[0].est_error);
}

TEST_CASE("sim: independent-start ablation changes round one deterministically") {
  TaskConfig tcfg;
  tcfg.kind = TaskKind::kSyntheticLogistic;
  tcfg.num_clients = 5;
  tcfg.feature_dim = 4;
  tcfg.num_classes = 3;
  tcfg.samples_per_client = 30;
  tcfg.test_samples = 100;

  ProtocolConfig cfg;
  cfg.n = 5;
  cfg.p = 5;
  cfg.rounds = 1;
  cfg.seed = 11;
  cfg.estimator.kind = EstimatorKind::kAverage;

  SeededRng r1(cfg.seed);
  TrainTask task1 = build_task(tcfg, r1);
  ProtocolResult shared = run_protocol(cfg, task1);

  cfg.shared_init = false;
  SeededRng r2(cfg.seed);
  TrainTask task2 = build_task(tcfg, r2);
  ProtocolResult jittered = run_protocol(cfg, task2);
  CHECK(shared.final_model != jittered.final_model);

  SeededRng r3(cfg.seed);
  TrainTask task3 = build_task(tcfg, r3);
  ProtocolResult again = run_protocol(cfg, task3);
  CHECK(jittered.final_model == again.final_model);
}

TEST_CASE("sim: estimator arity is rejected before any round runs") {
  TaskConfig tcfg = silent_mean_task(12);
  SeededRng rng(1);
  TrainTask task = build_task(tcfg, rng);
  ProtocolConfig cfg;
  cfg.n = 12;
  cfg.p = 5;
  cfg.rounds = 1;

  cfg.estimator.kind = EstimatorKind::kKrum;
  cfg.estimator.krum_f = 2;  // needs p >= 7
  CHECK_THROWS_AS(run_protocol(cfg, task), EstimatorPreconditionError);

  cfg.estimator.kind = EstimatorKind::kBulyan;
  cfg.estimator.krum_f = 1;  // needs p >= 7
  CHECK_THROWS_AS(run_protocol(cfg, task), EstimatorPreconditionError);

  cfg.estimator.kind = EstimatorKind::kFilterL2Sectioned;
  cfg.estimator.filter.sections = 100;  // d = 64
  CHECK_THROWS_AS(run_protocol(cfg, task), EstimatorPreconditionError);

  cfg.estimator.filter.sections = 1;
  cfg.estimator.filter.eta = 0;
  CHECK_THROWS_AS(run_protocol(cfg, task), EstimatorPreconditionError);
}

TEST_CASE("sim: protocol validation") {
  TaskConfig tcfg = silent_mean_task(5);
  SeededRng rng(1);
  TrainTask task = build_task(tcfg, rng);

  ProtocolConfig cfg;
  cfg.n = 5;
  cfg.p = 6;
  CHECK_THROWS_AS(run_protocol(cfg, task), std::invalid_argument);
  cfg.p = 2;
  cfg.rounds = 0;
  CHECK_THROWS_AS(run_protocol(cfg, task), std::invalid_argument);
  cfg.rounds = 1;
  cfg.n = 6;  // task was built for 5 clients
  CHECK_THROWS_AS(run_protocol(cfg, task), std::invalid_argument);

  cfg.n = 5;
  cfg.attack.kind = AttackKind::kPoisoning;
  cfg.attack.malicious = {0};
  cfg.attack.trigger = TriggerSpec{{0}, 4.0, 0};
  // Data poisoning cannot run against a task without features.
  CHECK_THROWS_AS(run_protocol(cfg, task), std::invalid_argument);

  cfg.attack.kind = AttackKind::kDirectedDeviation;
  cfg.attack.trigger.reset();
  cfg.attack.malicious = {0, 1, 2, 3, 4};  // nobody left to defend
  CHECK_THROWS_AS(run_protocol(cfg, task), std::invalid_argument);
}

TEST_CASE("sim: shard mean samples have the predicted first two moments") {
  HeterogeneitySpec spec;  // one standard component
  auto samples = clt_shard_mean_samples(spec, 100, 50, 600, 3);
  CHECK(samples.size() == 600);
  auto rep = clt_check(samples, spec, 50);
  CHECK(rep.sigma_bar_sq == doctest::Approx(1.0));
  CHECK(rep.sigma_env_sq == doctest::Approx(0.0));
  CHECK(rep.predicted_variance == doctest::Approx(0.02));
  CHECK(std::fabs(rep.moments.mean) < 0.03);
  CHECK(rep.variance_ratio > 0.8);
  CHECK(rep.variance_ratio < 1.2);

  // Determinism and seed sensitivity.
  auto again = clt_shard_mean_samples(spec, 100, 50, 600, 3);
  CHECK(samples == again);
  auto other = clt_shard_mean_samples(spec, 100, 50, 600, 4);
  CHECK(samples != other);
}

TEST_CASE("sim: singleton shards leak the component spread") {
  // Two components at -1 and +1 over 100 clients. Shards of size s draw a
  // hypergeometric component mix, so the shard-mean variance exceeds the
  // within-component prediction sigma_bar^2/s by the factor
  //   1 + (N - s)/(N - 1) * sigma_env^2 / sigma_bar^2,
  // here 2.0 at s=1, 1.505 at s=50, and 1.0 at s=100 (the composition is
  // pinned once the shard swallows the whole population).
  HeterogeneitySpec spec;
  spec.components = 2;
  spec.component_means = {-1.0, 1.0};
  spec.component_sigmas = {1.0, 1.0};

  auto singles = clt_shard_mean_samples(spec, 100, 1, 800, 5);
  auto rep1 = clt_check(singles, spec, 1);
  CHECK(rep1.sigma_env_sq == doctest::Approx(1.0));
  CHECK(rep1.variance_ratio == doctest::Approx(2.0).epsilon(0.15));

  auto mixed = clt_shard_mean_samples(spec, 100, 50, 800, 5);
  auto rep50 = clt_check(mixed, spec, 50);
  CHECK(rep50.variance_ratio == doctest::Approx(1.0 + 50.0 / 99.0).epsilon(0.15));

  auto whole = clt_shard_mean_samples(spec, 100, 100, 800, 5);
  auto rep100 = clt_check(whole, spec, 100);
  CHECK(rep100.variance_ratio == doctest::Approx(1.0).epsilon(0.15));

  CHECK(rep1.variance_ratio > rep50.variance_ratio);
  CHECK(rep50.variance_ratio > rep100.variance_ratio);
}

TEST_CASE("sim: shard mean sampler validates its shape") {
  HeterogeneitySpec spec;
  CHECK_THROWS_AS(clt_shard_mean_samples(spec, 100, 3, 10, 1),
                  std::invalid_argument);  // 3 does not divide 100
  CHECK_THROWS_AS(clt_shard_mean_samples(spec, 0, 1, 10, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(clt_shard_mean_samples(spec, 100, 0, 10, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(clt_check({1.0}, spec, 1), std::invalid_argument);
  CHECK_THROWS_AS(clt_check({1.0, 2.0}, spec, 0), std::invalid_argument);
}
