#pragma once

#include <optional>
#include <vector>

#include "fedfence/data.hpp"
#include "fedfence/rng.hpp"
#include "fedfence/types.hpp"

namespace fedfence {

enum class AttackKind {
  kNone,
  kModelReplacement,
  kPoisoning,           // boosted backdoor poisoning
  kDirectedDeviation,   // sign-flip push against the benign direction
  kDistributedBackdoor  // trigger split across the malicious cohort
};

struct TriggerSpec {
  std::vector<u32> indices;  // feature positions stamped with `value`
  double value = 4.0;
  u32 target_label = 0;

  void validate(std::size_t feature_dim, std::size_t num_classes) const;
};

struct AttackSpec {
  AttackKind kind = AttackKind::kNone;
  std::vector<ClientId> malicious;  // sorted, no duplicates

  // Meaning depends on kind: replacement scale n_eff for model
  // replacement, boost for poisoning / distributed backdoor, deviation
  // magnitude z for directed deviation.
  double scale = 1.0;

  std::optional<RealVector> target_model;  // explicit replacement target
  std::optional<TriggerSpec> trigger;
  bool collusion = true;   // malicious cohort shares the benign estimate
  double jitter = 0.0;     // per-client gaussian jitter on colluding copies
  double poison_fraction = 0.5;
  double stealth_clamp = 0.0;  // L2 cap as a multiple of the honest norm; 0 = off

  bool is_malicious(ClientId c) const;
  void validate(std::size_t n) const;
};

// n_eff * (target - global): with plain averaging over n silent peers the
// next model lands exactly on target (up to fixed-point resolution).
RealVector model_replacement_update(const RealVector& global,
                                    const RealVector& target,
                                    double n_effective);

// -z * sign(benign_estimate), coordinatewise; sign(0) = 0.
RealVector directed_deviation_update(const RealVector& benign_estimate,
                                     double z);

// Appends poisoned copies of round(fraction * size) rng-chosen samples,
// stamped with the trigger and relabeled to its target. Originals are
// kept, so the result grows.
Dataset poison_dataset(const Dataset& clean, const TriggerSpec& trigger,
                       double fraction, SeededRng& rng);

// boost * update, then L2-clamped to clamp_norm when clamp_norm > 0.
RealVector boosted_poison_update(const RealVector& update, double boost,
                                 double clamp_norm);

// Slice of the trigger owned by the malicious client at `rank` of
// `cohort` clients: indices are dealt round-robin, so slices are disjoint
// and cover the trigger.
TriggerSpec trigger_slice(const TriggerSpec& full, std::size_t rank,
                          std::size_t cohort);

}  // namespace fedfence
