#include "fedfence/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fedfence {

void TriggerSpec::validate(std::size_t feature_dim,
                           std::size_t num_classes) const {
  if (indices.empty())
    throw std::invalid_argument("TriggerSpec: empty index set");
  for (u32 i : indices) {
    if (i >= feature_dim)
      throw std::invalid_argument("TriggerSpec: index beyond feature dim");
  }
  if (target_label >= num_classes)
    throw std::invalid_argument("TriggerSpec: target label out of range");
  if (!std::isfinite(value))
    throw std::invalid_argument("TriggerSpec: non-finite value");
}

bool AttackSpec::is_malicious(ClientId c) const {
  return std::binary_search(malicious.begin(), malicious.end(), c);
}

void AttackSpec::validate(std::size_t n) const {
  if (!std::is_sorted(malicious.begin(), malicious.end()) ||
      std::adjacent_find(malicious.begin(), malicious.end()) != malicious.end())
    throw std::invalid_argument("AttackSpec: malicious ids must be sorted and unique");
  if (!malicious.empty() && malicious.back() >= n)
    throw std::invalid_argument("AttackSpec: malicious id out of range");
  if (kind != AttackKind::kNone && malicious.empty())
    throw std::invalid_argument("AttackSpec: attack without malicious clients");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("AttackSpec: scale must be positive");
  if (jitter < 0.0 || poison_fraction < 0.0 || poison_fraction > 1.0 ||
      stealth_clamp < 0.0)
    throw std::invalid_argument("AttackSpec: parameter out of range");
  const bool needs_trigger = kind == AttackKind::kPoisoning ||
                             kind == AttackKind::kDistributedBackdoor ||
                             (kind == AttackKind::kModelReplacement &&
                              !target_model.has_value());
  if (needs_trigger && !trigger.has_value())
    throw std::invalid_argument("AttackSpec: this attack needs a trigger");
}

RealVector model_replacement_update(const RealVector& global,
                                    const RealVector& target,
                                    double n_effective) {
  if (global.size() != target.size())
    throw std::invalid_argument("model_replacement_update: dim mismatch");
  RealVector out(global.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = n_effective * (target[i] - global[i]);
  return out;
}

RealVector directed_deviation_update(const RealVector& benign_estimate,
                                     double z) {
  RealVector out(benign_estimate.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double s = benign_estimate[i] > 0.0 ? 1.0
             : benign_estimate[i] < 0.0 ? -1.0
                                        : 0.0;
    out[i] = -z * s;
  }
  return out;
}

Dataset poison_dataset(const Dataset& clean, const TriggerSpec& trigger,
                       double fraction, SeededRng& rng) {
  clean.validate();
  trigger.validate(clean.feature_dim, clean.num_classes);
  if (fraction < 0.0 || fraction > 1.0)
    throw std::invalid_argument("poison_dataset: fraction out of range");
  const std::size_t n_poison = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(clean.size())));
  std::vector<std::size_t> order(clean.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  Dataset out = clean;
  out.features.reserve(clean.size() + n_poison);
  out.labels.reserve(clean.size() + n_poison);
  for (std::size_t i = 0; i < n_poison; ++i) {
    RealVector x = clean.features[order[i]];
    for (u32 idx : trigger.indices) x[idx] = trigger.value;
    out.features.push_back(std::move(x));
    out.labels.push_back(trigger.target_label);
  }
  return out;
}

RealVector boosted_poison_update(const RealVector& update, double boost,
                                 double clamp_norm) {
  RealVector out = scaled(update, boost);
  if (clamp_norm > 0.0) {
    double norm = l2_norm(out);
    if (norm > clamp_norm) {
      double f = clamp_norm / norm;
      for (auto& x : out) x *= f;
    }
  }
  return out;
}

TriggerSpec trigger_slice(const TriggerSpec& full, std::size_t rank,
                          std::size_t cohort) {
  if (cohort == 0 || rank >= cohort)
    throw std::invalid_argument("trigger_slice: bad rank/cohort");
  TriggerSpec out = full;
  out.indices.clear();
  for (std::size_t i = rank; i < full.indices.size(); i += cohort)
    out.indices.push_back(full.indices[i]);
  if (out.indices.empty() && !full.indices.empty())
    out.indices.push_back(full.indices[rank % full.indices.size()]);
  return out;
}

}  // namespace fedfence
