#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedfence/sim.hpp"

namespace fedfence {

// Schema violation in an experiment config: unknown or duplicate key,
// malformed value, or a semantic constraint caught before the run starts.
// The CLI maps this (and nothing else) to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A full experiment description as read from a config file. `protocol`
// and `task` are the engine-facing structs; the few fields that cannot be
// materialized until the task exists (explicit replacement target, the
// malicious head-count) are carried alongside and resolved in finalize().
struct ExperimentConfig {
  ProtocolConfig protocol;
  TaskConfig task;
  std::size_t malicious_count = 0;
  // Constant replacement target: target model = value * ones(model_dim),
  // materialized by the harness once the model dimension is known.
  std::optional<double> target_const;
  bool timing = false;
  bool seed_given = false;  // true iff the file set `seed` explicitly

  // Mirrors derived fields (client count, malicious id list, trigger) and
  // runs cross-field validation. Throws ConfigError.
  void finalize();
};

// Parses `key = value` lines ('#' starts a comment, blank lines ignored).
// Every key must be in the schema; duplicates and unknown keys throw
// ConfigError. Returns a finalized config.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical text form: every schema key in declaration order, values
// printed exactly (round-trips through parse_config_text to an identical
// serialization).
std::string serialize_config(const ExperimentConfig& cfg);

// Applies one `key=value` override through the same schema used by the
// parser (sweeps reuse this), then re-finalizes. The pseudo-key
// `attack.epsilon` sets malicious_count = round(value * protocol.n).
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

// Estimator names as the schema spells them; parse throws ConfigError.
EstimatorKind parse_estimator_kind_name(const std::string& name);
std::string estimator_kind_name(EstimatorKind kind);

}  // namespace fedfence
