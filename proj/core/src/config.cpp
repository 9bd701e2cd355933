#include "fedfence/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fedfence {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("config: key '" + key + "': cannot parse '" + value +
                    "' as " + expected);
}

u64 parse_u64(const std::string& key, const std::string& value) {
  if (value.empty() || value[0] == '-') bad_value(key, value, "an unsigned integer");
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (errno != 0 || end != value.c_str() + value.size())
    bad_value(key, value, "an unsigned integer");
  return static_cast<u64>(v);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(const std::string& key, const std::string& value) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size())
    bad_value(key, value, "a real number");
  if (!std::isfinite(v)) bad_value(key, value, "a finite real number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a bool (true/false)");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& key,
                                    const std::string& value) {
  std::vector<double> out;
  for (const auto& item : split_list(value)) out.push_back(parse_real(key, item));
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& key,
                                         const std::string& value) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(value)) out.push_back(parse_size(key, item));
  return out;
}

std::string fmt_u64(u64 v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%" PRIu64, v);
  return buf;
}

std::string fmt_real(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string fmt_real_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_real(v[i]);
  }
  return out;
}

std::string fmt_size_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_u64(static_cast<u64>(v[i]));
  }
  return out;
}

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& key, const std::string& value,
                const EnumName<Enum> (&table)[N]) {
  for (const auto& e : table)
    if (value == e.name) return e.value;
  std::string expected = "one of {";
  for (std::size_t i = 0; i < N; ++i) {
    if (i) expected += ", ";
    expected += table[i].name;
  }
  expected += "}";
  bad_value(key, value, expected.c_str());
}

template <typename Enum, std::size_t N>
std::string enum_name(Enum v, const EnumName<Enum> (&table)[N]) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

constexpr EnumName<TaskKind> kTaskKinds[] = {
    {TaskKind::kGaussianMean, "gaussian_mean"},
    {TaskKind::kSyntheticLogistic, "synthetic_logistic"},
    {TaskKind::kIdxDataset, "idx"},
};

constexpr EnumName<LossKind> kLossKinds[] = {
    {LossKind::kLogistic, "logistic"},
    {LossKind::kSquared, "squared"},
};

constexpr EnumName<EstimatorKind> kEstimatorKinds[] = {
    {EstimatorKind::kAverage, "average"},
    {EstimatorKind::kCoordinateMedian, "coordinate_median"},
    {EstimatorKind::kTrimmedMean, "trimmed_mean"},
    {EstimatorKind::kKrum, "krum"},
    {EstimatorKind::kBulyan, "bulyan"},
    {EstimatorKind::kFilterL2, "filter_l2"},
    {EstimatorKind::kFilterL2Sectioned, "filter_l2_sectioned"},
};

constexpr EnumName<BulyanInner> kBulyanInners[] = {
    {BulyanInner::kKrum, "krum"},
    {BulyanInner::kTrimmedMean, "trimmed_mean"},
};

constexpr EnumName<AttackKind> kAttackKinds[] = {
    {AttackKind::kNone, "none"},
    {AttackKind::kModelReplacement, "model_replacement"},
    {AttackKind::kPoisoning, "poisoning"},
    {AttackKind::kDirectedDeviation, "directed_deviation"},
    {AttackKind::kDistributedBackdoor, "distributed_backdoor"},
};

struct KeyEntry {
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  // Returns the serialized value, or nullopt to omit the key entirely.
  std::function<std::optional<std::string>(const ExperimentConfig&)> get;
};

const std::vector<KeyEntry>& schema() {
  static const std::vector<KeyEntry> entries = [] {
    std::vector<KeyEntry> t;
    auto add = [&t](const char* key, auto set, auto get) {
      t.push_back(KeyEntry{
          key,
          [key, set](ExperimentConfig& c, const std::string& v) { set(c, key, v); },
          [get](const ExperimentConfig& c) -> std::optional<std::string> {
            return get(c);
          }});
    };

    add("seed",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.seed = parse_u64(k, v);
          c.seed_given = true;
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.protocol.seed); });
    add("protocol.n",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.n = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.protocol.n); });
    add("protocol.p",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.p = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.protocol.p); });
    add("protocol.rounds",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.rounds = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.protocol.rounds); });
    add("protocol.reshard",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.reshard_every_round = parse_bool(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_bool(c.protocol.reshard_every_round);
        });
    add("protocol.shared_init",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.shared_init = parse_bool(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_bool(c.protocol.shared_init);
        });

    add("train.lr",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.train.lr = parse_real(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_real(c.protocol.train.lr); });
    add("train.batch",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.train.batch = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.protocol.train.batch); });
    add("train.local_steps",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.train.local_steps = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.protocol.train.local_steps);
        });
    add("train.loss",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.train.loss = parse_enum(k, v, kLossKinds);
        },
        [](const ExperimentConfig& c) {
          return enum_name(c.protocol.train.loss, kLossKinds);
        });

    add("codec.scale_bits",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.codec.scale_bits = static_cast<u32>(parse_u64(k, v));
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.protocol.codec.scale_bits);
        });
    add("codec.clamp_abs",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.codec.clamp_abs = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.protocol.codec.clamp_abs);
        });

    add("task.kind",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.kind = parse_enum(k, v, kTaskKinds);
        },
        [](const ExperimentConfig& c) { return enum_name(c.task.kind, kTaskKinds); });
    add("task.mean_dim",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.mean_dim = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.task.mean_dim); });
    add("task.feature_dim",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.feature_dim = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.task.feature_dim); });
    add("task.num_classes",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.num_classes = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.task.num_classes); });
    add("task.samples_per_client",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.samples_per_client = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.task.samples_per_client);
        });
    add("task.test_samples",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.test_samples = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.task.test_samples); });
    add("task.class_separation",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.class_separation = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.task.class_separation);
        });
    add("task.idx_images",
        [](ExperimentConfig& c, const char*, const std::string& v) {
          c.task.idx_images = v;
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (c.task.idx_images.empty()) return std::nullopt;
          return c.task.idx_images;
        });
    add("task.idx_labels",
        [](ExperimentConfig& c, const char*, const std::string& v) {
          c.task.idx_labels = v;
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (c.task.idx_labels.empty()) return std::nullopt;
          return c.task.idx_labels;
        });
    add("task.idx_test_images",
        [](ExperimentConfig& c, const char*, const std::string& v) {
          c.task.idx_test_images = v;
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (c.task.idx_test_images.empty()) return std::nullopt;
          return c.task.idx_test_images;
        });
    add("task.idx_test_labels",
        [](ExperimentConfig& c, const char*, const std::string& v) {
          c.task.idx_test_labels = v;
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (c.task.idx_test_labels.empty()) return std::nullopt;
          return c.task.idx_test_labels;
        });

    add("hetero.components",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.hetero.components = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.task.hetero.components);
        });
    add("hetero.component_means",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.hetero.component_means = parse_real_list(k, v);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (c.task.hetero.component_means.empty()) return std::nullopt;
          return fmt_real_list(c.task.hetero.component_means);
        });
    add("hetero.component_sigmas",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.hetero.component_sigmas = parse_real_list(k, v);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (c.task.hetero.component_sigmas.empty()) return std::nullopt;
          return fmt_real_list(c.task.hetero.component_sigmas);
        });
    add("hetero.labels_per_client",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.task.hetero.labels_per_client = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.task.hetero.labels_per_client);
        });

    add("estimator.kind",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.kind = parse_enum(k, v, kEstimatorKinds);
        },
        [](const ExperimentConfig& c) {
          return enum_name(c.protocol.estimator.kind, kEstimatorKinds);
        });
    add("estimator.trim_beta",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.trim.beta = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.protocol.estimator.trim.beta);
        });
    add("estimator.krum_f",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.krum_f = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.protocol.estimator.krum_f);
        });
    add("estimator.bulyan_inner",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.bulyan_inner = parse_enum(k, v, kBulyanInners);
        },
        [](const ExperimentConfig& c) {
          return enum_name(c.protocol.estimator.bulyan_inner, kBulyanInners);
        });

    add("filter.sigma",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.filter.sigma = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.protocol.estimator.filter.sigma);
        });
    add("filter.eta",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.filter.eta = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.protocol.estimator.filter.eta);
        });
    add("filter.spectral_mult",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.filter.spectral_mult = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.protocol.estimator.filter.spectral_mult);
        });
    add("filter.finite_sample_factor",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.filter.finite_sample_factor = parse_bool(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_bool(c.protocol.estimator.filter.finite_sample_factor);
        });
    add("filter.power_iters",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.filter.power_iters = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.protocol.estimator.filter.power_iters);
        });
    add("filter.power_tol",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.filter.power_tol = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.protocol.estimator.filter.power_tol);
        });
    add("filter.sections",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.estimator.filter.sections = parse_size(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_u64(c.protocol.estimator.filter.sections);
        });

    add("attack.kind",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.attack.kind = parse_enum(k, v, kAttackKinds);
        },
        [](const ExperimentConfig& c) {
          return enum_name(c.protocol.attack.kind, kAttackKinds);
        });
    add("attack.malicious_count",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.malicious_count = parse_size(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_u64(c.malicious_count); });
    add("attack.scale",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.attack.scale = parse_real(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_real(c.protocol.attack.scale); });
    add("attack.collusion",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.attack.collusion = parse_bool(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_bool(c.protocol.attack.collusion);
        });
    add("attack.jitter",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.attack.jitter = parse_real(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_real(c.protocol.attack.jitter); });
    add("attack.poison_fraction",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.attack.poison_fraction = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.protocol.attack.poison_fraction);
        });
    add("attack.stealth_clamp",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.protocol.attack.stealth_clamp = parse_real(k, v);
        },
        [](const ExperimentConfig& c) {
          return fmt_real(c.protocol.attack.stealth_clamp);
        });
    add("attack.trigger_indices",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          TriggerSpec trig = c.protocol.attack.trigger.value_or(TriggerSpec{});
          trig.indices.clear();
          for (const std::size_t idx : parse_size_list(k, v))
            trig.indices.push_back(static_cast<u32>(idx));
          c.protocol.attack.trigger = trig;
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (!c.protocol.attack.trigger) return std::nullopt;
          std::vector<std::size_t> wide(c.protocol.attack.trigger->indices.begin(),
                                        c.protocol.attack.trigger->indices.end());
          return fmt_size_list(wide);
        });
    add("attack.trigger_value",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          TriggerSpec trig = c.protocol.attack.trigger.value_or(TriggerSpec{});
          trig.value = parse_real(k, v);
          c.protocol.attack.trigger = trig;
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (!c.protocol.attack.trigger) return std::nullopt;
          return fmt_real(c.protocol.attack.trigger->value);
        });
    add("attack.target_label",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          TriggerSpec trig = c.protocol.attack.trigger.value_or(TriggerSpec{});
          trig.target_label = parse_size(k, v);
          c.protocol.attack.trigger = trig;
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (!c.protocol.attack.trigger) return std::nullopt;
          return fmt_u64(c.protocol.attack.trigger->target_label);
        });
    add("attack.target_const",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.target_const = parse_real(k, v);
        },
        [](const ExperimentConfig& c) -> std::optional<std::string> {
          if (!c.target_const) return std::nullopt;
          return fmt_real(*c.target_const);
        });

    add("output.timing",
        [](ExperimentConfig& c, const char* k, const std::string& v) {
          c.timing = parse_bool(k, v);
        },
        [](const ExperimentConfig& c) { return fmt_bool(c.timing); });
    return t;
  }();
  return entries;
}

const KeyEntry* find_entry(const std::string& key) {
  for (const auto& e : schema())
    if (key == e.key) return &e;
  return nullptr;
}

}  // namespace

void ExperimentConfig::finalize() {
  task.num_clients = protocol.n;
  if (malicious_count > protocol.n)
    throw ConfigError("config: attack.malicious_count exceeds protocol.n");
  protocol.attack.malicious.clear();
  for (std::size_t i = 0; i < malicious_count; ++i)
    protocol.attack.malicious.push_back(static_cast<ClientId>(i));
  if (protocol.attack.kind != AttackKind::kNone && malicious_count == 0)
    throw ConfigError("config: attack.kind set but attack.malicious_count is 0");
  if (protocol.attack.kind == AttackKind::kNone) {
    protocol.attack.malicious.clear();
    malicious_count = 0;
  }

  const bool has_features = task.kind != TaskKind::kGaussianMean;
  const bool wants_trigger =
      protocol.attack.kind == AttackKind::kPoisoning ||
      protocol.attack.kind == AttackKind::kDistributedBackdoor;
  if (wants_trigger && !has_features)
    throw ConfigError(
        "config: data-poisoning attacks need a task with features "
        "(task.kind != gaussian_mean)");
  if (wants_trigger && !protocol.attack.trigger)
    throw ConfigError("config: attack.kind needs attack.trigger_indices");
  if (protocol.attack.kind == AttackKind::kModelReplacement && !target_const &&
      !protocol.attack.target_model && !protocol.attack.trigger)
    throw ConfigError(
        "config: model_replacement needs attack.target_const or "
        "attack.trigger_indices");

  try {
    const std::size_t max_shard =
        protocol.p == 0 ? 0 : (protocol.n + protocol.p - 1) / protocol.p;
    protocol.codec.validate(max_shard + 1);
    if (protocol.attack.trigger && has_features)
      protocol.attack.trigger->validate(task.feature_dim, task.num_classes);
    task.hetero.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (protocol.n == 0) throw ConfigError("config: protocol.n must be positive");
  if (protocol.p == 0 || protocol.p > protocol.n)
    throw ConfigError("config: protocol.p must be in [1, protocol.n]");
  if (protocol.rounds == 0)
    throw ConfigError("config: protocol.rounds must be positive");
  if (protocol.estimator.filter.sections == 0)
    throw ConfigError("config: filter.sections must be positive");
  if (protocol.train.batch == 0)
    throw ConfigError("config: train.batch must be positive");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, bool> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const KeyEntry* entry = find_entry(key);
    if (!entry)
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": unknown key '" + key + "'");
    if (seen[key])
      throw ConfigError("config: line " + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    seen[key] = true;
    entry->set(cfg, value);
  }
  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& e : schema()) {
    const auto value = e.get(cfg);
    if (!value) continue;
    out += e.key;
    out += " = ";
    out += *value;
    out += "\n";
  }
  return out;
}

EstimatorKind parse_estimator_kind_name(const std::string& name) {
  return parse_enum("estimator.kind", name, kEstimatorKinds);
}

std::string estimator_kind_name(EstimatorKind kind) {
  return enum_name(kind, kEstimatorKinds);
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
  if (key == "attack.epsilon") {
    const double eps = parse_real(key, value);
    if (eps < 0.0 || eps > 1.0)
      throw ConfigError("config: attack.epsilon must be in [0, 1]");
    cfg.malicious_count = static_cast<std::size_t>(
        std::llround(eps * static_cast<double>(cfg.protocol.n)));
    cfg.finalize();
    return;
  }
  const KeyEntry* entry = find_entry(key);
  if (!entry) throw ConfigError("config: unknown override key '" + key + "'");
  entry->set(cfg, value);
  cfg.finalize();
}

}  // namespace fedfence
