#pragma once

#include <string>
#include <vector>

#include "fedfence/rng.hpp"
#include "fedfence/types.hpp"

namespace fedfence {

struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::vector<RealVector> features;
  std::vector<u32> labels;

  std::size_t size() const { return features.size(); }
  void validate() const;
};

// IDX binary container (big-endian header). Images are flattened and
// scaled to [0, 1]; labels must be single-dimension. Malformed files get
// distinct diagnostics: bad magic, truncated payload, implausible dims.
std::vector<RealVector> load_idx_images(const std::string& path);
std::vector<u32> load_idx_labels(const std::string& path);
// Pairs the two files; count mismatch is its own error.
Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path,
                         std::size_t num_classes = 10);

// Client skew. Mean-estimation tasks draw from `components` scalar
// Gaussians (client i uses component i mod k, a balanced assignment).
// Classification tasks restrict each client to labels_per_client classes
// when that is nonzero.
struct HeterogeneitySpec {
  std::size_t components = 1;
  std::vector<double> component_means;   // defaults to zeros
  std::vector<double> component_sigmas;  // defaults to ones
  std::size_t labels_per_client = 0;     // 0 = iid labels

  void validate() const;
  double component_mean(std::size_t c) const;
  double component_sigma(std::size_t c) const;
  // Average in-component variance and variance of component means under
  // the uniform component draw; the pieces of the total-variance split.
  double mean_component_variance() const;
  double component_mean_variance() const;
};

enum class TaskKind { kGaussianMean, kSyntheticLogistic, kIdxDataset };

struct TaskConfig {
  TaskKind kind = TaskKind::kSyntheticLogistic;
  std::size_t num_clients = 0;

  // Mean-estimation task: updates are raw draws from the client's
  // component, N(mean * 1, sigma^2 I) over mean_dim coordinates.
  std::size_t mean_dim = 64;

  // Synthetic classification task.
  std::size_t feature_dim = 20;
  std::size_t num_classes = 10;
  std::size_t samples_per_client = 200;
  std::size_t test_samples = 2000;
  double class_separation = 3.0;  // distance of class centers from origin

  // IDX-backed task.
  std::string idx_images, idx_labels, idx_test_images, idx_test_labels;

  HeterogeneitySpec hetero;
};

struct TrainTask {
  TaskConfig cfg;
  std::vector<Dataset> client_data;   // empty for mean-estimation
  Dataset test_set;                   // empty for mean-estimation
  std::vector<u32> client_component;  // mean-estimation component per client

  std::size_t model_dim() const;
  bool has_features() const { return cfg.kind != TaskKind::kGaussianMean; }
};

TrainTask build_task(const TaskConfig& cfg, SeededRng& rng);

}  // namespace fedfence
