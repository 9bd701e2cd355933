#include "fedfence/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fedfence {

void Dataset::validate() const {
  if (features.size() != labels.size())
    throw std::invalid_argument("Dataset: feature/label count mismatch");
  for (const auto& x : features) {
    if (x.size() != feature_dim)
      throw std::invalid_argument("Dataset: feature dim mismatch");
  }
  for (u32 y : labels) {
    if (y >= num_classes)
      throw std::invalid_argument("Dataset: label out of range");
  }
}

void HeterogeneitySpec::validate() const {
  if (components == 0)
    throw std::invalid_argument("HeterogeneitySpec: need >= 1 component");
  if (!component_means.empty() && component_means.size() != components)
    throw std::invalid_argument("HeterogeneitySpec: component_means size");
  if (!component_sigmas.empty() && component_sigmas.size() != components)
    throw std::invalid_argument("HeterogeneitySpec: component_sigmas size");
  for (double s : component_sigmas) {
    if (!(s >= 0.0))
      throw std::invalid_argument("HeterogeneitySpec: negative sigma");
  }
}

double HeterogeneitySpec::component_mean(std::size_t c) const {
  return component_means.empty() ? 0.0 : component_means.at(c);
}

double HeterogeneitySpec::component_sigma(std::size_t c) const {
  return component_sigmas.empty() ? 1.0 : component_sigmas.at(c);
}

double HeterogeneitySpec::mean_component_variance() const {
  double s = 0.0;
  for (std::size_t c = 0; c < components; ++c) {
    double sd = component_sigma(c);
    s += sd * sd;
  }
  return s / static_cast<double>(components);
}

double HeterogeneitySpec::component_mean_variance() const {
  double mu = 0.0;
  for (std::size_t c = 0; c < components; ++c) mu += component_mean(c);
  mu /= static_cast<double>(components);
  double v = 0.0;
  for (std::size_t c = 0; c < components; ++c) {
    double d = component_mean(c) - mu;
    v += d * d;
  }
  return v / static_cast<double>(components);
}

namespace {

u32 read_be32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("idx: truncated header in " + path);
  return (static_cast<u32>(b[0]) << 24) | (static_cast<u32>(b[1]) << 16) |
         (static_cast<u32>(b[2]) << 8) | static_cast<u32>(b[3]);
}

}  // namespace

std::vector<RealVector> load_idx_images(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("idx: cannot open " + path);
  u32 magic = read_be32(in, path);
  if (magic != 0x00000803u)
    throw std::runtime_error("idx: bad magic for image file " + path);
  u32 count = read_be32(in, path);
  u32 rows = read_be32(in, path);
  u32 cols = read_be32(in, path);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096)
    throw std::runtime_error("idx: implausible dimensions in " + path);
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<RealVector> out(count, RealVector(pixels));
  std::vector<unsigned char> buf(pixels);
  for (u32 i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(pixels));
    if (!in) throw std::runtime_error("idx: truncated image payload in " + path);
    for (std::size_t j = 0; j < pixels; ++j)
      out[i][j] = static_cast<double>(buf[j]) / 255.0;
  }
  return out;
}

std::vector<u32> load_idx_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("idx: cannot open " + path);
  u32 magic = read_be32(in, path);
  if (magic != 0x00000801u)
    throw std::runtime_error("idx: bad magic for label file " + path);
  u32 count = read_be32(in, path);
  std::vector<unsigned char> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(count));
  if (!in) throw std::runtime_error("idx: truncated label payload in " + path);
  return {buf.begin(), buf.end()};
}

Dataset load_idx_dataset(const std::string& images_path,
                         const std::string& labels_path,
                         std::size_t num_classes) {
  Dataset d;
  d.features = load_idx_images(images_path);
  d.labels = load_idx_labels(labels_path);
  if (d.features.size() != d.labels.size())
    throw std::runtime_error("idx: image/label count mismatch between " +
                             images_path + " and " + labels_path);
  d.feature_dim = d.features.empty() ? 0 : d.features[0].size();
  d.num_classes = num_classes;
  d.validate();
  return d;
}

std::size_t TrainTask::model_dim() const {
  if (cfg.kind == TaskKind::kGaussianMean) return cfg.mean_dim;
  std::size_t f = test_set.feature_dim;
  return test_set.num_classes * (f + 1);  // weights plus bias per class
}

namespace {

RealVector gaussian_vector(std::size_t d, SeededRng& rng) {
  RealVector v(d);
  for (auto& x : v) x = rng.next_gaussian();
  return v;
}

// Class centers at class_separation from the origin in random directions.
std::vector<RealVector> make_class_centers(std::size_t classes, std::size_t dim,
                                           double separation, SeededRng& rng) {
  std::vector<RealVector> centers(classes);
  for (auto& c : centers) {
    c = gaussian_vector(dim, rng);
    double norm = l2_norm(c);
    if (norm == 0.0) norm = 1.0;
    for (auto& x : c) x = x / norm * separation;
  }
  return centers;
}

Dataset sample_classification(const std::vector<RealVector>& centers,
                              const std::vector<u32>& allowed_labels,
                              std::size_t count, SeededRng& rng) {
  Dataset d;
  d.feature_dim = centers[0].size();
  d.num_classes = centers.size();
  d.features.reserve(count);
  d.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    u32 y = allowed_labels[rng.next_below(allowed_labels.size())];
    RealVector x = gaussian_vector(d.feature_dim, rng);
    axpy(1.0, centers[y], x);
    d.features.push_back(std::move(x));
    d.labels.push_back(y);
  }
  return d;
}

}  // namespace

TrainTask build_task(const TaskConfig& cfg, SeededRng& rng) {
  if (cfg.num_clients == 0)
    throw std::invalid_argument("build_task: need at least one client");
  cfg.hetero.validate();

  TrainTask task;
  task.cfg = cfg;

  if (cfg.kind == TaskKind::kGaussianMean) {
    task.client_component.resize(cfg.num_clients);
    for (std::size_t i = 0; i < cfg.num_clients; ++i)
      task.client_component[i] = static_cast<u32>(i % cfg.hetero.components);
    return task;
  }

  const std::size_t classes = cfg.num_classes;
  const std::size_t L = cfg.hetero.labels_per_client;
  if (L > classes)
    throw std::invalid_argument("build_task: labels_per_client > classes");

  auto labels_for_client = [&](std::size_t i) {
    std::vector<u32> allowed;
    if (L == 0) {
      allowed.resize(classes);
      std::iota(allowed.begin(), allowed.end(), 0);
    } else {
      for (std::size_t t = 0; t < L; ++t)
        allowed.push_back(static_cast<u32>((i * L + t) % classes));
    }
    return allowed;
  };

  if (cfg.kind == TaskKind::kSyntheticLogistic) {
    SeededRng task_rng = rng.derive({stream::kTask});
    auto centers = make_class_centers(classes, cfg.feature_dim,
                                      cfg.class_separation, task_rng);
    task.client_data.resize(cfg.num_clients);
    for (std::size_t i = 0; i < cfg.num_clients; ++i) {
      SeededRng client_rng = rng.derive({stream::kClientData, i});
      task.client_data[i] = sample_classification(
          centers, labels_for_client(i), cfg.samples_per_client, client_rng);
    }
    SeededRng test_rng = rng.derive({stream::kClientData, 0xffffffffULL});
    std::vector<u32> all(classes);
    std::iota(all.begin(), all.end(), 0);
    task.test_set =
        sample_classification(centers, all, cfg.test_samples, test_rng);
    return task;
  }

  // IDX-backed task: deal training samples across clients, iid via
  // round-robin, label-skewed via contiguous runs of the label-sorted
  // order so each client sees few classes.
  Dataset train = load_idx_dataset(cfg.idx_images, cfg.idx_labels, classes);
  task.test_set =
      load_idx_dataset(cfg.idx_test_images, cfg.idx_test_labels, classes);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  if (L > 0) {
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return train.labels[a] < train.labels[b];
                     });
  }
  task.client_data.assign(cfg.num_clients, Dataset{});
  for (auto& d : task.client_data) {
    d.feature_dim = train.feature_dim;
    d.num_classes = classes;
  }
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    std::size_t client = (L > 0)
        ? std::min(pos * cfg.num_clients / order.size(), cfg.num_clients - 1)
        : pos % cfg.num_clients;
    std::size_t idx = order[pos];
    task.client_data[client].features.push_back(train.features[idx]);
    task.client_data[client].labels.push_back(train.labels[idx]);
  }
  return task;
}

}  // namespace fedfence
