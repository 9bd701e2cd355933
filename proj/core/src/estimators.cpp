#include "fedfence/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <numeric>
#include <thread>

#include "fedfence/rng.hpp"

namespace fedfence {

void UpdateSet::validate() const {
  if (rows.empty()) throw std::invalid_argument("UpdateSet: empty");
  const std::size_t d = rows[0].size();
  if (d == 0) throw std::invalid_argument("UpdateSet: zero-dimensional rows");
  for (const auto& r : rows) {
    if (r.size() != d) throw std::invalid_argument("UpdateSet: ragged rows");
    require_finite(r, "UpdateSet");
  }
  if (!weights.empty()) {
    if (weights.size() != rows.size())
      throw std::invalid_argument("UpdateSet: weight count mismatch");
    double total = 0.0;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("UpdateSet: weights must be finite and >= 0");
      total += w;
    }
    if (total <= 0.0)
      throw std::invalid_argument("UpdateSet: weights sum to zero");
  }
}

RealVector average(const UpdateSet& u) {
  u.validate();
  const std::size_t d = u.dim();
  RealVector out(d, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double w = u.weight(i);
    total += w;
    axpy(w, u.rows[i], out);
  }
  for (auto& x : out) x /= total;
  return out;
}

RealVector coordinate_median(const UpdateSet& u) {
  u.validate();
  const std::size_t m = u.size(), d = u.dim();
  RealVector out(d);
  std::vector<double> col(m);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < m; ++i) col[i] = u.rows[i][j];
    auto nth = col.begin() + static_cast<std::ptrdiff_t>((m - 1) / 2);
    std::nth_element(col.begin(), nth, col.end());
    out[j] = *nth;
  }
  return out;
}

RealVector trimmed_mean(const UpdateSet& u, const TrimConfig& cfg) {
  u.validate();
  if (!(cfg.beta >= 0.0) || cfg.beta >= 0.5)
    throw EstimatorPreconditionError("trimmed_mean: beta must be in [0, 0.5)");
  const std::size_t m = u.size(), d = u.dim();
  const std::size_t k = static_cast<std::size_t>(
      std::floor(cfg.beta * static_cast<double>(m)));
  if (m <= 2 * k)
    throw EstimatorPreconditionError("trimmed_mean: nothing survives the trim");
  RealVector out(d);
  std::vector<double> col(m);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < m; ++i) col[i] = u.rows[i][j];
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (std::size_t i = k; i < m - k; ++i) s += col[i];
    out[j] = s / static_cast<double>(m - 2 * k);
  }
  return out;
}

namespace {

// Krum selection over the rows listed in `pool` (indices into u.rows).
// neighbor count is clamped to [1, pool-2] so bulyan's shrinking pools
// stay well defined; the public entry enforces the standalone arity.
std::size_t krum_select_pool(const UpdateSet& u,
                             const std::vector<std::size_t>& pool,
                             std::size_t f) {
  const std::size_t m = pool.size();
  std::size_t k = (m > f + 2) ? (m - f - 2) : 1;
  if (k > m - 1) k = m - 1;
  std::vector<std::vector<double>> dist(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      double d2 = 0.0;
      const RealVector& ra = u.rows[pool[a]];
      const RealVector& rb = u.rows[pool[b]];
      for (std::size_t j = 0; j < ra.size(); ++j) {
        double diff = ra[j] - rb[j];
        d2 += diff * diff;
      }
      dist[a][b] = dist[b][a] = d2;
    }
  }
  double best_score = 0.0;
  std::size_t best = 0;
  std::vector<double> others(m - 1);
  for (std::size_t a = 0; a < m; ++a) {
    std::size_t t = 0;
    for (std::size_t b = 0; b < m; ++b)
      if (b != a) others[t++] = dist[a][b];
    std::nth_element(others.begin(),
                     others.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     others.end());
    double score = 0.0;
    for (std::size_t i = 0; i < k; ++i) score += others[i];
    if (a == 0 || score < best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;  // position within pool; caller maps back
}

}  // namespace

std::size_t krum_select(const UpdateSet& u, std::size_t f) {
  u.validate();
  if (u.size() < 2 * f + 3)
    throw EstimatorPreconditionError("krum: need at least 2f + 3 rows");
  std::vector<std::size_t> pool(u.size());
  std::iota(pool.begin(), pool.end(), 0);
  return krum_select_pool(u, pool, f);
}

RealVector krum(const UpdateSet& u, std::size_t f) {
  return u.rows[krum_select(u, f)];
}

RealVector bulyan(const UpdateSet& u, std::size_t f, BulyanInner inner) {
  u.validate();
  const std::size_t m = u.size(), d = u.dim();
  if (m < 4 * f + 3)
    throw EstimatorPreconditionError("bulyan: need at least 4f + 3 rows");
  const std::size_t n_select = m - 2 * f;
  const std::size_t n_keep = m - 4 * f;  // per-coordinate survivors

  std::vector<std::size_t> pool(m);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> selected;
  selected.reserve(n_select);
  for (std::size_t round = 0; round < n_select; ++round) {
    std::size_t pos;
    if (inner == BulyanInner::kKrum) {
      pos = krum_select_pool(u, pool, f);
    } else {
      // Trimmed-mean inner rule: pick the pooled row closest to the pool's
      // trimmed mean; lowest index wins ties.
      UpdateSet view;
      view.rows.reserve(pool.size());
      for (std::size_t idx : pool) view.rows.push_back(u.rows[idx]);
      TrimConfig tc;
      double beta = static_cast<double>(f) / static_cast<double>(pool.size());
      tc.beta = std::min(beta, 0.49);
      RealVector center = trimmed_mean(view, tc);
      pos = 0;
      double best = l2_distance(u.rows[pool[0]], center);
      for (std::size_t a = 1; a < pool.size(); ++a) {
        double dist = l2_distance(u.rows[pool[a]], center);
        if (dist < best) {
          best = dist;
          pos = a;
        }
      }
    }
    selected.push_back(pool[pos]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pos));
  }

  RealVector out(d);
  std::vector<double> col(n_select);
  std::vector<std::pair<double, double>> by_dist(n_select);  // (|v-med|, v)
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n_select; ++i) col[i] = u.rows[selected[i]][j];
    auto nth = col.begin() + static_cast<std::ptrdiff_t>((n_select - 1) / 2);
    std::nth_element(col.begin(), nth, col.end());
    double med = *nth;
    for (std::size_t i = 0; i < n_select; ++i)
      by_dist[i] = {std::fabs(col[i] - med), col[i]};
    std::sort(by_dist.begin(), by_dist.end());
    double s = 0.0;
    for (std::size_t i = 0; i < n_keep; ++i) s += by_dist[i].second;
    out[j] = s / static_cast<double>(n_keep);
  }
  return out;
}

namespace {

struct Block {
  std::size_t offset = 0;
  std::size_t length = 0;
};

// Deterministic unit start vector; entries from the avalanched index so no
// coordinate subspace is systematically favored.
RealVector power_start(std::size_t len) {
  RealVector v(len);
  for (std::size_t j = 0; j < len; ++j) {
    u64 h = SeededRng::mix64(static_cast<u64>(j) + 0x706f776572ULL);
    v[j] = static_cast<double>(h >> 11) * 0x1.0p-53 - 0.5;
    if (v[j] == 0.0) v[j] = 0.5;
  }
  double norm = l2_norm(v);
  for (auto& x : v) x /= norm;
  return v;
}

// Power iteration over a column block of centered rows.
PowerIterResult power_iter_block(const std::vector<const double*>& rows,
                                 const std::vector<double>& w, double W,
                                 std::size_t len, std::size_t max_iters,
                                 double tol) {
  PowerIterResult res;
  RealVector x = power_start(len);
  RealVector y(len);
  double lambda_prev = 0.0;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (w[i] <= 0.0) continue;
      const double* c = rows[i];
      double s = 0.0;
      for (std::size_t j = 0; j < len; ++j) s += c[j] * x[j];
      double a = w[i] * s / W;
      for (std::size_t j = 0; j < len; ++j) y[j] += a * c[j];
    }
    double lambda = 0.0;
    for (std::size_t j = 0; j < len; ++j) lambda += x[j] * y[j];
    double norm = l2_norm(y);
    res.iterations = it;
    if (norm == 0.0) {
      res.value = 0.0;
      res.vector = std::move(x);
      res.converged = true;
      return res;
    }
    for (std::size_t j = 0; j < len; ++j) x[j] = y[j] / norm;
    if (it > 1 && std::fabs(lambda - lambda_prev) < tol) {
      res.value = lambda;
      res.vector = std::move(x);
      res.converged = true;
      return res;
    }
    lambda_prev = lambda;
  }
  res.value = lambda_prev;
  res.vector = std::move(x);
  res.converged = false;
  return res;
}

// One filtering pass over a single coordinate block.
void filter_block(const UpdateSet& u, const FilterConfig& cfg,
                  const Block& blk, RealVector& out, FilterBlockDiag& diag) {
  const std::size_t m = u.size();
  diag.offset = blk.offset;
  diag.length = blk.length;
  std::vector<double> w(m);
  std::size_t m_active = 0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = u.weight(i);
    if (w[i] > 0.0) ++m_active;
  }

  double threshold = cfg.spectral_mult * cfg.sigma * cfg.sigma;
  if (cfg.finite_sample_factor && m_active > 0) {
    double r = std::sqrt(static_cast<double>(blk.length) /
                         static_cast<double>(m_active));
    threshold *= (1.0 + r) * (1.0 + r);
  }

  RealVector mu(blk.length, 0.0);
  std::vector<RealVector> centered(m, RealVector(blk.length, 0.0));
  std::vector<const double*> row_ptrs(m);
  std::vector<double> tau(m, 0.0);

  for (std::size_t iter = 1; iter <= cfg.eta; ++iter) {
    double W = 0.0;
    for (double wi : w) W += wi;
    if (W <= 0.0) {
      diag.degenerate = true;
      break;  // keep the mean from the previous pass
    }
    std::fill(mu.begin(), mu.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (w[i] <= 0.0) continue;
      const double* r = u.rows[i].data() + blk.offset;
      double a = w[i] / W;
      for (std::size_t j = 0; j < blk.length; ++j) mu[j] += a * r[j];
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (w[i] <= 0.0) continue;
      const double* r = u.rows[i].data() + blk.offset;
      double* c = centered[i].data();
      for (std::size_t j = 0; j < blk.length; ++j) c[j] = r[j] - mu[j];
      row_ptrs[i] = c;
    }
    PowerIterResult eig = power_iter_block(row_ptrs, w, W, blk.length,
                                           cfg.power_iters, cfg.power_tol);
    if (!eig.converged) diag.power_converged = false;
    if (iter == 1) diag.lambda_initial = eig.value;
    diag.lambda_final = eig.value;
    diag.iterations = iter;
    if (eig.value <= threshold) {
      diag.stopped_by_threshold = true;
      break;
    }
    if (iter == cfg.eta) break;

    double tau_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (w[i] <= 0.0) {
        tau[i] = 0.0;
        continue;
      }
      double s = 0.0;
      const double* c = centered[i].data();
      for (std::size_t j = 0; j < blk.length; ++j) s += c[j] * eig.vector[j];
      tau[i] = s * s;
      tau_max = std::max(tau_max, tau[i]);
    }
    if (tau_max <= 0.0) break;  // all active rows coincide with the mean
    for (std::size_t i = 0; i < m; ++i) {
      if (w[i] <= 0.0) continue;
      double factor = 1.0 - tau[i] / tau_max;
      w[i] = factor > 0.0 ? w[i] * factor : 0.0;
    }
  }

  diag.weights = std::move(w);
  std::copy(mu.begin(), mu.end(), out.begin() + static_cast<std::ptrdiff_t>(blk.offset));
}

}  // namespace

PowerIterResult top_eigenpair(const std::vector<RealVector>& centered,
                              const std::vector<double>& weights,
                              std::size_t max_iters, double tol) {
  if (centered.empty())
    throw std::invalid_argument("top_eigenpair: no rows");
  const std::size_t d = centered[0].size();
  std::vector<const double*> ptrs(centered.size());
  double W = 0.0;
  for (std::size_t i = 0; i < centered.size(); ++i) {
    if (centered[i].size() != d)
      throw std::invalid_argument("top_eigenpair: ragged rows");
    ptrs[i] = centered[i].data();
    W += weights.empty() ? 1.0 : weights[i];
  }
  if (W <= 0.0) throw std::invalid_argument("top_eigenpair: zero total weight");
  std::vector<double> w = weights;
  if (w.empty()) w.assign(centered.size(), 1.0);
  return power_iter_block(ptrs, w, W, d, max_iters, tol);
}

double FilterDiagnostics::lambda_max() const {
  double v = 0.0;
  for (const auto& b : blocks) v = std::max(v, b.lambda_initial);
  return v;
}

std::vector<double> FilterDiagnostics::row_weights() const {
  if (blocks.empty()) return {};
  std::vector<double> out(blocks[0].weights.size(), 0.0);
  for (const auto& b : blocks)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.weights[i];
  for (auto& x : out) x /= static_cast<double>(blocks.size());
  return out;
}

RealVector filter_l2(const UpdateSet& u, const FilterConfig& cfg,
                     FilterDiagnostics* diag) {
  u.validate();
  if (cfg.eta == 0)
    throw std::invalid_argument("filter_l2: eta must be positive");
  FilterDiagnostics local;
  FilterDiagnostics& dd = diag ? *diag : local;
  dd.blocks.clear();
  dd.blocks.emplace_back();
  RealVector out(u.dim(), 0.0);
  filter_block(u, cfg, Block{0, u.dim()}, out, dd.blocks[0]);
  return out;
}

RealVector filter_l2_sectioned(const UpdateSet& u, const FilterConfig& cfg,
                               FilterDiagnostics* diag) {
  u.validate();
  if (cfg.eta == 0)
    throw std::invalid_argument("filter_l2_sectioned: eta must be positive");
  if (cfg.sections == 0)
    throw std::invalid_argument("filter_l2_sectioned: sections must be positive");
  const std::size_t d = u.dim();
  if (cfg.sections > d)
    throw std::invalid_argument(
        "filter_l2_sectioned: sections exceeds the dimension");
  const std::size_t block_len =
      (d + cfg.sections - 1) / cfg.sections;  // ceil(d / k), last one shorter
  std::vector<Block> blocks;
  for (std::size_t off = 0; off < d; off += block_len)
    blocks.push_back(Block{off, std::min(block_len, d - off)});
  FilterDiagnostics local;
  FilterDiagnostics& dd = diag ? *diag : local;
  dd.blocks.assign(blocks.size(), FilterBlockDiag{});
  RealVector out(d, 0.0);

  // Blocks are independent: disjoint output ranges, fixed work partition,
  // position-addressed results, so parallel and serial schedules produce
  // bitwise-identical output. FEDFENCE_SECTION_WORKERS overrides the
  // hardware count (useful to pin either schedule).
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("FEDFENCE_SECTION_WORKERS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      hw = static_cast<std::size_t>(v);
  }
  const std::size_t workers = std::min<std::size_t>(hw, blocks.size());
  if (workers <= 1) {
    for (std::size_t b = 0; b < blocks.size(); ++b)
      filter_block(u, cfg, blocks[b], out, dd.blocks[b]);
    return out;
  }
  std::vector<std::future<void>> tasks;
  tasks.reserve(workers);
  for (std::size_t wk = 0; wk < workers; ++wk)
    tasks.push_back(std::async(std::launch::async, [&, wk] {
      for (std::size_t b = wk; b < blocks.size(); b += workers)
        filter_block(u, cfg, blocks[b], out, dd.blocks[b]);
    }));
  for (auto& t : tasks) t.get();
  return out;
}

}  // namespace fedfence
