#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fedfence/types.hpp"

namespace fedfence {

// Violations of estimator arity requirements (e.g. krum with too few rows).
// The CLI maps this to its own exit code, distinct from config errors.
class EstimatorPreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct UpdateSet {
  std::vector<RealVector> rows;
  std::vector<double> weights;  // empty means all ones

  std::size_t size() const { return rows.size(); }
  std::size_t dim() const { return rows.empty() ? 0 : rows[0].size(); }
  double weight(std::size_t i) const {
    return weights.empty() ? 1.0 : weights[i];
  }
  // Throws std::invalid_argument: empty set, ragged rows, non-finite
  // entries, negative weights.
  void validate() const;
};

// Weighted arithmetic mean.
RealVector average(const UpdateSet& u);

// Lower median per coordinate (element (m-1)/2 of the sorted column), so
// the output is always one of the observed values. Weights are ignored:
// the rank-based rules treat every row as one vote.
RealVector coordinate_median(const UpdateSet& u);

struct TrimConfig {
  double beta = 0.15;  // fraction trimmed from EACH tail
};

// Drops floor(beta * m) entries from each tail per coordinate and averages
// the rest. Requires beta in [0, 0.5) and at least one surviving entry.
RealVector trimmed_mean(const UpdateSet& u, const TrimConfig& cfg);

// Krum score: sum of squared distances to the m - f - 2 nearest other
// rows. Requires m >= 2f + 3. Ties select the lowest index.
std::size_t krum_select(const UpdateSet& u, std::size_t f);
RealVector krum(const UpdateSet& u, std::size_t f);

enum class BulyanInner { kKrum, kTrimmedMean };

// Iterates the inner rule m - 2f times, each time moving the selected row
// out of the pool, then aggregates per coordinate over the m - 4f values
// closest to the selection set's coordinate median. Requires m >= 4f + 3.
// Late-stage inner Krum calls run on pools below the standalone arity
// floor; there the neighbor count m' - f - 2 is clamped to at least 1.
RealVector bulyan(const UpdateSet& u, std::size_t f, BulyanInner inner);

struct PowerIterResult {
  RealVector vector;  // unit eigenvector estimate
  double value = 0.0;  // Rayleigh quotient at the final iterate
  bool converged = false;
  std::size_t iterations = 0;
};

// Power iteration on the weighted covariance of pre-centered rows,
// applied implicitly as x -> (1/W) * sum_i w_i c_i <c_i, x> (never
// materializing the d x d matrix). Deterministic start vector. Stops when
// successive Rayleigh quotients differ by less than tol.
PowerIterResult top_eigenpair(const std::vector<RealVector>& centered,
                              const std::vector<double>& weights,
                              std::size_t max_iters = 100, double tol = 1e-9);

struct FilterConfig {
  double sigma = 1e-6;        // operator-norm bound on benign covariance
  std::size_t eta = 20;       // iteration cap
  double spectral_mult = 20.0;  // stop once lambda <= spectral_mult * sigma^2
  // When set, the stop threshold is additionally scaled by the
  // finite-sample factor (1 + sqrt(block_dim / m))^2, the expected top
  // eigenvalue inflation of a clean empirical covariance when the row
  // count m does not dwarf the dimension.
  bool finite_sample_factor = false;
  std::size_t power_iters = 100;
  double power_tol = 1e-9;
  std::size_t sections = 1;  // used by filter_l2_sectioned
};

struct FilterBlockDiag {
  std::size_t offset = 0;
  std::size_t length = 0;
  std::vector<double> weights;  // final per-row weights for this block
  double lambda_initial = 0.0;
  double lambda_final = 0.0;
  std::size_t iterations = 0;
  bool stopped_by_threshold = false;
  bool power_converged = true;
  bool degenerate = false;  // all weight filtered away
};

struct FilterDiagnostics {
  std::vector<FilterBlockDiag> blocks;
  double lambda_max() const;  // largest initial lambda across blocks
  // Per-row weights averaged across blocks (equals the single block's
  // weights when sections == 1).
  std::vector<double> row_weights() const;
};

// Iterative spectral filter. Each pass computes the weighted mean and the
// top eigenpair of the weighted covariance; if the eigenvalue is above
// the stop threshold, rows are downweighted by 1 - tau_i / tau_max with
// tau_i the squared projection onto the eigenvector, zeroing the worst
// row. Returns the weighted mean at exit. Never mutates the input set.
RealVector filter_l2(const UpdateSet& u, const FilterConfig& cfg,
                     FilterDiagnostics* diag = nullptr);

// Same filter over cfg.sections contiguous coordinate blocks of length
// ceil(d / sections) (last block may be shorter), each filtered with its
// own weights. sections == 1 reproduces filter_l2 bit for bit.
RealVector filter_l2_sectioned(const UpdateSet& u, const FilterConfig& cfg,
                               FilterDiagnostics* diag = nullptr);

}  // namespace fedfence
