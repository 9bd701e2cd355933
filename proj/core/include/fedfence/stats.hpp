#pragma once

#include <cstddef>
#include <vector>

#include "fedfence/types.hpp"

namespace fedfence {

struct MomentSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;         // population convention (divide by n)
  double skewness = 0.0;         // m3 / m2^(3/2)
  double excess_kurtosis = 0.0;  // m4 / m2^2 - 3
};

// Requires at least 2 samples; throws std::invalid_argument otherwise.
MomentSummary summarize_moments(const std::vector<double>& samples);

// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a),
// series expansion below a + 1, continued fraction above.
double gamma_q(double a, double x);

// Upper tail of the chi-square distribution with dof degrees of freedom.
double chi_square_sf(double statistic, double dof);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Goodness of fit against the uniform distribution over counts.size() bins.
ChiSquareResult chi_square_uniform(const std::vector<u64>& counts);

// Two-sample test that both histograms come from one distribution.
// Bins empty in both samples are dropped from the statistic.
ChiSquareResult chi_square_two_sample(const std::vector<u64>& a,
                                      const std::vector<u64>& b);

}  // namespace fedfence
