#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <vector>

#include "fedfence/stats.hpp"

using namespace fedfence;

namespace {

// Independent oracle for the upper regularized gamma function at half-integer
// and integer orders, built only on erfc/exp and the one-step recurrence
// Q(a+1, x) = Q(a, x) + x^a e^{-x} / Gamma(a+1). No series, no continued
// fraction, so it cannot share a bug with the implementation under test.
double oracle_gamma_q(double a2, double x) {
  // a2 = 2a must be a positive integer (dof of a chi-square, in half units).
  double a, q;
  if (static_cast<int>(a2) % 2 == 0) {
    a = 1.0;
    q = std::exp(-x);  // Q(1, x)
  } else {
    a = 0.5;
    q = std::erfc(std::sqrt(x));  // Q(1/2, x)
  }
  while (2.0 * a + 0.5 < a2) {
    q += std::pow(x, a) * std::exp(-x) / std::tgamma(a + 1.0);
    a += 1.0;
  }
  return q;
}

}  // namespace

TEST_CASE("stats: moments of a hand-computed symmetric sample") {
  auto m = summarize_moments({1.0, 2.0, 3.0, 4.0});
  CHECK(m.count == 4);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.variance == doctest::Approx(1.25));
  CHECK(m.skewness == doctest::Approx(0.0));
  CHECK(m.excess_kurtosis == doctest::Approx(-1.36));
}

TEST_CASE("stats: moments of a Bernoulli sample match closed forms") {
  // {0,0,0,1} is Bernoulli(1/4): skew (1-2p)/sqrt(p(1-p)), exkurt
  // (1-6p(1-p))/(p(1-p)).
  auto m = summarize_moments({0.0, 0.0, 0.0, 1.0});
  CHECK(m.mean == doctest::Approx(0.25));
  CHECK(m.variance == doctest::Approx(0.1875));
  CHECK(m.skewness == doctest::Approx(2.0 / std::sqrt(3.0)));
  CHECK(m.excess_kurtosis == doctest::Approx(-2.0 / 3.0));
}

TEST_CASE("stats: moments are translation invariant beyond the mean") {
  std::vector<double> base = {0.3, -1.2, 2.7, 0.05, -0.9, 1.4};
  std::vector<double> shifted = base;
  for (auto& x : shifted) x += 1000.0;
  auto a = summarize_moments(base);
  auto b = summarize_moments(shifted);
  CHECK(b.mean == doctest::Approx(a.mean + 1000.0));
  CHECK(b.variance == doctest::Approx(a.variance).epsilon(1e-6));
  CHECK(b.skewness == doctest::Approx(a.skewness).epsilon(1e-4));
  CHECK(b.excess_kurtosis == doctest::Approx(a.excess_kurtosis).epsilon(1e-4));
}

TEST_CASE("stats: moments need at least two samples") {
  CHECK_THROWS_AS(summarize_moments({}), std::invalid_argument);
  CHECK_THROWS_AS(summarize_moments({1.0}), std::invalid_argument);
  // Constant samples: zero variance, moments left at their defaults.
  auto m = summarize_moments({2.0, 2.0, 2.0});
  CHECK(m.variance == 0.0);
  CHECK(m.skewness == 0.0);
  CHECK(m.excess_kurtosis == 0.0);
}

TEST_CASE("stats: gamma_q against the recurrence oracle") {
  // Cover both internal branches: series (x < a + 1) and continued fraction.
  for (double dof : {1.0, 2.0, 3.0, 4.0, 5.0, 8.0, 15.0, 16.0, 31.0}) {
    for (double x : {0.05, 0.4, 1.3, 3.25, 7.0, 20.0, 45.0}) {
      double got = gamma_q(dof / 2.0, x);
      double want = oracle_gamma_q(dof, x);
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
  }
}

TEST_CASE("stats: gamma_q frozen reference values") {
  // Anchors computed with 30-digit arbitrary-precision arithmetic.
  CHECK(gamma_q(2.5, 1.3) == doctest::Approx(0.7613652678450139).epsilon(1e-12));
  CHECK(gamma_q(0.5, 2.0) == doctest::Approx(0.04550026389635842).epsilon(1e-12));
  CHECK(gamma_q(7.5, 3.25) == doctest::Approx(0.97007103884631).epsilon(1e-12));
}

TEST_CASE("stats: gamma_q edge cases and validation") {
  CHECK(gamma_q(1.0, 0.0) == 1.0);
  CHECK(gamma_q(3.0, 1e6) == doctest::Approx(0.0));
  CHECK_THROWS_AS(gamma_q(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_q(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(gamma_q(1.0, -0.5), std::invalid_argument);
}

TEST_CASE("stats: chi_square_sf frozen references") {
  CHECK(chi_square_sf(0.8, 3.0) ==
        doctest::Approx(0.8494670333918255).epsilon(1e-12));
  CHECK(chi_square_sf(25.0, 16.0) ==
        doctest::Approx(0.06982546318404755).epsilon(1e-12));
  // The classic 5% critical value of chi-square with one degree of freedom.
  CHECK(chi_square_sf(3.841, 1.0) ==
        doctest::Approx(0.0500136837639567).epsilon(1e-10));
  // dof = 2 reduces to exp(-x/2) exactly.
  for (double x : {0.1, 1.0, 4.0, 9.0})
    CHECK(chi_square_sf(x, 2.0) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-12));
  CHECK(chi_square_sf(0.0, 5.0) == 1.0);
  CHECK(chi_square_sf(-3.0, 5.0) == 1.0);
}

TEST_CASE("stats: chi_square_uniform on a hand-worked histogram") {
  // expected = 10 per bin; statistic = (4 + 4 + 0 + 0) / 10 = 0.8, dof 3.
  auto r = chi_square_uniform({12, 8, 10, 10});
  CHECK(r.statistic == doctest::Approx(0.8));
  CHECK(r.dof == 3.0);
  CHECK(r.p_value == doctest::Approx(0.8494670333918255).epsilon(1e-10));

  auto flat = chi_square_uniform({25, 25, 25, 25});
  CHECK(flat.statistic == 0.0);
  CHECK(flat.p_value == 1.0);

  // A grossly skewed histogram must be flagged.
  auto bad = chi_square_uniform({1000, 10, 10, 10});
  CHECK(bad.p_value < 1e-12);
}

TEST_CASE("stats: chi_square_uniform validation") {
  CHECK_THROWS_AS(chi_square_uniform({}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_uniform({5}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_uniform({0, 0, 0}), std::invalid_argument);
}

TEST_CASE("stats: chi_square_two_sample basics") {
  // Identical histograms: statistic exactly zero.
  auto same = chi_square_two_sample({7, 9, 4, 12}, {7, 9, 4, 12});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);

  // Proportional histograms also give zero: the scaling weights cancel.
  auto prop = chi_square_two_sample({5, 10, 15}, {10, 20, 30});
  CHECK(prop.statistic == doctest::Approx(0.0));

  // Disjoint mass concentrates the statistic.
  auto far = chi_square_two_sample({100, 0, 0}, {0, 0, 100});
  CHECK(far.p_value < 1e-12);
}

TEST_CASE("stats: chi_square_two_sample drops mutually empty bins") {
  // Bins 1 and 3 are empty in both; dof = occupied - 1 = 2.
  auto r = chi_square_two_sample({5, 0, 5, 0, 6}, {4, 0, 6, 0, 6});
  CHECK(r.dof == 2.0);
}

TEST_CASE("stats: chi_square_two_sample validation") {
  CHECK_THROWS_AS(chi_square_two_sample({1, 2}, {1, 2, 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(chi_square_two_sample({1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_two_sample({0, 0}, {1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(chi_square_two_sample({1, 1}, {0, 0}), std::invalid_argument);
  // Only one occupied bin after dropping: not enough structure to test.
  CHECK_THROWS_AS(chi_square_two_sample({5, 0}, {6, 0}), std::invalid_argument);
}
