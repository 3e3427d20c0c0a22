#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geomed/simulate.hpp"

#include <algorithm>
#include <cmath>

using namespace geomed;
using namespace std::chrono_literals;

TEST_CASE("sample_gaussian with identity covariance has a small mean") {
  const std::size_t n = 100000;
  const Dataset data = sample_gaussian(standard_gaussian(3), n, 1);
  CHECK(data.size() == n);
  CHECK(data.dim() == 3);
  const Vector mean = data.mean();
  for (int j = 0; j < 3; ++j) CHECK(std::abs(mean[j]) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sample_gaussian reproduces the reference covariance") {
  const std::size_t n = 100000;
  const GaussianSpec spec = reference_gaussian();
  const Dataset data = sample_gaussian(spec, n, 2);
  const Vector mean = data.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const Vector c = data.row(i) - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(n - 1);
  CHECK((cov - spec.covariance().matrix()).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("sample_gaussian is deterministic per seed") {
  const Dataset a = sample_gaussian(reference_gaussian(), 50, 3);
  const Dataset b = sample_gaussian(reference_gaussian(), 50, 3);
  const Dataset c = sample_gaussian(reference_gaussian(), 50, 4);
  CHECK(std::ranges::equal(a.values(), b.values()));
  CHECK_FALSE(std::ranges::equal(a.values(), c.values()));
}

TEST_CASE("GaussianSpec rejects non positive definite covariance") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS(GaussianSpec(Vector::Zero(2), SymOperator(m)));
  CHECK_THROWS(GaussianSpec(Vector::Zero(3), SymOperator(Eigen::MatrixXd::Identity(2, 2))));
}

TEST_CASE("GaussianSource honours its limit") {
  const GaussianSpec spec = standard_gaussian(2);
  GaussianSource source(spec, 5, 3);
  Vector x;
  int count = 0;
  while (source.next(x)) ++count;
  CHECK(count == 3);
  CHECK_FALSE(source.rewind());
}

TEST_CASE("quantile uses linear interpolation") {
  CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.25) == doctest::Approx(1.75));
  CHECK(quantile({7.0}, 0.75) == 7.0);
  CHECK(quantile({1.0, 5.0}, 0.0) == 1.0);
  CHECK(quantile({1.0, 5.0}, 1.0) == 5.0);
  CHECK_THROWS_AS(quantile({}, 0.5), std::invalid_argument);
  const QuartileRow row = quartiles("x", 3, {3.0, 1.0, 2.0, 10.0, 4.0});
  CHECK(row.q1 <= row.median);
  CHECK(row.median <= row.q3);
  CHECK(row.median == 3.0);
}

TEST_CASE("replicate_table1 is deterministic and ordered") {
  const std::vector<double> grid{0.6, 5.0};
  const std::vector<std::size_t> sizes{100, 800};
  const auto a = replicate_table1(grid, sizes, 40, 9);
  const auto b = replicate_table1(grid, sizes, 40, 9);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].median == b[i].median);
    CHECK(a[i].q1 <= a[i].median);
    CHECK(a[i].median <= a[i].q3);
  }
  CHECK(a[0].label == c_gamma_label(0.6));
  CHECK(a[4].label == kVardiZhangLabel);
  // Larger samples give smaller errors for each estimator.
  for (std::size_t i = 0; i < a.size(); i += 2) CHECK(a[i + 1].median < a[i].median);
}

TEST_CASE("replicate_table1 on small samples matches the known scale") {
  const auto rows = replicate_table1({5.0}, {2000}, 200, 10);
  CHECK(rows[0].median == doctest::Approx(0.06).epsilon(0.25));
  CHECK(rows[1].median == doctest::Approx(0.06).epsilon(0.25));
}

TEST_CASE("timed_benchmark orders the methods and grows with the budget") {
  const GaussianSpec spec = reference_gaussian();
  const TimedBenchmarkReport small = timed_benchmark(50ms, spec, 11, 3);
  const TimedBenchmarkReport large = timed_benchmark(200ms, spec, 11, 3);
  CHECK(small.sgd_n > small.vz_n);
  CHECK(large.sgd_n > small.sgd_n);
  CHECK(large.vz_n > small.vz_n);
  CHECK(small.sgd_errors.size() == 3);
  CHECK_THROWS_AS(timed_benchmark(0ms, spec, 1), std::invalid_argument);
}

TEST_CASE("clt_experiment on a small configuration") {
  FitConfig config;
  config.schedule = StepSchedule(5.0, 0.75);
  const CltReport r = clt_experiment(standard_gaussian(3), 2000, 400, config, 12);
  CHECK(r.rel_frobenius_gap < 0.3);
  CHECK(r.empirical_cov.dim() == 3);
  const CltReport again = clt_experiment(standard_gaussian(3), 2000, 400, config, 12);
  CHECK(again.rel_frobenius_gap == r.rel_frobenius_gap);
  CHECK_THROWS_AS(clt_experiment(standard_gaussian(3), 100, 99, config, 12), std::invalid_argument);
}

TEST_CASE("rate_experiment slopes on short runs") {
  FitConfig config;
  config.schedule = StepSchedule(5.0, 0.75);
  const RateReport r = rate_experiment(reference_gaussian(), {1000, 4000, 16000, 64000}, 100, config, 13);
  CHECK(r.mse_iterate.size() == 4);
  CHECK(r.slope < -0.5);
  CHECK(r.slope > -1.0);
  CHECK(r.averaged_slope < -0.7);
  CHECK_THROWS_AS(rate_experiment(reference_gaussian(), {100, 50}, 100, config, 1), std::invalid_argument);
}

TEST_CASE("ols_slope recovers a line") {
  CHECK(ols_slope({1.0, 2.0, 3.0}, {5.0, 3.0, 1.0}) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(ols_slope({1.0}, {2.0}), std::invalid_argument);
}
