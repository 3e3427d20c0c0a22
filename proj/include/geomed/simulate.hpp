#ifndef GEOMED_SIMULATE_HPP
#define GEOMED_SIMULATE_HPP

#include "geomed/analysis.hpp"
#include "geomed/core.hpp"
#include "geomed/rng.hpp"
#include "geomed/sgd_estimator.hpp"
#include "geomed/static_solver.hpp"

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

namespace geomed {

// Multivariate normal law. Construction Cholesky-factors the covariance and
// throws if it is not positive definite.
class GaussianSpec {
 public:
  GaussianSpec(Vector mean, SymOperator covariance);

  const Vector& mean() const { return mean_; }
  const SymOperator& covariance() const { return covariance_; }
  const Eigen::MatrixXd& cholesky_factor() const { return lower_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }

  // One draw: mean + L z with z standard normal.
  void draw(Rng& rng, Vector& out) const;

 private:
  Vector mean_;
  SymOperator covariance_;
  Eigen::MatrixXd lower_;
};

// Centred 3-d Gaussian of the reference simulation study,
// covariance [[3, 2, 1], [2, 4, -0.5], [1, -0.5, 2]].
GaussianSpec reference_gaussian();

// Centred standard normal in dimension d.
GaussianSpec standard_gaussian(std::size_t d);

Dataset sample_gaussian(const GaussianSpec& spec, std::size_t n, std::uint64_t seed);

// Streams fresh draws from a Gaussian; never exhausts unless a limit is set.
class GaussianSource : public ObservationSource {
 public:
  GaussianSource(const GaussianSpec& spec, std::uint64_t seed, std::uint64_t limit);
  bool next(Vector& out) override;

 private:
  const GaussianSpec& spec_;
  Rng rng_;
  std::uint64_t remaining_;
};

struct QuartileRow {
  std::string label;
  std::size_t n = 0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Linear-interpolation sample quantile (Hyndman-Fan type 7), p in [0, 1].
double quantile(std::vector<double> values, double p);
QuartileRow quartiles(std::string label, std::size_t n, const std::vector<double>& values);

struct Table1Options {
  double alpha = 0.75;
  std::size_t num_starts = 10;
  bool include_vardi_zhang = true;
  SolverConfig solver{};
};

// For each sample size and replication a fresh sample of the reference
// Gaussian is drawn; every c_gamma in the grid and the Vardi-Zhang solver
// are evaluated on that same sample. Rows are grouped by estimator, one
// QuartileRow per (estimator, n), with error measured against m = 0.
std::vector<QuartileRow> replicate_table1(const std::vector<double>& c_gamma_grid,
                                          const std::vector<std::size_t>& sample_sizes, std::size_t reps,
                                          std::uint64_t seed, const Table1Options& options = {});

std::string c_gamma_label(double c_gamma);
inline constexpr const char* kVardiZhangLabel = "vardi-zhang";

struct TimedBenchmarkReport {
  std::uint64_t sgd_n = 0;
  std::uint64_t vz_n = 0;
  // Medians over the trials.
  double sgd_error = 0.0;
  double vz_error = 0.0;
  std::vector<double> sgd_errors;
  std::vector<double> vz_errors;
};

// Capacity phase (single thread): SGD streams fresh draws until the budget
// runs out; the Vardi-Zhang size is the largest n whose sample generation
// plus full solve fits in the budget (doubling, then bisection). Accuracy
// phase: `trials` fresh samples at the achieved sizes, errors against the
// spec mean.
TimedBenchmarkReport timed_benchmark(std::chrono::duration<double> budget, const GaussianSpec& spec,
                                     std::uint64_t seed, std::size_t trials = 1, double c_gamma = 5.0);

struct CltReport {
  SymOperator empirical_cov;
  SymOperator sandwich;
  double rel_frobenius_gap = 0.0;
};

// reps single-chain fits of n fresh draws; sample covariance of
// sqrt(n)(z_bar_n - m) against the sandwich evaluated at the true m on a
// reference sample of max(10 n, 100000) draws.
CltReport clt_experiment(const GaussianSpec& spec, std::size_t n, std::size_t reps, const FitConfig& config,
                         std::uint64_t seed);

struct RateReport {
  std::vector<std::uint64_t> checkpoints;
  std::vector<double> mse_iterate;   // E||z_n - m||^2
  std::vector<double> mse_average;   // E||z_bar_n - m||^2
  // Slope of log(MSE) - log(log n) against log n for the raw iterate.
  double slope = 0.0;
  // Slope of log(MSE) against log n for the averaged iterate.
  double averaged_slope = 0.0;
};

RateReport rate_experiment(const GaussianSpec& spec, const std::vector<std::uint64_t>& checkpoints,
                           std::size_t reps, const FitConfig& config, std::uint64_t seed);

// Least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace geomed

#endif  // GEOMED_SIMULATE_HPP
