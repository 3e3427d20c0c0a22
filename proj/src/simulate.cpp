#include "geomed/simulate.hpp"

#include "geomed/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace geomed {

namespace {

using Clock = std::chrono::steady_clock;

// Stream keys are (purpose, group, index) packed into one 64-bit value.
constexpr std::uint64_t stream_key(std::uint64_t purpose, std::uint64_t group, std::uint64_t index) {
  return (purpose << 56) ^ (group << 32) ^ index;
}

enum Purpose : std::uint64_t {
  kSample = 1,
  kStarts = 2,
  kSgdStream = 3,
  kVzSample = 4,
  kReference = 5,
};

}  // namespace

GaussianSpec::GaussianSpec(Vector mean, SymOperator covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  require_same_dim(mean_.size(), covariance_.dim(), "GaussianSpec");
  require_finite(mean_, "GaussianSpec");
  const Eigen::LLT<Eigen::MatrixXd> llt(covariance_.matrix());
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("GaussianSpec: covariance is not positive definite");
  }
  lower_ = llt.matrixL();
}

void GaussianSpec::draw(Rng& rng, Vector& out) const {
  const Eigen::Index d = mean_.size();
  out.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) out[j] = rng.normal();
  // In-place L z, bottom row first so each row still sees the untouched z_j, j <= i.
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j <= i; ++j) acc += lower_(i, j) * out[j];
    out[i] = acc + mean_[i];
  }
}

GaussianSpec reference_gaussian() {
  Eigen::Matrix3d cov;
  cov << 3.0, 2.0, 1.0,
         2.0, 4.0, -0.5,
         1.0, -0.5, 2.0;
  return GaussianSpec(Vector::Zero(3), SymOperator(cov));
}

GaussianSpec standard_gaussian(std::size_t d) {
  const auto dim = static_cast<Eigen::Index>(d);
  return GaussianSpec(Vector::Zero(dim), SymOperator(Eigen::MatrixXd::Identity(dim, dim)));
}

Dataset sample_gaussian(const GaussianSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_gaussian: n must be >= 1");
  Rng rng(seed);
  const std::size_t d = spec.dim();
  std::vector<double> values(n * d);
  Vector x;
  for (std::size_t i = 0; i < n; ++i) {
    spec.draw(rng, x);
    std::copy(x.data(), x.data() + d, values.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return Dataset(std::move(values), d);
}

GaussianSource::GaussianSource(const GaussianSpec& spec, std::uint64_t seed, std::uint64_t limit)
    : spec_(spec), rng_(seed), remaining_(limit) {}

bool GaussianSource::next(Vector& out) {
  if (remaining_ == 0) return false;
  --remaining_;
  spec_.draw(rng_, out);
  return true;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile: no values");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

QuartileRow quartiles(std::string label, std::size_t n, const std::vector<double>& values) {
  return QuartileRow{std::move(label), n, quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

std::string c_gamma_label(double c_gamma) {
  std::ostringstream os;
  os << "c_gamma=" << c_gamma;
  return os.str();
}

std::vector<QuartileRow> replicate_table1(const std::vector<double>& c_gamma_grid,
                                          const std::vector<std::size_t>& sample_sizes, std::size_t reps,
                                          std::uint64_t seed, const Table1Options& options) {
  if (reps < 1) throw std::invalid_argument("replicate_table1: reps must be >= 1");
  const GaussianSpec spec = reference_gaussian();
  const std::size_t estimators = c_gamma_grid.size() + (options.include_vardi_zhang ? 1 : 0);

  // errors[size][estimator][rep]
  std::vector<std::vector<std::vector<double>>> errors(
      sample_sizes.size(), std::vector<std::vector<double>>(estimators, std::vector<double>(reps)));

  for (std::size_t s = 0; s < sample_sizes.size(); ++s) {
    const std::size_t n = sample_sizes[s];
    parallel_for(reps, [&](std::size_t r) {
      Rng keys = Rng::split(seed, stream_key(kSample, s, r));
      const Dataset data = sample_gaussian(spec, n, keys.next_u64());
      const std::uint64_t start_seed = keys.next_u64();
      for (std::size_t c = 0; c < c_gamma_grid.size(); ++c) {
        FitConfig config;
        config.schedule = StepSchedule(c_gamma_grid[c], options.alpha);
        config.num_starts = options.num_starts;
        config.seed = start_seed;
        errors[s][c][r] = estimation_error(multi_start_fit(data, config).estimate, spec.mean());
      }
      if (options.include_vardi_zhang) {
        errors[s][estimators - 1][r] = estimation_error(vardi_zhang(data, options.solver).estimate, spec.mean());
      }
    });
  }

  std::vector<QuartileRow> rows;
  for (std::size_t e = 0; e < estimators; ++e) {
    const std::string label = e < c_gamma_grid.size() ? c_gamma_label(c_gamma_grid[e]) : kVardiZhangLabel;
    for (std::size_t s = 0; s < sample_sizes.size(); ++s) {
      rows.push_back(quartiles(label, sample_sizes[s], errors[s][e]));
    }
  }
  return rows;
}

namespace {

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

// Wall time of generating n draws and solving with Vardi-Zhang.
double vz_solve_seconds(const GaussianSpec& spec, std::size_t n, std::uint64_t seed) {
  const auto start = Clock::now();
  const Dataset data = sample_gaussian(spec, n, seed);
  const auto report = vardi_zhang(data);
  (void)report;
  return seconds(Clock::now() - start);
}

}  // namespace

TimedBenchmarkReport timed_benchmark(std::chrono::duration<double> budget, const GaussianSpec& spec,
                                     std::uint64_t seed, std::size_t trials, double c_gamma) {
  const double limit = budget.count();
  if (!(limit > 0.0)) throw std::invalid_argument("timed_benchmark: budget must be positive");
  if (trials < 1) throw std::invalid_argument("timed_benchmark: trials must be >= 1");
  const StepSchedule schedule(c_gamma, 0.75);
  TimedBenchmarkReport report;

  {
    Rng rng = Rng::split(seed, stream_key(kSgdStream, 0, 0));
    Vector x;
    spec.draw(rng, x);
    SgdState state = init_state(x, schedule, Vector::Zero(x.size()));
    std::uint64_t n = 1;
    const auto start = Clock::now();
    for (;;) {
      for (int k = 0; k < 256; ++k) {
        spec.draw(rng, x);
        sgd_step_inplace(state, x);
      }
      n += 256;
      if (seconds(Clock::now() - start) >= limit) break;
    }
    report.sgd_n = n;
  }

  {
    std::uint64_t probe = 0;
    auto fits = [&](std::size_t n) {
      return vz_solve_seconds(spec, n, Rng::split(seed, stream_key(kVzSample, 0, probe++)).next_u64()) <= limit;
    };
    std::size_t lo = 0;
    std::size_t hi = 16;
    while (fits(hi)) {
      lo = hi;
      hi *= 2;
    }
    for (int step = 0; step < 6 && hi - lo > 1; ++step) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (fits(mid)) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    report.vz_n = std::max<std::size_t>(lo, 1);
  }

  report.sgd_errors.resize(trials);
  report.vz_errors.resize(trials);
  parallel_for(trials, [&](std::size_t t) {
    GaussianSource stream(spec, Rng::split(seed, stream_key(kSgdStream, 1, t)).next_u64(), report.sgd_n);
    FitConfig config;
    config.schedule = schedule;
    report.sgd_errors[t] = estimation_error(fit_stream(stream, config).estimate, spec.mean());
    const Dataset data =
        sample_gaussian(spec, report.vz_n, Rng::split(seed, stream_key(kVzSample, 1, t)).next_u64());
    report.vz_errors[t] = estimation_error(vardi_zhang(data).estimate, spec.mean());
  });
  report.sgd_error = quantile(report.sgd_errors, 0.5);
  report.vz_error = quantile(report.vz_errors, 0.5);
  return report;
}

CltReport clt_experiment(const GaussianSpec& spec, std::size_t n, std::size_t reps, const FitConfig& config,
                         std::uint64_t seed) {
  if (reps < 100) throw std::invalid_argument("clt_experiment: reps must be >= 100");
  if (n < 2) throw std::invalid_argument("clt_experiment: n must be >= 2");
  const Eigen::Index d = spec.mean().size();

  Eigen::MatrixXd scaled(d, static_cast<Eigen::Index>(reps));
  parallel_for(reps, [&](std::size_t r) {
    GaussianSource stream(spec, Rng::split(seed, stream_key(kSgdStream, 0, r)).next_u64(), n);
    const Vector est = fit_stream(stream, config).estimate;
    scaled.col(static_cast<Eigen::Index>(r)) = std::sqrt(static_cast<double>(n)) * (est - spec.mean());
  });

  const Vector centre = scaled.rowwise().mean();
  const Eigen::MatrixXd centred = scaled.colwise() - centre;
  const Eigen::MatrixXd cov = centred * centred.transpose() / static_cast<double>(reps - 1);

  const std::size_t ref_n = std::max<std::size_t>(10 * n, 100000);
  const Dataset reference = sample_gaussian(spec, ref_n, Rng::split(seed, stream_key(kReference, 0, 0)).next_u64());
  SymOperator sandwich = sandwich_covariance(reference, spec.mean());
  SymOperator empirical(cov);
  const double gap = (empirical.matrix() - sandwich.matrix()).norm() / sandwich.frobenius();
  return CltReport{std::move(empirical), std::move(sandwich), gap};
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols_slope: need >= 2 paired values");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

RateReport rate_experiment(const GaussianSpec& spec, const std::vector<std::uint64_t>& checkpoints,
                           std::size_t reps, const FitConfig& config, std::uint64_t seed) {
  if (reps < 100) throw std::invalid_argument("rate_experiment: reps must be >= 100");
  if (checkpoints.size() < 2) throw std::invalid_argument("rate_experiment: need >= 2 checkpoints");
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    if (checkpoints[k] < 2 || (k > 0 && checkpoints[k] <= checkpoints[k - 1])) {
      throw std::invalid_argument("rate_experiment: checkpoints must be increasing and >= 2");
    }
  }
  validate(config);
  const std::size_t m = checkpoints.size();
  const Vector v = config.v.size() == 0 ? Vector::Zero(spec.mean().size()) : config.v;

  std::vector<double> sq_iterate(reps * m);
  std::vector<double> sq_average(reps * m);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = Rng::split(seed, stream_key(kSgdStream, 0, r));
    Vector x;
    spec.draw(rng, x);
    SgdState state = init_state(truncate_start(x, config.init_cap), config.schedule, v);
    std::size_t next = 0;
    while (next < m) {
      spec.draw(rng, x);
      sgd_step_inplace(state, x);
      if (state.count == checkpoints[next]) {
        sq_iterate[r * m + next] = (state.z - spec.mean()).squaredNorm();
        sq_average[r * m + next] = (state.z_bar - spec.mean()).squaredNorm();
        ++next;
      }
    }
  });

  RateReport report;
  report.checkpoints = checkpoints;
  report.mse_iterate.assign(m, 0.0);
  report.mse_average.assign(m, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t k = 0; k < m; ++k) {
      report.mse_iterate[k] += sq_iterate[r * m + k];
      report.mse_average[k] += sq_average[r * m + k];
    }
  }
  std::vector<double> log_n(m);
  std::vector<double> y_iterate(m);
  std::vector<double> y_average(m);
  for (std::size_t k = 0; k < m; ++k) {
    report.mse_iterate[k] /= static_cast<double>(reps);
    report.mse_average[k] /= static_cast<double>(reps);
    const double ln = std::log(static_cast<double>(checkpoints[k]));
    log_n[k] = ln;
    y_iterate[k] = std::log(report.mse_iterate[k]) - std::log(ln);
    y_average[k] = std::log(report.mse_average[k]);
  }
  report.slope = ols_slope(log_n, y_iterate);
  report.averaged_slope = ols_slope(log_n, y_average);
  return report;
}

}  // namespace geomed
