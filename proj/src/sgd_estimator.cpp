#include "geomed/sgd_estimator.hpp"

#include "geomed/parallel.hpp"
#include "geomed/rng.hpp"
#include "geomed/static_solver.hpp"

#include <chrono>
#include <cmath>
#include <vector>

namespace geomed {

namespace {

void require_direction(const Vector& v) {
  require_finite(v, "quantile direction");
  if (!(v.norm() < 1.0)) {
    throw std::invalid_argument("quantile direction must satisfy ||v|| < 1");
  }
}

Vector direction_for(const FitConfig& config, std::size_t dim) {
  if (config.v.size() == 0) return Vector::Zero(static_cast<Eigen::Index>(dim));
  require_same_dim(config.v.size(), static_cast<Eigen::Index>(dim), "FitConfig.v");
  return config.v;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

SgdState init_state(Vector z0, const StepSchedule& schedule, Vector v) {
  require_same_dim(z0.size(), v.size(), "init_state");
  if (z0.size() == 0) throw DimensionError("init_state: empty vector");
  require_finite(z0, "init_state");
  require_direction(v);
  const auto d = z0.size();
  return SgdState{std::move(z0), Vector::Zero(d), 0, schedule, std::move(v)};
}

void sgd_step_inplace(SgdState& state, const Eigen::Ref<const Vector>& x) {
  const std::uint64_t n = state.count + 1;
  const double gamma = step_size(state.schedule, n);
  const Eigen::Index d = state.z.size();
  double* z = state.z.data();
  const double* v = state.v.data();

  double dist2 = 0.0;
  double z2 = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double diff = x[j] - z[j];
    dist2 += diff * diff;
    z2 += z[j] * z[j];
  }
  const double dist = std::sqrt(dist2);
  if (dist <= zero_threshold(std::sqrt(z2))) {
    for (Eigen::Index j = 0; j < d; ++j) z[j] += gamma * v[j];
  } else {
    for (Eigen::Index j = 0; j < d; ++j) z[j] += gamma * ((x[j] - z[j]) / dist + v[j]);
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  double* z_bar = state.z_bar.data();
  for (Eigen::Index j = 0; j < d; ++j) z_bar[j] += (z[j] - z_bar[j]) * inv_n;
  state.count = n;
}

SgdState sgd_step(SgdState state, const Eigen::Ref<const Vector>& x) {
  require_same_dim(x.size(), state.z.size(), "sgd_step");
  require_finite(x, "sgd_step");
  sgd_step_inplace(state, x);
  return state;
}

void validate(const FitConfig& config) {
  if (config.num_starts < 1) throw std::invalid_argument("FitConfig: num_starts must be >= 1");
  if (!(config.init_cap > 0.0)) throw std::invalid_argument("FitConfig: init_cap must be positive");
  if (config.epochs < 1) throw std::invalid_argument("FitConfig: epochs must be >= 1");
  if (config.v.size() != 0) require_direction(config.v);
}

bool DatasetSource::next(Vector& out) {
  if (pos_ >= data_.size()) return false;
  out = data_.row(pos_++);
  return true;
}

Vector truncate_start(const Eigen::Ref<const Vector>& x, double cap) {
  if (x.norm() <= cap) return x;
  return Vector::Zero(x.size());
}

EstimateReport fit_stream(ObservationSource& source, const FitConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();

  Vector x;
  if (!source.next(x)) throw DataError("fit_stream: empty stream");
  require_finite(x, "fit_stream");
  const auto d = x.size();
  SgdState state = init_state(truncate_start(x, config.init_cap), config.schedule,
                              direction_for(config, static_cast<std::size_t>(d)));
  std::uint64_t observations = 1;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch > 0 && !source.rewind()) {
      throw std::invalid_argument("fit_stream: multiple epochs need a replayable source");
    }
    while (source.next(x)) {
      require_same_dim(x.size(), d, "fit_stream");
      require_finite(x, "fit_stream");
      sgd_step_inplace(state, x);
      ++observations;
    }
  }

  EstimateReport report;
  // A one-element stream never steps; the estimate is then the start itself.
  report.estimate = state.count == 0 ? state.z : state.z_bar;
  report.observations = observations;
  report.method = "averaged-sgd";
  if (source.rewind()) {
    double total = 0.0;
    std::uint64_t n = 0;
    while (source.next(x)) {
      total += (x - report.estimate).norm() - x.norm() + (x - report.estimate).dot(state.v);
      ++n;
    }
    report.empirical_loss = total / static_cast<double>(n);
  }
  report.elapsed_seconds = seconds_since(start);
  return report;
}

EstimateReport fit_stream(const Dataset& data, const FitConfig& config) {
  DatasetSource source(data);
  return fit_stream(source, config);
}

EstimateReport multi_start_fit(const Dataset& data, const FitConfig& config) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  const Vector v = direction_for(config, data.dim());

  std::vector<Vector> estimates(config.num_starts);
  std::vector<double> losses(config.num_starts);
  parallel_for(config.num_starts, [&](std::size_t k) {
    Rng rng = Rng::split(config.seed, k);
    const auto first = static_cast<std::size_t>(rng.uniform_index(data.size()));
    SgdState state = init_state(truncate_start(data.row(first), config.init_cap), config.schedule, v);
    // The start is itself a sample point: it counts as the first observation.
    state.z_bar = state.z;
    state.count = 1;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (std::size_t i = 0; i < data.size(); ++i) sgd_step_inplace(state, data.row(i));
    }
    losses[k] = empirical_quantile_loss(state.z_bar, v, data);
    estimates[k] = std::move(state.z_bar);
  });

  std::size_t best = 0;
  for (std::size_t k = 1; k < config.num_starts; ++k) {
    if (losses[k] < losses[best]) best = k;
  }

  EstimateReport report;
  report.estimate = std::move(estimates[best]);
  report.empirical_loss = losses[best];
  report.observations = static_cast<std::uint64_t>(data.size()) * config.epochs;
  report.method = "averaged-sgd-multistart";
  report.start_index = best;
  report.elapsed_seconds = seconds_since(start);
  return report;
}

double default_c_gamma(const Dataset& data) {
  const Vector centre = data.mean();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) total += (data.row(i) - centre).norm();
  const double c = total / static_cast<double>(data.size());
  // Degenerate data (all points equal) still needs a valid schedule.
  return c > 0.0 ? c : 1.0;
}

}  // namespace geomed
