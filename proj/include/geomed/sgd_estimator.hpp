#ifndef GEOMED_SGD_ESTIMATOR_HPP
#define GEOMED_SGD_ESTIMATOR_HPP

#include "geomed/core.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace geomed {

// Online averaged stochastic gradient estimator of the geometric median, or
// of the geometric quantile in direction v (||v|| < 1; v = 0 is the median).
//
//   z_{n}     = z_{n-1} + gamma_n * ((x_n - z_{n-1}) / ||x_n - z_{n-1}|| + v)
//   z_bar_{n} = z_bar_{n-1} + (z_n - z_bar_{n-1}) / n,   z_bar_0 = 0
//
// When x_n coincides with z_{n-1} the unit-direction term is dropped and only
// gamma_n * v is applied.
struct SgdState {
  Vector z;
  Vector z_bar;
  std::uint64_t count = 0;
  StepSchedule schedule;
  Vector v;
};

SgdState init_state(Vector z0, const StepSchedule& schedule, Vector v);

// Pure transition: returns the state after consuming x.
SgdState sgd_step(SgdState state, const Eigen::Ref<const Vector>& x);

// Same transition, updating the state in place. Does not validate x.
void sgd_step_inplace(SgdState& state, const Eigen::Ref<const Vector>& x);

struct FitConfig {
  StepSchedule schedule{1.0, 0.75};
  // Quantile direction; empty means the zero vector of the data dimension.
  Vector v;
  std::size_t num_starts = 10;
  // Starting points with norm above init_cap are replaced by the zero vector.
  double init_cap = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  // Passes over a finite dataset; the step counter keeps growing across passes.
  std::size_t epochs = 1;
};

void validate(const FitConfig& config);

struct EstimateReport {
  Vector estimate;
  // Absent when the data could not be replayed (single-pass streaming).
  std::optional<double> empirical_loss;
  std::uint64_t observations = 0;
  double elapsed_seconds = 0.0;
  std::string method;
  std::optional<std::size_t> start_index;
  // Static solver only.
  std::optional<std::size_t> iterations;
  std::optional<bool> converged;
};

// Pull-based source of observations.
class ObservationSource {
 public:
  virtual ~ObservationSource() = default;
  // Writes the next observation into out and returns true, or returns false
  // once the source is exhausted.
  virtual bool next(Vector& out) = 0;
  // Restarts from the first observation. Returns false if the source cannot
  // be replayed.
  virtual bool rewind() { return false; }
};

class DatasetSource : public ObservationSource {
 public:
  explicit DatasetSource(const Dataset& data) : data_(data) {}
  bool next(Vector& out) override;
  bool rewind() override {
    pos_ = 0;
    return true;
  }

 private:
  const Dataset& data_;
  std::size_t pos_ = 0;
};

// Truncated starting point: x if ||x|| <= cap, else the zero vector.
Vector truncate_start(const Eigen::Ref<const Vector>& x, double cap);

// Single chain over a stream. The first observation is the starting point
// (after truncation); every later observation is one step. The estimate is
// the final running average. Empirical loss is computed by a second pass
// when the source can be rewound.
EstimateReport fit_stream(ObservationSource& source, const FitConfig& config);
EstimateReport fit_stream(const Dataset& data, const FitConfig& config);

// num_starts chains, each started at a uniformly drawn sample point and run
// over the whole dataset in stored order. The starting point enters the
// average as observation 1, so the first pass uses gamma_2 .. gamma_{n+1}. The chain whose average has the
// lowest empirical loss wins; ties go to the lowest start index.
EstimateReport multi_start_fit(const Dataset& data, const FitConfig& config);

// Mean distance to the coordinate-wise mean, used as the default c_gamma.
double default_c_gamma(const Dataset& data);

}  // namespace geomed

#endif  // GEOMED_SGD_ESTIMATOR_HPP
