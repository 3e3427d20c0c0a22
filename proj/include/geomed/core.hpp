#ifndef GEOMED_CORE_HPP
#define GEOMED_CORE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomed {

// Dense real d-vector. Entries are expected finite; see require_finite().
using Vector = Eigen::VectorXd;
using VectorView = Eigen::Map<const Eigen::VectorXd>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what);
void require_finite(const Eigen::Ref<const Vector>& x, const char* what);

double norm(const Eigen::Ref<const Vector>& x);

// Threshold under which two points are treated as coincident.
inline double zero_threshold(double scale_norm) {
  return 1e-12 * (scale_norm > 1.0 ? scale_norm : 1.0);
}

// n points of a common dimension, stored contiguously row-major.
class Dataset {
 public:
  Dataset(std::vector<double> values, std::size_t dim);
  explicit Dataset(const std::vector<Vector>& points);

  std::size_t size() const { return n_; }
  std::size_t dim() const { return dim_; }

  VectorView row(std::size_t i) const {
    return VectorView(values_.data() + i * dim_, static_cast<Eigen::Index>(dim_));
  }
  std::span<const double> values() const { return values_; }

  // Coordinate-wise mean.
  Vector mean() const;

 private:
  std::vector<double> values_;
  std::size_t n_;
  std::size_t dim_;
};

// gamma_n = c_gamma * n^{-alpha}, 1/2 < alpha < 1.
class StepSchedule {
 public:
  StepSchedule(double c_gamma, double alpha);

  double c_gamma() const { return c_gamma_; }
  double alpha() const { return alpha_; }

 private:
  double c_gamma_;
  double alpha_;
};

double step_size(const StepSchedule& schedule, std::uint64_t n);

}  // namespace geomed

#endif  // GEOMED_CORE_HPP
