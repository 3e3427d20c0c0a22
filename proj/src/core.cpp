#include "geomed/core.hpp"

#include <cmath>
#include <sstream>

namespace geomed {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw DimensionError(os.str());
  }
}

void require_finite(const Eigen::Ref<const Vector>& x, const char* what) {
  if (!x.allFinite()) {
    throw DataError(std::string(what) + ": non-finite entry");
  }
}

double norm(const Eigen::Ref<const Vector>& x) { return x.norm(); }

Dataset::Dataset(std::vector<double> values, std::size_t dim)
    : values_(std::move(values)), n_(0), dim_(dim) {
  if (dim_ == 0) throw DimensionError("Dataset: dimension must be positive");
  if (values_.empty()) throw DataError("Dataset: no points");
  if (values_.size() % dim_ != 0) {
    throw DimensionError("Dataset: value count is not a multiple of the dimension");
  }
  n_ = values_.size() / dim_;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      std::ostringstream os;
      os << "Dataset: non-finite value at row " << k / dim_ << ", column " << k % dim_;
      throw DataError(os.str());
    }
  }
}

namespace {

std::vector<double> flatten(const std::vector<Vector>& points) {
  if (points.empty()) throw DataError("Dataset: no points");
  const auto d = points.front().size();
  std::vector<double> out;
  out.reserve(points.size() * static_cast<std::size_t>(d));
  for (const auto& p : points) {
    require_same_dim(p.size(), d, "Dataset");
    out.insert(out.end(), p.data(), p.data() + p.size());
  }
  return out;
}

}  // namespace

Dataset::Dataset(const std::vector<Vector>& points)
    : Dataset(flatten(points), points.empty() ? 1 : static_cast<std::size_t>(points.front().size())) {}

Vector Dataset::mean() const {
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < n_; ++i) acc += row(i);
  return acc / static_cast<double>(n_);
}

StepSchedule::StepSchedule(double c_gamma, double alpha) : c_gamma_(c_gamma), alpha_(alpha) {
  if (!(c_gamma > 0.0) || !std::isfinite(c_gamma)) {
    throw std::invalid_argument("StepSchedule: c_gamma must be positive and finite");
  }
  if (!(alpha > 0.5 && alpha < 1.0)) {
    throw std::invalid_argument("StepSchedule: alpha must lie in (1/2, 1)");
  }
}

double step_size(const StepSchedule& schedule, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("step_size: n must be >= 1");
  return schedule.c_gamma() * std::pow(static_cast<double>(n), -schedule.alpha());
}

}  // namespace geomed
