#include "geomed/static_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace geomed {

void validate(const SolverConfig& config) {
  if (!(config.tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
  if (config.max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
}

double empirical_loss(const Eigen::Ref<const Vector>& a, const Dataset& data) {
  require_same_dim(a.size(), static_cast<Eigen::Index>(data.dim()), "empirical_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    total += (x - a).norm() - x.norm();
  }
  return total / static_cast<double>(data.size());
}

double empirical_quantile_loss(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& v,
                               const Dataset& data) {
  require_same_dim(a.size(), static_cast<Eigen::Index>(data.dim()), "empirical_quantile_loss");
  require_same_dim(v.size(), a.size(), "empirical_quantile_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto x = data.row(i);
    total += (x - a).norm() - x.norm() + (x - a).dot(v);
  }
  return total / static_cast<double>(data.size());
}

Vector empirical_subgradient(const Eigen::Ref<const Vector>& a, const Dataset& data) {
  require_same_dim(a.size(), static_cast<Eigen::Index>(data.dim()), "empirical_subgradient");
  const double eps = zero_threshold(a.norm());
  Vector acc = Vector::Zero(a.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector diff = data.row(i) - a;
    const double dist = diff.norm();
    if (dist > eps) acc += diff / dist;
  }
  return -acc / static_cast<double>(data.size());
}

AtomCondition atom_condition(const Eigen::Ref<const Vector>& y, const Dataset& data) {
  require_same_dim(y.size(), static_cast<Eigen::Index>(data.dim()), "atom_condition");
  const double eps = zero_threshold(y.norm());
  Vector acc = Vector::Zero(y.size());
  std::size_t at_y = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector diff = data.row(i) - y;
    const double dist = diff.norm();
    if (dist > eps) {
      acc += diff / dist;
    } else {
      ++at_y;
    }
  }
  const auto n = static_cast<double>(data.size());
  return {acc.norm() / n, static_cast<double>(at_y) / n};
}

namespace {

struct WeightedPoints {
  Eigen::MatrixXd points;  // d x k, one distinct point per column
  Eigen::VectorXd weights;
};

WeightedPoints aggregate(const Dataset& data) {
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto values = data.values();
  auto row_less = [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(values.begin() + a * d, values.begin() + (a + 1) * d,
                                        values.begin() + b * d, values.begin() + (b + 1) * d);
  };
  std::sort(order.begin(), order.end(), row_less);

  std::vector<std::size_t> firsts;
  std::vector<double> counts;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && !row_less(order[k - 1], order[k])) {
      counts.back() += 1.0;
    } else {
      firsts.push_back(order[k]);
      counts.push_back(1.0);
    }
  }

  WeightedPoints out;
  out.points.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(firsts.size()));
  out.weights.resize(static_cast<Eigen::Index>(firsts.size()));
  for (std::size_t k = 0; k < firsts.size(); ++k) {
    out.points.col(static_cast<Eigen::Index>(k)) = data.row(firsts[k]);
    out.weights[static_cast<Eigen::Index>(k)] = counts[k];
  }
  return out;
}

}  // namespace

EstimateReport vardi_zhang(const Dataset& data, const SolverConfig& config, const std::optional<Vector>& z0) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  if (z0) {
    require_same_dim(z0->size(), static_cast<Eigen::Index>(data.dim()), "vardi_zhang");
    require_finite(*z0, "vardi_zhang");
  }

  const WeightedPoints wp = aggregate(data);
  const Eigen::Index d = wp.points.rows();
  const Eigen::Index k = wp.points.cols();

  Vector y = z0 ? *z0 : data.mean();
  Vector numerator(d);
  Vector resultant(d);
  Vector next(d);
  bool converged = false;
  std::size_t iter = 0;

  while (iter < config.max_iter) {
    ++iter;
    const double eps = zero_threshold(y.norm());
    numerator.setZero();
    resultant.setZero();
    double denominator = 0.0;
    double eta = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto p = wp.points.col(j);
      const double dist = (p - y).norm();
      const double w = wp.weights[j];
      if (dist <= eps) {
        eta += w;
        continue;
      }
      numerator.noalias() += (w / dist) * p;
      resultant.noalias() += (w / dist) * (p - y);
      denominator += w / dist;
    }
    if (denominator == 0.0) {
      // Every point sits on y.
      converged = true;
      break;
    }

    const double r = resultant.norm();
    if (eta == 0.0) {
      next = numerator / denominator;
    } else if (r <= eta) {
      converged = true;
      break;
    } else {
      const double ratio = eta / r;
      next = (1.0 - ratio) * (numerator / denominator) + ratio * y;
    }

    const double step = (next - y).norm();
    const double scale = std::max(1.0, y.norm());
    y.swap(next);
    if (step <= config.tol * scale) {
      converged = true;
      break;
    }
  }

  // Iterates approach an optimal data point only in the limit. If the
  // closest distinct point satisfies r <= eta it is the exact minimiser.
  if (k > 0) {
    Eigen::Index nearest = 0;
    (wp.points.colwise() - y).colwise().squaredNorm().minCoeff(&nearest);
    const Vector atom = wp.points.col(nearest);
    if ((atom - y).norm() > zero_threshold(y.norm())) {
      const AtomCondition c = atom_condition(atom, data);
      if (c.eta > 0.0 && c.r <= c.eta) {
        y = atom;
        converged = true;
      }
    }
  }

  EstimateReport report;
  report.estimate = std::move(y);
  report.empirical_loss = empirical_loss(report.estimate, data);
  report.observations = data.size();
  report.method = "vardi-zhang";
  report.iterations = iter;
  report.converged = converged;
  report.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

Vector brute_force_oracle(const Dataset& data, const Box& bounds, std::size_t resolution,
                          const std::optional<Vector>& v) {
  const auto d = static_cast<Eigen::Index>(data.dim());
  if (d > 3) throw DimensionError("brute_force_oracle: dimension above 3");
  require_same_dim(bounds.lower.size(), d, "brute_force_oracle");
  require_same_dim(bounds.upper.size(), d, "brute_force_oracle");
  if (resolution < 1 || resolution > 2001) {
    throw std::invalid_argument("brute_force_oracle: resolution must be in [1, 2001]");
  }
  const Vector direction = v ? *v : Vector::Zero(d);
  require_same_dim(direction.size(), d, "brute_force_oracle");

  auto coordinate = [&](Eigen::Index axis, std::size_t i) {
    if (resolution == 1) return 0.5 * (bounds.lower[axis] + bounds.upper[axis]);
    const double t = static_cast<double>(i) / static_cast<double>(resolution - 1);
    return bounds.lower[axis] + t * (bounds.upper[axis] - bounds.lower[axis]);
  };

  std::size_t total = 1;
  for (Eigen::Index a = 0; a < d; ++a) total *= resolution;

  Vector best(d);
  Vector candidate(d);
  double best_loss = std::numeric_limits<double>::infinity();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (Eigen::Index a = 0; a < d; ++a) {
      candidate[a] = coordinate(a, rest % resolution);
      rest /= resolution;
    }
    const double loss = empirical_quantile_loss(candidate, direction, data);
    if (loss < best_loss) {
      best_loss = loss;
      best = candidate;
    }
  }
  return best;
}

}  // namespace geomed
