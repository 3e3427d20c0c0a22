#ifndef GEOMED_STATIC_SOLVER_HPP
#define GEOMED_STATIC_SOLVER_HPP

#include "geomed/core.hpp"
#include "geomed/sgd_estimator.hpp"

#include <cstddef>
#include <optional>

namespace geomed {

struct SolverConfig {
  double tol = 1e-8;
  std::size_t max_iter = 10000;
};

void validate(const SolverConfig& config);

// (1/n) sum_i (||x_i - a|| - ||x_i||). Subtracting ||x_i|| keeps the value
// finite without moment assumptions and does not move the minimiser.
double empirical_loss(const Eigen::Ref<const Vector>& a, const Dataset& data);

// (1/n) sum_i (||x_i - a|| - ||x_i|| + <x_i - a, v>), minimised by the
// geometric quantile in direction v.
double empirical_quantile_loss(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& v,
                               const Dataset& data);

// -(1/n) sum over x_i != a of (x_i - a) / ||x_i - a||. Points coinciding with
// a contribute nothing.
Vector empirical_subgradient(const Eigen::Ref<const Vector>& a, const Dataset& data);

// Vardi-Zhang diagnostics at y, both on the 1/n scale: r is the norm of the
// summed unit directions to points other than y, eta the mass sitting on y.
// y is optimal iff r <= eta.
struct AtomCondition {
  double r = 0.0;
  double eta = 0.0;
};
AtomCondition atom_condition(const Eigen::Ref<const Vector>& y, const Dataset& data);

// Modified Weiszfeld iteration of Vardi and Zhang, robust to iterates landing
// on data points. Starts from z0 or the coordinate-wise mean. Duplicate points
// are merged into weights first. Not converging within max_iter is reported
// through EstimateReport::converged.
EstimateReport vardi_zhang(const Dataset& data, const SolverConfig& config = {},
                           const std::optional<Vector>& z0 = std::nullopt);

// Axis-aligned box.
struct Box {
  Vector lower;
  Vector upper;
};

// Grid search over resolution^dim points of the box (dim <= 3) for the
// minimiser of the (quantile) empirical loss. Accurate to one grid spacing.
Vector brute_force_oracle(const Dataset& data, const Box& bounds, std::size_t resolution,
                          const std::optional<Vector>& v = std::nullopt);

}  // namespace geomed

#endif  // GEOMED_STATIC_SOLVER_HPP
