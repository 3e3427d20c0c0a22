#ifndef GEOMED_ANALYSIS_HPP
#define GEOMED_ANALYSIS_HPP

#include "geomed/core.hpp"
#include "geomed/static_solver.hpp"

#include <cstdint>

namespace geomed {

class SingularOperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Real symmetric d x d matrix. Construction rejects non-finite entries and
// asymmetry beyond 1e-10 relative to the largest entry, then stores the exact
// symmetric part.
class SymOperator {
 public:
  explicit SymOperator(const Eigen::MatrixXd& m);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }
  double trace() const { return m_.trace(); }
  double frobenius() const { return m_.norm(); }

  // Descending.
  Vector eigenvalues() const;

 private:
  Eigen::MatrixXd m_;
};

double estimation_error(const Eigen::Ref<const Vector>& m_hat, const Eigen::Ref<const Vector>& m);

// Empirical Hessian of the loss at a:
//   (1/n) sum_i (1/r_i) (I - u_i u_i^T),  r_i = ||x_i - a||,  u_i = (x_i - a)/r_i.
// Throws DataError when a coincides with a data point.
SymOperator hessian_estimate(const Eigen::Ref<const Vector>& a, const Dataset& data);

// The same Hessian split as mean_inverse_distance * I - delta, where
// delta = (1/n) sum_i (1/r_i) u_i u_i^T.
struct HessianParts {
  double mean_inverse_distance = 0.0;
  SymOperator delta;
};
HessianParts hessian_parts(const Eigen::Ref<const Vector>& a, const Dataset& data);

// (1/n) sum_i u_i u_i^T; unit trace.
SymOperator score_covariance(const Eigen::Ref<const Vector>& a, const Dataset& data);

// Covariance of sqrt(n)(z_bar_n - m) predicted by the asymptotic normality
// result: H^{-1} S H^{-1} with H the empirical Hessian and S the score
// covariance at m_hat. Throws SingularOperatorError when H's smallest
// eigenvalue is below 1e-10 times its largest. Dimensions above
// kMaxSandwichDim are refused unless allow_large is set.
inline constexpr Eigen::Index kMaxSandwichDim = 2000;
SymOperator sandwich_covariance(const Dataset& data, const Eigen::Ref<const Vector>& m_hat,
                                bool allow_large = false);

struct ConvexityReport {
  double min_eig_lower = 0.0;
  double max_eig_upper = 0.0;
};

// Samples `trials` non-atomic points uniformly in the box and records the
// extreme Hessian eigenvalues seen. A positive min_eig_lower certifies strong
// convexity of the empirical loss over the sampled region.
ConvexityReport convexity_check(const Dataset& data, const Box& box, std::size_t trials, std::uint64_t seed);

}  // namespace geomed

#endif  // GEOMED_ANALYSIS_HPP
