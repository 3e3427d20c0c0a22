#include "geomed/analysis.hpp"

#include "geomed/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace geomed {

SymOperator::SymOperator(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("SymOperator: matrix is not square");
  if (!m.allFinite()) throw DataError("SymOperator: non-finite entry");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument("SymOperator: matrix is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
}

Vector SymOperator::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m_, Eigen::EigenvaluesOnly);
  Vector ev = solver.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
  return ev;
}

double estimation_error(const Eigen::Ref<const Vector>& m_hat, const Eigen::Ref<const Vector>& m) {
  require_same_dim(m_hat.size(), m.size(), "estimation_error");
  return (m_hat - m).norm();
}

namespace {

// Visits (1/r_i, u_i) for each point, refusing points that coincide with a.
template <typename Fn>
void for_each_direction(const Eigen::Ref<const Vector>& a, const Dataset& data, const char* what, Fn&& fn) {
  require_same_dim(a.size(), static_cast<Eigen::Index>(data.dim()), what);
  const double eps = zero_threshold(a.norm());
  Vector u(a.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    u = data.row(i) - a;
    const double r = u.norm();
    if (r <= eps) {
      std::ostringstream os;
      os << what << ": evaluation point coincides with data point " << i;
      throw DataError(os.str());
    }
    u /= r;
    fn(1.0 / r, u);
  }
}

}  // namespace

SymOperator hessian_estimate(const Eigen::Ref<const Vector>& a, const Dataset& data) {
  const Eigen::Index d = a.size();
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  Eigen::MatrixXd term(d, d);
  for_each_direction(a, data, "hessian_estimate", [&](double inv_r, const Vector& u) {
    term = identity;
    term.noalias() -= u * u.transpose();
    h += inv_r * term;
  });
  return SymOperator(h / static_cast<double>(data.size()));
}

HessianParts hessian_parts(const Eigen::Ref<const Vector>& a, const Dataset& data) {
  const Eigen::Index d = a.size();
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(d, d);
  double sum_inv_r = 0.0;
  for_each_direction(a, data, "hessian_parts", [&](double inv_r, const Vector& u) {
    sum_inv_r += inv_r;
    delta.noalias() += inv_r * (u * u.transpose());
  });
  const auto n = static_cast<double>(data.size());
  return HessianParts{sum_inv_r / n, SymOperator(delta / n)};
}

SymOperator score_covariance(const Eigen::Ref<const Vector>& a, const Dataset& data) {
  const Eigen::Index d = a.size();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for_each_direction(a, data, "score_covariance",
                     [&](double, const Vector& u) { s.noalias() += u * u.transpose(); });
  return SymOperator(s / static_cast<double>(data.size()));
}

SymOperator sandwich_covariance(const Dataset& data, const Eigen::Ref<const Vector>& m_hat, bool allow_large) {
  if (m_hat.size() > kMaxSandwichDim && !allow_large) {
    std::ostringstream os;
    os << "sandwich_covariance: dimension " << m_hat.size() << " exceeds " << kMaxSandwichDim
       << "; enable the large-dimension override to proceed";
    throw std::invalid_argument(os.str());
  }
  const SymOperator hessian = hessian_estimate(m_hat, data);
  const Vector ev = hessian.eigenvalues();
  const double largest = ev[0];
  const double smallest = ev[ev.size() - 1];
  if (!(largest > 0.0) || smallest <= 1e-10 * largest) {
    std::ostringstream os;
    os << "sandwich_covariance: Hessian is singular (eigenvalues " << smallest << " .. " << largest
       << "); data may be concentrated on a line";
    throw SingularOperatorError(os.str());
  }
  const SymOperator score = score_covariance(m_hat, data);
  const Eigen::LDLT<Eigen::MatrixXd> factor(hessian.matrix());
  const Eigen::MatrixXd right = factor.solve(score.matrix());            // H^{-1} S
  const Eigen::MatrixXd full = factor.solve(right.transpose().eval());   // H^{-1} S H^{-1}
  return SymOperator(0.5 * (full + full.transpose()));
}

ConvexityReport convexity_check(const Dataset& data, const Box& box, std::size_t trials, std::uint64_t seed) {
  const auto d = static_cast<Eigen::Index>(data.dim());
  require_same_dim(box.lower.size(), d, "convexity_check");
  require_same_dim(box.upper.size(), d, "convexity_check");
  if (trials < 1) throw std::invalid_argument("convexity_check: trials must be >= 1");

  Rng rng(seed);
  ConvexityReport report{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Vector a(d);
  std::size_t done = 0;
  std::size_t attempts = 0;
  while (done < trials) {
    if (++attempts > 100 * trials) {
      throw DataError("convexity_check: could not sample points away from the data");
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      a[j] = box.lower[j] + rng.uniform() * (box.upper[j] - box.lower[j]);
    }
    Vector ev;
    try {
      ev = hessian_estimate(a, data).eigenvalues();
    } catch (const DataError&) {
      continue;
    }
    report.max_eig_upper = std::max(report.max_eig_upper, ev[0]);
    report.min_eig_lower = std::min(report.min_eig_lower, ev[d - 1]);
    ++done;
  }
  return report;
}

}  // namespace geomed
