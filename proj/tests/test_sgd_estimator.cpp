#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "geomed/rng.hpp"
#include "geomed/sgd_estimator.hpp"
#include "geomed/simulate.hpp"
#include "geomed/static_solver.hpp"

#include <cmath>
#include <vector>

using namespace geomed;

namespace {

const StepSchedule kUnit(1.0, 0.75);

std::vector<Vector> random_points(Rng& rng, std::size_t n, int d, double scale = 1.0) {
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(d);
    for (int j = 0; j < d; ++j) x[j] = scale * rng.normal();
    pts.push_back(x);
  }
  return pts;
}

// Median recursion written out directly from its definition.
Vector reference_median_step(const Vector& z, const Vector& x, double gamma) {
  double dist2 = 0.0;
  double z2 = 0.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    dist2 += (x[j] - z[j]) * (x[j] - z[j]);
    z2 += z[j] * z[j];
  }
  const double dist = std::sqrt(dist2);
  if (dist <= zero_threshold(std::sqrt(z2))) return z;
  Vector out = z;
  for (Eigen::Index j = 0; j < z.size(); ++j) out[j] = z[j] + gamma * ((x[j] - z[j]) / dist);
  return out;
}

class VectorListSource : public ObservationSource {
 public:
  explicit VectorListSource(std::vector<Vector> items, bool replayable = false)
      : items_(std::move(items)), replayable_(replayable) {}
  bool next(Vector& out) override {
    if (pos_ >= items_.size()) return false;
    out = items_[pos_++];
    return true;
  }
  bool rewind() override {
    if (!replayable_) return false;
    pos_ = 0;
    return true;
  }

 private:
  std::vector<Vector> items_;
  bool replayable_;
  std::size_t pos_ = 0;
};

}  // namespace

TEST_CASE("init_state examples") {
  const SgdState s = init_state(Vector{{1.0, 2.0}}, kUnit, Vector::Zero(2));
  CHECK(s.z == Vector{{1.0, 2.0}});
  CHECK(s.z_bar == Vector::Zero(2));
  CHECK(s.count == 0);

  CHECK_NOTHROW(init_state(Vector::Zero(3), kUnit, Vector{{0.5, 0.0, 0.0}}));
  CHECK_THROWS_AS(init_state(Vector::Zero(2), kUnit, Vector{{1.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(init_state(Vector::Zero(2), kUnit, Vector::Zero(3)), DimensionError);
}

TEST_CASE("sgd_step examples") {
  SUBCASE("coincident observation leaves the iterate in place") {
    const SgdState s = sgd_step(init_state(Vector::Zero(2), kUnit, Vector::Zero(2)), Vector::Zero(2));
    CHECK(s.z == Vector::Zero(2));
    CHECK(s.z_bar == Vector::Zero(2));
    CHECK(s.count == 1);
  }
  SUBCASE("unit step towards the observation") {
    const SgdState s = sgd_step(init_state(Vector::Zero(2), kUnit, Vector::Zero(2)), Vector{{2.0, 0.0}});
    CHECK(s.z == Vector{{1.0, 0.0}});
    CHECK(s.z_bar == Vector{{1.0, 0.0}});
  }
  SUBCASE("quantile direction is added to the step") {
    const SgdState s = sgd_step(init_state(Vector::Zero(2), kUnit, Vector{{0.5, 0.0}}), Vector{{0.0, 2.0}});
    CHECK(s.z == Vector{{0.5, 1.0}});
  }
  SUBCASE("coincident observation with v != 0 keeps only the v drift") {
    const SgdState s = sgd_step(init_state(Vector{{1.0, 1.0}}, kUnit, Vector{{0.0, 0.25}}), Vector{{1.0, 1.0}});
    CHECK(s.z == Vector{{1.0, 1.25}});
  }
}

TEST_CASE("sgd_step rejects bad observations") {
  const SgdState s = init_state(Vector::Zero(2), kUnit, Vector::Zero(2));
  CHECK_THROWS_AS(sgd_step(s, Vector::Zero(3)), DimensionError);
  CHECK_THROWS_AS(sgd_step(s, Vector{{NAN, 0.0}}), DataError);
}

TEST_CASE("step displacement is bounded by gamma_n (1 + ||v||)") {
  Rng rng(3);
  for (const double vnorm : {0.0, 0.3, 0.9}) {
    Vector v = Vector::Zero(4);
    v[1] = vnorm;
    SgdState s = init_state(Vector::Zero(4), StepSchedule(2.5, 0.7), v);
    for (const auto& x : random_points(rng, 2000, 4, 3.0)) {
      const Vector before = s.z;
      const double gamma = step_size(s.schedule, s.count + 1);
      s = sgd_step(std::move(s), x);
      REQUIRE((s.z - before).norm() <= gamma * (1.0 + vnorm) * (1.0 + 1e-14));
    }
  }
}

TEST_CASE("running average equals the mean of the post-step iterates") {
  Rng rng(4);
  SgdState s = init_state(Vector::Ones(3), StepSchedule(5.0, 0.75), Vector::Zero(3));
  Vector sum = Vector::Zero(3);
  std::size_t k = 0;
  for (const auto& x : random_points(rng, 5000, 3, 2.0)) {
    s = sgd_step(std::move(s), x);
    sum += s.z;
    ++k;
    const Vector direct = sum / static_cast<double>(k);
    REQUIRE((s.z_bar - direct).norm() <= 1e-10 * std::max(1.0, direct.norm()));
  }
}

TEST_CASE("translation equivariance of the trajectory") {
  Rng rng(5);
  const auto pts = random_points(rng, 3000, 3, 2.0);
  const Vector shift{{10.0, -3.0, 0.5}};
  SgdState a = init_state(pts[0], StepSchedule(2.0, 0.75), Vector::Zero(3));
  SgdState b = init_state(pts[0] + shift, StepSchedule(2.0, 0.75), Vector::Zero(3));
  for (std::size_t i = 1; i < pts.size(); ++i) {
    a = sgd_step(std::move(a), pts[i]);
    b = sgd_step(std::move(b), pts[i] + shift);
    REQUIRE((b.z - (a.z + shift)).norm() <= 1e-12 * std::max(1.0, b.z.norm()));
    REQUIRE((b.z_bar - (a.z_bar + shift)).norm() <= 1e-12 * std::max(1.0, b.z_bar.norm()));
  }
}

TEST_CASE("scale equivariance of the trajectory") {
  Rng rng(6);
  const auto pts = random_points(rng, 3000, 3, 2.0);
  const double scale = 7.5;
  SgdState a = init_state(pts[0], StepSchedule(2.0, 0.75), Vector::Zero(3));
  SgdState b = init_state(scale * pts[0], StepSchedule(2.0 * scale, 0.75), Vector::Zero(3));
  for (std::size_t i = 1; i < pts.size(); ++i) {
    a = sgd_step(std::move(a), pts[i]);
    b = sgd_step(std::move(b), scale * pts[i]);
    REQUIRE((b.z - scale * a.z).norm() <= 1e-12 * std::max(1.0, b.z.norm()));
  }
}

TEST_CASE("v = 0 reproduces the median recursion bit for bit") {
  Rng rng(7);
  const auto pts = random_points(rng, 5000, 5, 1.0);
  SgdState s = init_state(pts[0], StepSchedule(3.0, 0.75), Vector::Zero(5));
  Vector z = pts[0];
  for (std::size_t i = 1; i < pts.size(); ++i) {
    z = reference_median_step(z, pts[i], step_size(s.schedule, s.count + 1));
    s = sgd_step(std::move(s), pts[i]);
    for (Eigen::Index j = 0; j < 5; ++j) REQUIRE(s.z[j] == z[j]);
  }
}

TEST_CASE("fit_stream on repeated points stays put") {
  const Vector p{{1.5, -2.0, 0.25}};
  FitConfig config;
  VectorListSource source(std::vector<Vector>(50, p));
  const EstimateReport r = fit_stream(source, config);
  CHECK(r.estimate == p);
  CHECK(r.observations == 50);
  CHECK_FALSE(r.empirical_loss.has_value());
}

TEST_CASE("fit_stream on the reference Gaussian") {
  const GaussianSpec spec = reference_gaussian();
  const Dataset data = sample_gaussian(spec, 10000, 99);
  FitConfig config;
  config.schedule = StepSchedule(5.0, 0.75);
  const EstimateReport r = fit_stream(data, config);
  CHECK(r.estimate.norm() < 0.1);
  REQUIRE(r.empirical_loss.has_value());
  CHECK(*r.empirical_loss == doctest::Approx(empirical_loss(r.estimate, data)).epsilon(1e-12));
  CHECK(r.observations == 10000);
}

TEST_CASE("fit_stream errors") {
  FitConfig config;
  VectorListSource empty({});
  CHECK_THROWS_AS(fit_stream(empty, config), DataError);
  VectorListSource mixed({Vector::Zero(2), Vector::Ones(2), Vector::Ones(3)});
  CHECK_THROWS_AS(fit_stream(mixed, config), DimensionError);

  config.epochs = 2;
  VectorListSource once({Vector::Zero(2), Vector::Ones(2)});
  CHECK_THROWS_AS(fit_stream(once, config), std::invalid_argument);
}

TEST_CASE("fit_stream truncates a far starting point") {
  FitConfig config;
  config.init_cap = 10.0;
  VectorListSource source({Vector{{100.0, 0.0}}, Vector{{0.0, 0.0}}});
  // Start replaced by 0, the single step then hits the origin exactly.
  CHECK(fit_stream(source, config).estimate == Vector::Zero(2));
}

TEST_CASE("epochs keep the step counter running") {
  const Dataset data({0.0, 0.0, 2.0, 0.0, 0.0, 2.0}, 2);
  FitConfig config;
  config.epochs = 3;
  DatasetSource source(data);
  const EstimateReport r = fit_stream(source, config);
  // One start plus 2 steps in the first pass, then 3 steps in each later pass.
  CHECK(r.observations == 1 + 2 + 3 + 3);
}

TEST_CASE("multi_start_fit on a single point") {
  const Dataset data({3.0, 4.0}, 2);
  FitConfig config;
  config.num_starts = 4;
  const EstimateReport r = multi_start_fit(data, config);
  CHECK(r.estimate == Vector{{3.0, 4.0}});
  CHECK(r.start_index == 0u);
}

TEST_CASE("multi_start_fit finds the Fermat point of an equilateral triangle") {
  const double h = std::sqrt(3.0) / 2.0;
  std::vector<double> values;
  for (int rep = 0; rep < 10000; ++rep) values.insert(values.end(), {0.0, 0.0, 1.0, 0.0, 0.5, h});
  const Dataset data(std::move(values), 2);
  const Vector centroid{{0.5, h / 3.0}};

  // Grid oracle over the three distinct vertices.
  const Dataset vertices({0.0, 0.0, 1.0, 0.0, 0.5, h}, 2);
  const Vector grid = brute_force_oracle(vertices, Box{Vector{{0.0, 0.0}}, Vector{{1.0, 1.0}}}, 1001);
  REQUIRE((grid - centroid).norm() < 2e-3);

  FitConfig config;
  config.schedule = StepSchedule(0.5, 0.75);
  config.seed = 17;
  const EstimateReport r = multi_start_fit(data, config);
  CHECK((r.estimate - centroid).norm() < 0.05);
}

TEST_CASE("multi_start_fit picks the lowest-loss chain and is deterministic") {
  const Dataset data = sample_gaussian(reference_gaussian(), 500, 123);
  FitConfig config;
  config.schedule = StepSchedule(0.2, 0.75);
  config.seed = 8;
  const EstimateReport a = multi_start_fit(data, config);
  const EstimateReport b = multi_start_fit(data, config);
  CHECK(a.estimate == b.estimate);
  CHECK(a.start_index == b.start_index);
  CHECK(*a.empirical_loss == *b.empirical_loss);

  // Chain 0 uses the same start stream with one start; the selection can
  // only improve on it.
  config.num_starts = 1;
  const EstimateReport single = multi_start_fit(data, config);
  CHECK(*a.empirical_loss <= *single.empirical_loss);
}

TEST_CASE("multi_start_fit quantile direction shifts the estimate") {
  const Dataset data = sample_gaussian(standard_gaussian(2), 4000, 1);
  FitConfig config;
  config.schedule = StepSchedule(1.0, 0.75);
  config.v = Vector{{0.5, 0.0}};
  const EstimateReport r = multi_start_fit(data, config);
  CHECK(r.estimate[0] > 0.3);
  CHECK(std::abs(r.estimate[1]) < 0.1);
}

TEST_CASE("default_c_gamma is the mean distance to the mean") {
  const Dataset data({-1.0, 0.0, 1.0, 0.0, 0.0, 3.0, 0.0, -3.0}, 2);
  CHECK(default_c_gamma(data) == doctest::Approx(2.0));
  CHECK(default_c_gamma(Dataset({1.0, 1.0, 1.0, 1.0}, 2)) == 1.0);
}

TEST_CASE("FitConfig validation") {
  FitConfig config;
  config.num_starts = 0;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config = FitConfig{};
  config.init_cap = 0.0;
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
  config = FitConfig{};
  config.v = Vector{{0.8, 0.8}};
  CHECK_THROWS_AS(validate(config), std::invalid_argument);
}
