#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "robustssm/ssm.hpp"

using namespace robustssm;

TEST_CASE("coordinated turn reduces to constant velocity at tiny turn rate") {
  Vec x(5);
  x << 1.0, 2.0, 3.0, 4.0, 1e-12;
  const Vec out = coordinated_turn_f(x, 1.0);
  CHECK(std::abs(out(0) - 3.0) < 1e-9);
  CHECK(std::abs(out(1) - 2.0) < 1e-9);
  CHECK(std::abs(out(2) - 7.0) < 1e-9);
  CHECK(std::abs(out(3) - 4.0) < 1e-9);
  CHECK(out(4) == 1e-12);
}

TEST_CASE("coordinated turn is continuous across the small-rate guard") {
  Vec x(5);
  x << 12.0, -3.0, 7.0, 5.0, 0.0;
  for (double w : {1e-9, -1e-9}) {
    Vec inside = x, outside = x;
    inside(4) = w * 0.999;
    outside(4) = w * 1.001;
    const Vec a = coordinated_turn_f(inside, 1.0);
    const Vec b = coordinated_turn_f(outside, 1.0);
    CHECK((a - b).norm() < 1e-8);
    const Mat ja = coordinated_turn_jacobian(inside, 1.0);
    const Mat jb = coordinated_turn_jacobian(outside, 1.0);
    CHECK((ja - jb).norm() < 1e-8);
  }
}

TEST_CASE("coordinated turn matches the rotation form at a finite rate") {
  Vec x(5);
  x << 0.0, 1.0, 0.0, -1.0, -0.0524;
  const double z = 2.0;
  const Vec out = coordinated_turn_f(x, z);
  const double w = x(4);
  CHECK(out(0) == doctest::Approx(std::sin(w * z) / w * 1.0 +
                                  (std::cos(w * z) - 1.0) / w * -1.0).epsilon(1e-12));
  CHECK(out(1) == doctest::Approx(std::cos(w * z) * 1.0 - std::sin(w * z) * -1.0).epsilon(1e-12));
  CHECK(out(4) == w);
}

TEST_CASE("transition jacobian agrees with central differences") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x = oracle::random_vec(5, rng, 10.0);
    x(4) = oracle::random_vec(1, rng, 0.2)(0);
    const Mat analytic = coordinated_turn_jacobian(x, 1.0);
    const Mat numeric = oracle::fd_jacobian(
        [](const Vec& s) { return coordinated_turn_f(s, 1.0); }, x);
    CHECK((analytic - numeric).norm() / std::max(1.0, numeric.norm()) < 1e-5);
  }
}

TEST_CASE("process covariance has the stated block structure") {
  TrackingParams p;
  p.zeta = 1.0;
  const Mat q = tracking_process_cov(p);
  CHECK(q(0, 0) == doctest::Approx(0.1 / 3.0));
  CHECK(q(0, 1) == doctest::Approx(0.1 / 2.0));
  CHECK(q(1, 1) == doctest::Approx(0.1));
  CHECK(q(2, 2) == doctest::Approx(0.1 / 3.0));
  CHECK(q(4, 4) == doctest::Approx(1.75e-4));
  CHECK((q - q.transpose()).norm() == 0.0);
  CHECK(Eigen::SelfAdjointEigenSolver<Mat>(q).eigenvalues().minCoeff() > 0.0);
  CHECK(q.block<2, 2>(0, 2).norm() == 0.0);
}

TEST_CASE("sensor geometry alternates along the two rows") {
  TrackingParams p;
  CHECK(p.sensor_position(0) == Eigen::Vector2d(0.0, 0.0));
  CHECK(p.sensor_position(1) == Eigen::Vector2d(350.0, 350.0));
  CHECK(p.sensor_position(2) == Eigen::Vector2d(700.0, 0.0));
  CHECK(p.sensor_position(3) == Eigen::Vector2d(1050.0, 350.0));
}

TEST_CASE("range differences vanish at points equidistant from the sensors") {
  TrackingParams p;
  p.sensor_count = 2;
  // Halfway between sensor 0 at (0,0) and sensor 1 at (350,350).
  Vec x(5);
  x << 175.0, 0.0, 175.0, 0.0, 0.0;
  const Vec y = tdoa_measurement(x, p);
  CHECK(y.size() == 1);
  CHECK(std::abs(y(0)) < 1e-12);
}

TEST_CASE("measurement noise couples every dimension through the reference sensor") {
  TrackingParams p;
  p.sensor_count = 4;
  p.sigma2 = {10.0};
  const Mat r = tdoa_noise_cov(p);
  CHECK(r.rows() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(r(i, i) == doctest::Approx(20.0));
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(r(i, j) == doctest::Approx(10.0));
  }
  CHECK(Eigen::SelfAdjointEigenSolver<Mat>(r).eigenvalues().minCoeff() > 0.0);

  p.sigma2 = {1.0, 2.0, 3.0, 4.0};
  const Mat r2 = tdoa_noise_cov(p);
  CHECK(r2(0, 0) == doctest::Approx(3.0));
  CHECK(r2(2, 2) == doctest::Approx(5.0));
  CHECK(r2(0, 2) == doctest::Approx(1.0));
}

TEST_CASE("measurement jacobian agrees with central differences") {
  TrackingParams p;
  p.sensor_count = 6;
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x = oracle::random_vec(5, rng, 80.0);
    x(0) += 120.0;
    x(2) += 90.0;
    const Mat analytic = tdoa_jacobian(x, p);
    const Mat numeric = oracle::fd_jacobian(
        [&p](const Vec& s) { return tdoa_measurement(s, p); }, x);
    CHECK((analytic - numeric).norm() / std::max(1.0, numeric.norm()) < 1e-5);
    CHECK(analytic.col(1).norm() == 0.0);
    CHECK(analytic.col(3).norm() == 0.0);
    CHECK(analytic.col(4).norm() == 0.0);
  }
}

TEST_CASE("measurement jacobian rejects sensor collocation") {
  TrackingParams p;
  Vec x(5);
  x << 0.0, 0.0, 0.0, 0.0, 0.0;  // exactly on sensor 0
  CHECK_THROWS_WITH_AS(tdoa_jacobian(x, p), "Jacobian singular at sensor location",
                       std::runtime_error);
}

TEST_CASE("model builder validates inputs") {
  TrackingParams bad;
  bad.sensor_count = 1;
  CHECK_THROWS_AS(make_tracking_model(bad), std::invalid_argument);
  bad.sensor_count = 3;
  bad.eta1 = 0.0;
  CHECK_THROWS_AS(tracking_process_cov(bad), std::invalid_argument);

  Vec x(5);
  x << 1.0, 2.0, 3.0, 4.0, std::nan("");
  CHECK_THROWS_AS(coordinated_turn_f(x, 1.0), std::invalid_argument);
}

TEST_CASE("finite difference fallback matches an analytic jacobian") {
  const auto g = [](const Vec& v) {
    Vec out(2);
    out(0) = v(0) * v(0) + 2.0 * v(1);
    out(1) = std::sin(v(0)) * v(1);
    return out;
  };
  Vec x(2);
  x << 0.3, -1.2;
  const Mat j = finite_difference_jacobian(g, x);
  CHECK(j(0, 0) == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(j(0, 1) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(j(1, 0) == doctest::Approx(std::cos(0.3) * -1.2).epsilon(1e-6));
  CHECK(j(1, 1) == doctest::Approx(std::sin(0.3)).epsilon(1e-6));
}
