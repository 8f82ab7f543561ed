#pragma once

#include <vector>

#include "robustssm/types.hpp"

namespace robustssm {

/// Parameters of the coordinated-turn / range-difference benchmark model.
/// State is [a, a_dot, b, b_dot, omega]: planar position, velocity and turn
/// rate. Sensor i (0-based) sits at (spacing*i, spacing*(i % 2)); sensor 0 is
/// the common reference. Measurement dimension is sensor_count - 1.
struct TrackingParams {
  double zeta = 1.0;       // sampling period
  double eta1 = 0.1;       // position/velocity process noise intensity
  double eta2 = 1.75e-4;   // turn-rate process noise intensity
  int sensor_count = 10;
  std::vector<double> sigma2;  // per-sensor noise variance; empty = all 10.0
  double spacing = 350.0;

  double sigma2_for(int sensor) const;
  Eigen::Vector2d sensor_position(int sensor) const;
};

/// Coordinated-turn transition. Near omega = 0 the sin(omega*zeta)/omega
/// style entries are replaced by second-order Taylor expansions so the map
/// stays continuous across the guard.
Vec coordinated_turn_f(const Vec& x, double zeta);

/// Jacobian of coordinated_turn_f with respect to the state.
Mat coordinated_turn_jacobian(const Vec& x, double zeta);

/// Process noise: blockdiag(eta1*M, eta1*M, eta2) with
/// M = [[zeta^3/3, zeta^2/2], [zeta^2/2, zeta]].
Mat tracking_process_cov(const TrackingParams& p);

/// Range-difference measurement: component j is
/// dist(x, sensor 0) - dist(x, sensor j+1), j = 0..m-2.
Vec tdoa_measurement(const Vec& x, const TrackingParams& p);

/// Nominal measurement noise: diagonal sigma2_0 + sigma2_{j+1}, off-diagonal
/// sigma2_0 (the reference sensor noise is common to every component).
Mat tdoa_noise_cov(const TrackingParams& p);

/// Jacobian of tdoa_measurement; throws if the position coincides with a
/// sensor location.
Mat tdoa_jacobian(const Vec& x, const TrackingParams& p);

/// Bundles the benchmark model with analytic Jacobians.
ModelDef make_tracking_model(const TrackingParams& p);

/// Central finite differences, the fallback Jacobian for user models.
Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& g,
                               const Vec& x, double step_scale = 1e-6);

}  // namespace robustssm
