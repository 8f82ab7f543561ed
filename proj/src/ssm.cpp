#include "robustssm/ssm.hpp"

#include <cmath>
#include <stdexcept>

namespace robustssm {

namespace {

constexpr double kOmegaGuard = 1e-9;

// Turn-dependent entries of the transition matrix and their omega
// derivatives. Inside the guard every ratio is replaced by its second-order
// Taylor expansion, which keeps the map continuous across the switch.
struct TurnCoeffs {
  double s1;   // sin(w*z)/w
  double c1;   // (cos(w*z)-1)/w
  double c2;   // (1-cos(w*z))/w
  double cu;   // cos(w*z)
  double su;   // sin(w*z)
  double ds1;  // d/dw sin(w*z)/w
  double dc1;  // d/dw (cos(w*z)-1)/w
};

TurnCoeffs turn_coeffs(double w, double z) {
  TurnCoeffs c;
  const double u = w * z;
  if (std::abs(w) < kOmegaGuard) {
    c.s1 = z * (1.0 - u * u / 6.0);
    c.c1 = -w * z * z / 2.0;
    c.c2 = -c.c1;
    c.cu = 1.0 - u * u / 2.0;
    c.su = u * (1.0 - u * u / 6.0);
  } else {
    c.s1 = std::sin(u) / w;
    c.c1 = -2.0 * std::sin(u / 2.0) * std::sin(u / 2.0) / w;  // (cos u - 1)/w
    c.c2 = -c.c1;
    c.cu = std::cos(u);
    c.su = std::sin(u);
  }
  // The derivative ratios cancel catastrophically near zero (the exact
  // numerators shrink like u^3 while their terms stay O(u)), so they switch
  // to series far earlier; both branches agree to ~1e-18 at the crossover.
  if (std::abs(u) < 1e-4) {
    c.ds1 = -w * z * z * z / 3.0 + w * w * w * z * z * z * z * z / 30.0;
    c.dc1 = -z * z / 2.0 + w * w * z * z * z * z / 8.0;
  } else {
    c.ds1 = (u * std::cos(u) - std::sin(u)) / (w * w);
    const double half_sin = std::sin(u / 2.0);
    c.dc1 = (2.0 * half_sin * half_sin - u * std::sin(u)) / (w * w);
  }
  return c;
}

void check_state(const Vec& x) {
  if (x.size() != 5) throw std::invalid_argument("state must have dimension 5");
  if (!x.allFinite()) throw std::invalid_argument("non-finite state");
}

void check_params(const TrackingParams& p) {
  if (p.sensor_count < 2) throw std::invalid_argument("sensor_count must be at least 2");
  if (!(p.zeta > 0.0)) throw std::invalid_argument("zeta must be positive");
  if (!(p.eta1 > 0.0) || !(p.eta2 > 0.0)) throw std::invalid_argument("process noise intensities must be positive");
  if (!p.sigma2.empty() && p.sigma2.size() != 1 &&
      p.sigma2.size() != static_cast<size_t>(p.sensor_count))
    throw std::invalid_argument("sigma2 must be empty, scalar, or one entry per sensor");
}

}  // namespace

double TrackingParams::sigma2_for(int sensor) const {
  double s2 = 10.0;
  if (sigma2.size() == 1) s2 = sigma2[0];
  else if (!sigma2.empty()) s2 = sigma2.at(static_cast<size_t>(sensor));
  if (!(s2 > 0.0)) throw std::invalid_argument("sensor noise variance must be positive");
  return s2;
}

Eigen::Vector2d TrackingParams::sensor_position(int sensor) const {
  return {spacing * sensor, spacing * (sensor % 2)};
}

Vec coordinated_turn_f(const Vec& x, double zeta) {
  check_state(x);
  const TurnCoeffs c = turn_coeffs(x(4), zeta);
  Vec out(5);
  out(0) = x(0) + c.s1 * x(1) + c.c1 * x(3);
  out(1) = c.cu * x(1) - c.su * x(3);
  out(2) = c.c2 * x(1) + x(2) + c.s1 * x(3);
  out(3) = c.su * x(1) + c.cu * x(3);
  out(4) = x(4);
  return out;
}

Mat coordinated_turn_jacobian(const Vec& x, double zeta) {
  check_state(x);
  const TurnCoeffs c = turn_coeffs(x(4), zeta);
  const double z = zeta;
  Mat j = Mat::Zero(5, 5);
  j(0, 0) = 1.0; j(0, 1) = c.s1; j(0, 3) = c.c1;
  j(1, 1) = c.cu; j(1, 3) = -c.su;
  j(2, 1) = c.c2; j(2, 2) = 1.0; j(2, 3) = c.s1;
  j(3, 1) = c.su; j(3, 3) = c.cu;
  j(4, 4) = 1.0;
  j(0, 4) = c.ds1 * x(1) + c.dc1 * x(3);
  j(1, 4) = -z * c.su * x(1) - z * c.cu * x(3);
  j(2, 4) = -c.dc1 * x(1) + c.ds1 * x(3);
  j(3, 4) = z * c.cu * x(1) - z * c.su * x(3);
  return j;
}

Mat tracking_process_cov(const TrackingParams& p) {
  check_params(p);
  const double z = p.zeta;
  Eigen::Matrix2d m;
  m << z * z * z / 3.0, z * z / 2.0,
       z * z / 2.0, z;
  Mat q = Mat::Zero(5, 5);
  q.block<2, 2>(0, 0) = p.eta1 * m;
  q.block<2, 2>(2, 2) = p.eta1 * m;
  q(4, 4) = p.eta2;
  return q;
}

Vec tdoa_measurement(const Vec& x, const TrackingParams& p) {
  check_state(x);
  check_params(p);
  const Eigen::Vector2d pos(x(0), x(2));
  const double d0 = (pos - p.sensor_position(0)).norm();
  Vec y(p.sensor_count - 1);
  for (int j = 1; j < p.sensor_count; ++j)
    y(j - 1) = d0 - (pos - p.sensor_position(j)).norm();
  return y;
}

Mat tdoa_noise_cov(const TrackingParams& p) {
  check_params(p);
  const int m = p.sensor_count - 1;
  const double s0 = p.sigma2_for(0);
  Mat r = Mat::Constant(m, m, s0);
  for (int j = 0; j < m; ++j) r(j, j) = s0 + p.sigma2_for(j + 1);
  return r;
}

Mat tdoa_jacobian(const Vec& x, const TrackingParams& p) {
  check_state(x);
  check_params(p);
  const Eigen::Vector2d pos(x(0), x(2));
  const int m = p.sensor_count - 1;
  std::vector<Eigen::Vector2d> grads(static_cast<size_t>(p.sensor_count));
  for (int i = 0; i < p.sensor_count; ++i) {
    const Eigen::Vector2d diff = pos - p.sensor_position(i);
    const double d = diff.norm();
    if (d < 1e-9) throw std::runtime_error("Jacobian singular at sensor location");
    grads[static_cast<size_t>(i)] = diff / d;
  }
  Mat j = Mat::Zero(m, 5);
  for (int row = 0; row < m; ++row) {
    const Eigen::Vector2d g = grads[0] - grads[static_cast<size_t>(row + 1)];
    j(row, 0) = g(0);
    j(row, 2) = g(1);
  }
  return j;
}

ModelDef make_tracking_model(const TrackingParams& p) {
  check_params(p);
  ModelDef model;
  model.state_dim = 5;
  model.meas_dim = p.sensor_count - 1;
  const double zeta = p.zeta;
  model.f = [zeta](const Vec& x) { return coordinated_turn_f(x, zeta); };
  model.h = [p](const Vec& x) { return tdoa_measurement(x, p); };
  model.jac_f = [zeta](const Vec& x) { return coordinated_turn_jacobian(x, zeta); };
  model.jac_h = [p](const Vec& x) { return tdoa_jacobian(x, p); };
  return model;
}

Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& g,
                               const Vec& x, double step_scale) {
  const Vec g0 = g(x);
  Mat j(g0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double step = step_scale * std::max(1.0, std::abs(x(i)));
    Vec hi = x, lo = x;
    hi(i) += step;
    lo(i) -= step;
    j.col(i) = (g(hi) - g(lo)) / (2.0 * step);
  }
  return j;
}

}  // namespace robustssm
