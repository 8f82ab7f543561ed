#pragma once

#include <Eigen/Dense>
#include <functional>

namespace robustssm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Gaussian belief over a state: mean and covariance.
struct GaussianBelief {
  Vec mean;
  Mat cov;
};

/// Process and measurement noise covariances of a state-space model.
struct NoiseSpec {
  Mat Q;
  Mat R;
};

/// Nonlinear state-space model x_{k+1} = f(x_k) + q_k, y_k = h(x_k) + v_k.
/// Jacobians are optional for filtering/smoothing but required for bound
/// computation; builders fill them analytically with a finite-difference
/// fallback for user-supplied models.
struct ModelDef {
  int state_dim = 0;
  int meas_dim = 0;
  std::function<Vec(const Vec&)> f;
  std::function<Vec(const Vec&)> h;
  std::function<Mat(const Vec&)> jac_f;
  std::function<Mat(const Vec&)> jac_h;
};

inline Mat symmetrized(const Mat& a) { return 0.5 * (a + a.transpose()); }

}  // namespace robustssm
