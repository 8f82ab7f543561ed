#pragma once

#include "robustssm/types.hpp"

namespace robustssm {

/// Unscented transform parameters; defaults give lambda = 0 for any n.
struct UtParams {
  double alpha = 1.0;
  double beta = 2.0;
  double kappa = 0.0;
};

/// A deterministic quadrature rule: points (one per column), weights and the
/// generating mean. The moment routines below only consume this struct, so
/// any point/weight generator plugs in; the unscented rule is the one
/// provided.
struct SigmaSet {
  Mat points;  // n x (2n+1) for the unscented rule
  Vec w_mean;
  Vec w_cov;
  Vec center;
};

/// Moments of a propagated point set: mean, covariance (no additive noise)
/// and input-output cross covariance.
struct Moments {
  Vec mean;
  Mat cov;
  Mat cross;
};

/// Unscented points for a belief. The covariance is symmetrized first; if
/// its Cholesky factorization fails, a jitter of 1e-12 * trace is added to
/// the diagonal and doubled up to 8 times before giving up.
SigmaSet make_sigma(const GaussianBelief& belief, const UtParams& ut);

/// Pushes the points through g and accumulates weighted moments.
Moments propagate(const SigmaSet& sigma, const std::function<Vec(const Vec&)>& g);

/// E-step statistic W = (y - mu)(y - mu)^T + U, where mu and U are the
/// measurement mean and covariance of h under the given belief.
Mat expected_outer_residual(const GaussianBelief& belief, const Vec& y,
                            const std::function<Vec(const Vec&)>& h,
                            const UtParams& ut);

}  // namespace robustssm
