#include "robustssm/sigma.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace robustssm {

namespace {

// Cholesky factor with jitter repair: symmetrize, then add
// 1e-12 * trace * I to the diagonal, doubling up to 8 times.
Mat repaired_cholesky(const Mat& cov) {
  Mat sym = symmetrized(cov);
  Eigen::LLT<Mat> llt(sym);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  double jitter = 1e-12 * sym.trace();
  for (int attempt = 0; attempt < 8; ++attempt) {
    Mat bumped = sym + jitter * Mat::Identity(sym.rows(), sym.cols());
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter *= 2.0;
  }
  throw std::runtime_error("covariance not repairable");
}

}  // namespace

SigmaSet make_sigma(const GaussianBelief& belief, const UtParams& ut) {
  const int n = static_cast<int>(belief.mean.size());
  if (n == 0) throw std::invalid_argument("empty belief");
  if (belief.cov.rows() != n || belief.cov.cols() != n)
    throw std::invalid_argument("covariance dimension mismatch");
  if (!belief.mean.allFinite() || !belief.cov.allFinite())
    throw std::invalid_argument("non-finite belief");
  if (!std::isfinite(ut.alpha) || !std::isfinite(ut.beta) || !std::isfinite(ut.kappa))
    throw std::invalid_argument("non-finite unscented parameters");

  const double lambda = ut.alpha * ut.alpha * (n + ut.kappa) - n;
  const double scale2 = n + lambda;
  if (!(std::abs(scale2) > 0.0)) throw std::invalid_argument("n + lambda must be nonzero");
  if (scale2 < 0.0) throw std::invalid_argument("n + lambda must be positive");

  const Mat chol = repaired_cholesky(belief.cov);
  const double spread = std::sqrt(scale2);

  SigmaSet s;
  s.center = belief.mean;
  s.points.resize(n, 2 * n + 1);
  s.points.col(0) = belief.mean;
  for (int i = 0; i < n; ++i) {
    s.points.col(1 + i) = belief.mean + spread * chol.col(i);
    s.points.col(1 + n + i) = belief.mean - spread * chol.col(i);
  }
  s.w_mean = Vec::Constant(2 * n + 1, 1.0 / (2.0 * scale2));
  s.w_cov = s.w_mean;
  s.w_mean(0) = lambda / scale2;
  s.w_cov(0) = lambda / scale2 + (1.0 - ut.alpha * ut.alpha + ut.beta);
  return s;
}

Moments propagate(const SigmaSet& sigma, const std::function<Vec(const Vec&)>& g) {
  const int count = static_cast<int>(sigma.points.cols());
  Mat outputs;
  for (int i = 0; i < count; ++i) {
    const Vec gi = g(sigma.points.col(i));
    if (!gi.allFinite())
      throw std::runtime_error("non-finite propagation at sigma point " + std::to_string(i));
    if (i == 0) outputs.resize(gi.size(), count);
    outputs.col(i) = gi;
  }
  Moments m;
  m.mean = outputs * sigma.w_mean;
  const Mat out_dev = outputs.colwise() - m.mean;
  const Mat in_dev = sigma.points.colwise() - sigma.center;
  m.cov = symmetrized(out_dev * sigma.w_cov.asDiagonal() * out_dev.transpose());
  m.cross = in_dev * sigma.w_cov.asDiagonal() * out_dev.transpose();
  return m;
}

Mat expected_outer_residual(const GaussianBelief& belief, const Vec& y,
                            const std::function<Vec(const Vec&)>& h,
                            const UtParams& ut) {
  const Moments mom = propagate(make_sigma(belief, ut), h);
  if (y.size() != mom.mean.size())
    throw std::invalid_argument("measurement dimension mismatch");
  const Vec resid = y - mom.mean;
  return symmetrized(resid * resid.transpose() + mom.cov);
}

}  // namespace robustssm
