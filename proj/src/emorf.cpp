#include "robustssm/emorf.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace robustssm {

OutlierPrior resolve_prior(const EmConfig& cfg, int meas_dim) {
  if (meas_dim < 1) throw std::invalid_argument("measurement dimension must be positive");
  OutlierPrior prior;
  if (cfg.theta.size() == 0) prior.theta = Vec::Constant(meas_dim, 0.5);
  else if (cfg.theta.size() == 1) prior.theta = Vec::Constant(meas_dim, cfg.theta(0));
  else if (cfg.theta.size() == meas_dim) prior.theta = cfg.theta;
  else throw std::invalid_argument("theta must be empty, scalar, or one entry per dimension");
  for (int i = 0; i < prior.theta.size(); ++i)
    if (!(prior.theta(i) > 0.0) || !(prior.theta(i) < 1.0))
      throw std::invalid_argument("theta must lie in (0, 1)");
  return prior;
}

GaussianBelief predict(const GaussianBelief& prev, const ModelDef& model,
                       const Mat& q, const UtParams& ut) {
  const Moments mom = propagate(make_sigma(prev, ut), model.f);
  return {mom.mean, symmetrized(mom.cov + q)};
}

GaussianBelief gaussian_update(const GaussianBelief& pred, const Vec& y,
                               const ModelDef& model, const Mat& r_eff,
                               const UtParams& ut) {
  const Moments mom = propagate(make_sigma(pred, ut), model.h);
  if (y.size() != mom.mean.size())
    throw std::invalid_argument("measurement dimension mismatch");
  const Mat innovation_cov = symmetrized(mom.cov + r_eff);
  Eigen::LDLT<Mat> ldlt(innovation_cov);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("innovation covariance singular");
  const Mat gain = ldlt.solve(mom.cross.transpose()).transpose();
  if (!gain.allFinite()) throw std::runtime_error("innovation covariance singular");
  GaussianBelief post;
  post.mean = pred.mean + gain * (y - mom.mean);
  post.cov = symmetrized(pred.cov - mom.cross * gain.transpose());
  return post;
}

FilterStepResult emorf_step(const GaussianBelief& prev, const Vec& y,
                            const ModelDef& model, const NoiseSpec& noise,
                            const EmConfig& cfg, const UtParams& ut) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.max_iter < 1) throw std::invalid_argument("max_iter must be positive");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const int m = static_cast<int>(y.size());
  const OutlierPrior prior = resolve_prior(cfg, m);

  const GaussianBelief pred = predict(prev, model, noise.Q, ut);
  IndicatorVector ind = IndicatorVector::all_clean(m, cfg.epsilon);

  FilterStepResult res{pred, ind, 0, false, 0.0};
  Vec prev_mean;
  for (int it = 0; it < cfg.max_iter; ++it) {
    res.posterior = gaussian_update(pred, y, model, masked_cov(noise.R, ind), ut);
    const Mat w = expected_outer_residual(res.posterior, y, model.h, ut);
    ind = sweep_indicators(w, noise.R, std::move(ind), prior);
    res.iterations = it + 1;
    if (it > 0) {
      const double denom = prev_mean.norm();
      const double diff = (res.posterior.mean - prev_mean).norm();
      if (diff <= cfg.tol * std::max(denom, 1e-300)) {
        res.converged = true;
        break;
      }
    }
    prev_mean = res.posterior.mean;
  }
  res.indicators = ind;
  res.step_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start).count();
  return res;
}

FilterRun run_filter(const std::vector<Vec>& y_seq, const ModelDef& model,
                     const NoiseSpec& noise, const EmConfig& cfg,
                     const UtParams& ut, const GaussianBelief& init) {
  FilterRun run;
  run.steps.reserve(y_seq.size());
  GaussianBelief belief = init;
  for (size_t k = 0; k < y_seq.size(); ++k) {
    try {
      run.steps.push_back(emorf_step(belief, y_seq[k], model, noise, cfg, ut));
    } catch (const std::exception& e) {
      run.error = "step " + std::to_string(k) + ": " + e.what();
      return run;
    }
    belief = run.steps.back().posterior;
  }
  return run;
}

}  // namespace robustssm
