#pragma once

#include <string>
#include <vector>

#include "robustssm/outlier_algebra.hpp"
#include "robustssm/sigma.hpp"
#include "robustssm/types.hpp"

namespace robustssm {

/// EM / variational loop settings shared by the filter and the smoother.
struct EmConfig {
  double epsilon = 1e-6;
  Vec theta;          // clean-prior per dimension; empty or scalar broadcasts 0.5
  double tol = 1e-4;  // relative L2 change of the state estimate
  int max_iter = 50;  // filter inner iterations
  int max_outer_iter = 25;        // smoother outer iterations
  bool warm_start_indicators = true;  // smoother sweeps start from last outer iterate
};

/// Expands the configured prior to `meas_dim` entries.
OutlierPrior resolve_prior(const EmConfig& cfg, int meas_dim);

/// Unscented time update: moments of f over the previous posterior plus Q.
GaussianBelief predict(const GaussianBelief& prev, const ModelDef& model,
                       const Mat& q, const UtParams& ut);

/// Unscented measurement update against an effective noise covariance.
/// The gain solves (U + R_eff) K^T = C^T directly; no precision-form
/// expansion is used.
GaussianBelief gaussian_update(const GaussianBelief& pred, const Vec& y,
                               const ModelDef& model, const Mat& r_eff,
                               const UtParams& ut);

struct FilterStepResult {
  GaussianBelief posterior;
  IndicatorVector indicators;
  int iterations = 0;
  bool converged = false;
  double step_seconds = 0.0;
};

/// One robust filter step: predict, then alternate the Gaussian update under
/// the masked noise covariance with a coordinate sweep of the indicators,
/// until the posterior mean moves by less than cfg.tol (relative L2) or
/// cfg.max_iter is reached. Indicators start all clean at every step.
FilterStepResult emorf_step(const GaussianBelief& prev, const Vec& y,
                            const ModelDef& model, const NoiseSpec& noise,
                            const EmConfig& cfg, const UtParams& ut);

struct FilterRun {
  std::vector<FilterStepResult> steps;  // results up to the first failure
  std::string error;                    // empty on success
  bool ok() const { return error.empty(); }
};

/// Runs emorf_step over a measurement sequence, recording per-step wall
/// time. Aborts at the first failing step and reports the error.
FilterRun run_filter(const std::vector<Vec>& y_seq, const ModelDef& model,
                     const NoiseSpec& noise, const EmConfig& cfg,
                     const UtParams& ut, const GaussianBelief& init);

}  // namespace robustssm
