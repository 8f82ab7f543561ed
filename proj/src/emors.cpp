#include "robustssm/emors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace robustssm {

ForwardPassResult forward_pass(const std::vector<Vec>& y_seq, const ModelDef& model,
                               const NoiseSpec& noise,
                               const std::vector<IndicatorVector>& indicators,
                               const UtParams& ut, const GaussianBelief& init) {
  if (indicators.size() != y_seq.size())
    throw std::invalid_argument("indicator sequence length mismatch");
  ForwardPassResult fwd;
  fwd.predicted.reserve(y_seq.size());
  fwd.filtered.reserve(y_seq.size());
  GaussianBelief belief = init;
  for (size_t k = 0; k < y_seq.size(); ++k) {
    fwd.predicted.push_back(predict(belief, model, noise.Q, ut));
    fwd.filtered.push_back(gaussian_update(fwd.predicted.back(), y_seq[k], model,
                                           masked_cov(noise.R, indicators[k]), ut));
    belief = fwd.filtered.back();
  }
  return fwd;
}

std::vector<GaussianBelief> backward_pass(const std::vector<GaussianBelief>& predicted,
                                          const std::vector<GaussianBelief>& filtered,
                                          const ModelDef& model, const UtParams& ut) {
  if (predicted.size() != filtered.size())
    throw std::invalid_argument("pass length mismatch");
  if (filtered.empty()) return {};
  const size_t horizon = filtered.size();
  std::vector<GaussianBelief> smoothed(horizon);
  smoothed[horizon - 1] = filtered[horizon - 1];
  for (size_t k = horizon - 1; k-- > 0;) {
    // Cross covariance between x_k (filtered) and x_{k+1} (predicted); the
    // propagated mean reproduces predicted[k+1].mean because the prediction
    // came from the same deterministic point set.
    const Moments mom = propagate(make_sigma(filtered[k], ut), model.f);
    Eigen::LDLT<Mat> ldlt(predicted[k + 1].cov);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("singular predicted covariance at step " + std::to_string(k + 1));
    const Mat gain = ldlt.solve(mom.cross.transpose()).transpose();
    if (!gain.allFinite())
      throw std::runtime_error("singular predicted covariance at step " + std::to_string(k + 1));
    smoothed[k].mean = filtered[k].mean + gain * (smoothed[k + 1].mean - predicted[k + 1].mean);
    smoothed[k].cov = symmetrized(filtered[k].cov +
                                  gain * (smoothed[k + 1].cov - predicted[k + 1].cov) *
                                      gain.transpose());
  }
  return smoothed;
}

SmootherState emors_run(const std::vector<Vec>& y_seq, const ModelDef& model,
                        const NoiseSpec& noise, const EmConfig& cfg,
                        const UtParams& ut, const GaussianBelief& init) {
  if (cfg.max_outer_iter < 1) throw std::invalid_argument("max_outer_iter must be positive");
  if (!(cfg.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (y_seq.empty()) throw std::invalid_argument("empty measurement sequence");
  const int m = static_cast<int>(y_seq.front().size());
  const OutlierPrior prior = resolve_prior(cfg, m);

  SmootherState state;
  state.indicators.assign(y_seq.size(), IndicatorVector::all_clean(m, cfg.epsilon));

  Vec prev_stack;
  for (int outer = 0; outer < cfg.max_outer_iter; ++outer) {
    ForwardPassResult fwd = forward_pass(y_seq, model, noise, state.indicators, ut, init);
    state.smoothed = backward_pass(fwd.predicted, fwd.filtered, model, ut);
    state.predicted = std::move(fwd.predicted);
    state.filtered = std::move(fwd.filtered);
    state.iterations = outer + 1;

    for (size_t k = 0; k < y_seq.size(); ++k) {
      const Mat w = expected_outer_residual(state.smoothed[k], y_seq[k], model.h, ut);
      IndicatorVector start = cfg.warm_start_indicators
                                  ? state.indicators[k]
                                  : IndicatorVector::all_clean(m, cfg.epsilon);
      state.indicators[k] = sweep_indicators(w, noise.R, std::move(start), prior);
    }

    Vec stack(static_cast<Eigen::Index>(y_seq.size()) * model.state_dim);
    for (size_t k = 0; k < y_seq.size(); ++k)
      stack.segment(static_cast<Eigen::Index>(k) * model.state_dim, model.state_dim) =
          state.smoothed[k].mean;
    if (outer > 0) {
      const double diff = (stack - prev_stack).norm();
      if (diff <= cfg.tol * std::max(prev_stack.norm(), 1e-300)) {
        state.converged = true;
        break;
      }
    }
    prev_stack = std::move(stack);
  }
  return state;
}

}  // namespace robustssm
