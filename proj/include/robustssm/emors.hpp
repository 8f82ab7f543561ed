#pragma once

#include <vector>

#include "robustssm/emorf.hpp"

namespace robustssm {

struct ForwardPassResult {
  std::vector<GaussianBelief> predicted;
  std::vector<GaussianBelief> filtered;
};

/// Unscented forward pass with the per-step indicators held fixed. Each step
/// is exactly predict + gaussian_update under masked_cov, i.e. the same code
/// path the filter's inner loop uses.
ForwardPassResult forward_pass(const std::vector<Vec>& y_seq, const ModelDef& model,
                               const NoiseSpec& noise,
                               const std::vector<IndicatorVector>& indicators,
                               const UtParams& ut, const GaussianBelief& init);

/// Rauch-Tung-Striebel style backward pass. The terminal smoothed belief is
/// the terminal filtered belief; each earlier step applies the unscented
/// cross covariance between the filtered state and its one-step prediction.
std::vector<GaussianBelief> backward_pass(const std::vector<GaussianBelief>& predicted,
                                          const std::vector<GaussianBelief>& filtered,
                                          const ModelDef& model, const UtParams& ut);

struct SmootherState {
  std::vector<GaussianBelief> predicted;
  std::vector<GaussianBelief> filtered;
  std::vector<GaussianBelief> smoothed;
  std::vector<IndicatorVector> indicators;
  int iterations = 0;
  bool converged = false;
};

/// Robust smoother: repeats {forward pass, backward pass, batch indicator
/// sweep from the smoothed beliefs} until the stacked smoothed means move by
/// less than cfg.tol (relative L2) or cfg.max_outer_iter is reached.
/// Indicator sweeps warm-start from the previous outer iterate unless
/// cfg.warm_start_indicators is false, in which case each sweep starts from
/// all clean.
SmootherState emors_run(const std::vector<Vec>& y_seq, const ModelDef& model,
                        const NoiseSpec& noise, const EmConfig& cfg,
                        const UtParams& ut, const GaussianBelief& init);

}  // namespace robustssm
