#pragma once

#include <cstdint>
#include <vector>

#include "robustssm/types.hpp"

namespace robustssm {

/// Per-step inclusion mask of an ideal outlier rejector: 1 keeps the
/// measurement dimension, 0 discards it entirely.
struct RejectorMask {
  std::vector<std::uint8_t> included;
};

/// Expectation blocks of the trajectory information matrix.
/// blocks[t] couples state x_t with x_{t+1} (t = 0..K-1):
///   d11      = E[F^T(x_t) Qinv F(x_t)]
///   d12      = -E[F^T(x_t)] Qinv          (d21 is its transpose)
///   d22_meas = E[H^T(x_{t+1}) Rinv(mask_t) H(x_{t+1})]
/// where Rinv(mask) inverts the retained submatrix and zero-pads rejected
/// rows and columns. The constant d22 contribution is q_inv itself.
struct DBlocks {
  Mat d11;
  Mat d12;
  Mat d22_meas;
};

struct DBlockSequence {
  std::vector<DBlocks> blocks;
  Mat q_inv;
};

/// Estimates the expectation blocks by averaging over sampled trajectories.
/// Each sample must hold K+1 states x_0..x_K; masks[t] applies to the
/// measurement taken at time t+1.
DBlockSequence d_blocks(const std::vector<std::vector<Vec>>& traj_samples,
                        const ModelDef& model, const Mat& q, const Mat& r,
                        const std::vector<RejectorMask>& masks);

/// Information matrices aligned with the measurements: entry t corresponds
/// to time k = t+1. j_plus[t] includes the measurement at time t+1,
/// j_minus[t] does not; j_s is the smoothing information.
struct FimSequence {
  std::vector<Mat> j_minus;
  std::vector<Mat> j_plus;
  std::vector<Mat> j_s;
};

/// Forward information recursion from the prior information j0.
FimSequence fim_filter(const DBlockSequence& d, const Mat& j0);

/// Backward smoothing recursion; fills fims.j_s. The terminal smoothing
/// information equals the terminal filtering information.
void fim_smoother(const DBlockSequence& d, FimSequence& fims);

struct BcrbTraces {
  std::vector<double> filter_trace;    // tr(j_plus[t]^{-1})
  std::vector<double> smoother_trace;  // tr(j_s[t]^{-1}); empty if j_s is empty
};

/// Traces of the inverse information matrices.
BcrbTraces bcrb_traces(const FimSequence& fims);

}  // namespace robustssm
