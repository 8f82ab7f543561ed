#include "robustssm/bcrb.hpp"

#include <stdexcept>

namespace robustssm {

namespace {

Mat spd_inverse(const Mat& a, const char* what) {
  Eigen::LLT<Mat> llt(symmetrized(a));
  if (llt.info() != Eigen::Success) throw std::runtime_error(what);
  return llt.solve(Mat::Identity(a.rows(), a.cols()));
}

// Zero-padded precision of an ideal rejector: invert the retained submatrix
// of R and scatter it back; rejected rows and columns stay zero. With every
// dimension rejected the precision is the zero matrix.
Mat rejector_precision(const Mat& r, const RejectorMask& mask) {
  const int m = static_cast<int>(r.rows());
  if (mask.included.size() != static_cast<size_t>(m))
    throw std::invalid_argument("mask dimension mismatch");
  std::vector<int> keep;
  for (int i = 0; i < m; ++i)
    if (mask.included[static_cast<size_t>(i)]) keep.push_back(i);
  Mat out = Mat::Zero(m, m);
  if (keep.empty()) return out;
  const int c = static_cast<int>(keep.size());
  Mat sub(c, c);
  for (int a = 0; a < c; ++a)
    for (int b = 0; b < c; ++b)
      sub(a, b) = r(keep[static_cast<size_t>(a)], keep[static_cast<size_t>(b)]);
  const Mat inv = spd_inverse(sub, "retained block singular");
  for (int a = 0; a < c; ++a)
    for (int b = 0; b < c; ++b)
      out(keep[static_cast<size_t>(a)], keep[static_cast<size_t>(b)]) = inv(a, b);
  return out;
}

}  // namespace

DBlockSequence d_blocks(const std::vector<std::vector<Vec>>& traj_samples,
                        const ModelDef& model, const Mat& q, const Mat& r,
                        const std::vector<RejectorMask>& masks) {
  if (traj_samples.empty()) throw std::invalid_argument("no trajectory samples");
  if (!model.jac_f || !model.jac_h) throw std::invalid_argument("model Jacobians required");
  const size_t horizon = masks.size();
  if (horizon == 0) throw std::invalid_argument("empty mask sequence");
  for (const auto& traj : traj_samples)
    if (traj.size() != horizon + 1)
      throw std::invalid_argument("trajectory sample must hold K+1 states");

  const int n = model.state_dim;
  DBlockSequence seq;
  seq.q_inv = spd_inverse(q, "singular process covariance");
  seq.blocks.reserve(horizon);
  const double inv_count = 1.0 / static_cast<double>(traj_samples.size());

  for (size_t t = 0; t < horizon; ++t) {
    const Mat r_inv = rejector_precision(r, masks[t]);
    DBlocks blk;
    blk.d11 = Mat::Zero(n, n);
    blk.d22_meas = Mat::Zero(n, n);
    Mat f_bar = Mat::Zero(n, n);
    for (const auto& traj : traj_samples) {
      const Mat f_jac = model.jac_f(traj[t]);
      blk.d11.noalias() += f_jac.transpose() * seq.q_inv * f_jac;
      f_bar += f_jac;
      const Mat h_jac = model.jac_h(traj[t + 1]);
      blk.d22_meas.noalias() += h_jac.transpose() * r_inv * h_jac;
    }
    blk.d11 = symmetrized(blk.d11 * inv_count);
    blk.d22_meas = symmetrized(blk.d22_meas * inv_count);
    blk.d12 = -(f_bar * inv_count).transpose() * seq.q_inv;
    seq.blocks.push_back(std::move(blk));
  }
  return seq;
}

FimSequence fim_filter(const DBlockSequence& d, const Mat& j0) {
  FimSequence fims;
  fims.j_minus.reserve(d.blocks.size());
  fims.j_plus.reserve(d.blocks.size());
  Mat j_prev = j0;  // filtering information carried in from the previous time
  for (size_t t = 0; t < d.blocks.size(); ++t) {
    const DBlocks& blk = d.blocks[t];
    // Predicted information at time t+1 uses the blocks anchored at time t.
    Eigen::LDLT<Mat> ldlt(symmetrized(j_prev + blk.d11));
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("singular information recursion");
    const Mat solved = ldlt.solve(blk.d12);
    const Mat j_minus = symmetrized(d.q_inv - blk.d12.transpose() * solved);
    const Mat j_plus = symmetrized(j_minus + blk.d22_meas);
    fims.j_minus.push_back(j_minus);
    fims.j_plus.push_back(j_plus);
    j_prev = j_plus;
  }
  return fims;
}

void fim_smoother(const DBlockSequence& d, FimSequence& fims) {
  const size_t horizon = fims.j_plus.size();
  if (horizon == 0) throw std::invalid_argument("empty information sequence");
  if (d.blocks.size() != horizon) throw std::invalid_argument("block count mismatch");
  fims.j_s.assign(horizon, Mat());
  fims.j_s[horizon - 1] = fims.j_plus[horizon - 1];
  // Entry t covers time k = t+1, so the recursion for j_s[t] couples to
  // time k+1 through blocks[t+1], j_s[t+1] and j_minus[t+1].
  for (size_t t = horizon - 1; t-- > 0;) {
    const DBlocks& blk = d.blocks[t + 1];
    const Mat middle = symmetrized(d.q_inv + fims.j_s[t + 1] - fims.j_minus[t + 1]);
    Eigen::LDLT<Mat> ldlt(middle);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("singular information recursion");
    const Mat solved = ldlt.solve(blk.d12.transpose());
    fims.j_s[t] = symmetrized(fims.j_plus[t] + blk.d11 - blk.d12 * solved);
  }
}

BcrbTraces bcrb_traces(const FimSequence& fims) {
  BcrbTraces traces;
  traces.filter_trace.reserve(fims.j_plus.size());
  for (const Mat& j : fims.j_plus)
    traces.filter_trace.push_back(spd_inverse(j, "singular information matrix").trace());
  traces.smoother_trace.reserve(fims.j_s.size());
  for (const Mat& j : fims.j_s)
    traces.smoother_trace.push_back(spd_inverse(j, "singular information matrix").trace());
  return traces;
}

}  // namespace robustssm
