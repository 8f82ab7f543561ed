#include "robustssm/outlier_algebra.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace robustssm {

namespace {

void check_inputs(const Mat& r, const IndicatorVector& ind) {
  if (r.rows() != r.cols()) throw std::invalid_argument("R must be square");
  if (r.rows() != ind.dim()) throw std::invalid_argument("indicator dimension mismatch");
}

// Shared per-(ind, i) factors: the masked cross vector r_tilde between
// dimension i and the others, v = D^{-1} r_tilde for the masked submatrix D
// over the others, and the Schur scalar S = R_ii - r_tilde^T v. Entries of
// r_tilde at outlying dimensions are zero, so only the retained submatrix is
// ever factorized.
struct FlipFactors {
  std::vector<int> others;
  Vec r_tilde;
  Vec v;
  double schur = 0.0;
};

FlipFactors flip_factors(const Mat& r, const IndicatorVector& ind, int i) {
  const int m = ind.dim();
  if (!(r(i, i) > 0.0)) throw std::invalid_argument("R diagonal must be positive");
  FlipFactors f;
  f.others.reserve(static_cast<size_t>(m - 1));
  std::vector<int> clean_pos;  // positions inside `others`
  for (int j = 0; j < m; ++j) {
    if (j == i) continue;
    if (ind.is_clean(j)) clean_pos.push_back(static_cast<int>(f.others.size()));
    f.others.push_back(j);
  }
  const int c = static_cast<int>(clean_pos.size());
  f.r_tilde = Vec::Zero(m - 1);
  f.v = Vec::Zero(m - 1);
  if (c > 0) {
    Mat r_cc(c, c);
    Vec r_ci(c);
    for (int a = 0; a < c; ++a) {
      const int ja = f.others[static_cast<size_t>(clean_pos[static_cast<size_t>(a)])];
      r_ci(a) = r(ja, i);
      for (int b = 0; b < c; ++b)
        r_cc(a, b) = r(ja, f.others[static_cast<size_t>(clean_pos[static_cast<size_t>(b)])]);
    }
    Eigen::LLT<Mat> llt(r_cc);
    if (llt.info() != Eigen::Success) throw std::runtime_error("retained block singular");
    const Vec v_c = llt.solve(r_ci);
    for (int a = 0; a < c; ++a) {
      const int pos = clean_pos[static_cast<size_t>(a)];
      f.r_tilde(pos) = r_ci(a);
      f.v(pos) = v_c(a);
    }
  }
  f.schur = r(i, i) - f.r_tilde.dot(f.v);
  if (!(f.schur > 1e-12 * r(i, i)))
    throw std::runtime_error("Schur complement not positive");
  return f;
}

Mat assemble_delta(const Mat& r, const IndicatorVector& ind, int i,
                   const FlipFactors& f) {
  const int m = ind.dim();
  const double s_inv = 1.0 / f.schur;
  Mat delta = Mat::Zero(m, m);
  delta(i, i) = s_inv - ind.epsilon() / r(i, i);
  for (int a = 0; a < m - 1; ++a) {
    const int ja = f.others[static_cast<size_t>(a)];
    delta(i, ja) = -f.v(a) * s_inv;
    delta(ja, i) = delta(i, ja);
    for (int b = 0; b < m - 1; ++b)
      delta(ja, f.others[static_cast<size_t>(b)]) = f.v(a) * f.v(b) * s_inv;
  }
  return delta;
}

}  // namespace

IndicatorVector::IndicatorVector(int dim, double epsilon) : epsilon_(epsilon) {
  if (dim < 1) throw std::invalid_argument("indicator dimension must be positive");
  if (!(epsilon > 0.0) || !(epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  clean_.assign(static_cast<size_t>(dim), 1);
}

IndicatorVector IndicatorVector::all_clean(int dim, double epsilon) {
  return IndicatorVector(dim, epsilon);
}

Vec IndicatorVector::values() const {
  Vec v(dim());
  for (int i = 0; i < dim(); ++i) v(i) = value(i);
  return v;
}

int IndicatorVector::clean_count() const {
  return static_cast<int>(std::accumulate(clean_.begin(), clean_.end(), 0));
}

Mat masked_cov(const Mat& r, const IndicatorVector& ind) {
  check_inputs(r, ind);
  const int m = ind.dim();
  Mat out = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    out(i, i) = r(i, i) / ind.value(i);
    if (!ind.is_clean(i)) continue;
    for (int j = 0; j < m; ++j)
      if (j != i && ind.is_clean(j)) out(i, j) = r(i, j);
  }
  return out;
}

Mat masked_prec(const Mat& r, const IndicatorVector& ind) {
  check_inputs(r, ind);
  const int m = ind.dim();
  std::vector<int> clean;
  for (int i = 0; i < m; ++i)
    if (ind.is_clean(i)) clean.push_back(i);
  Mat out = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i)
    if (!ind.is_clean(i)) out(i, i) = ind.epsilon() / r(i, i);
  const int c = static_cast<int>(clean.size());
  if (c > 0) {
    Mat r_cc(c, c);
    for (int a = 0; a < c; ++a)
      for (int b = 0; b < c; ++b)
        r_cc(a, b) = r(clean[static_cast<size_t>(a)], clean[static_cast<size_t>(b)]);
    Eigen::LLT<Mat> llt(r_cc);
    if (llt.info() != Eigen::Success) throw std::runtime_error("retained block singular");
    const Mat inv = llt.solve(Mat::Identity(c, c));
    for (int a = 0; a < c; ++a)
      for (int b = 0; b < c; ++b)
        out(clean[static_cast<size_t>(a)], clean[static_cast<size_t>(b)]) = inv(a, b);
  }
  return out;
}

Mat delta_prec(const Mat& r, const IndicatorVector& ind, int i) {
  check_inputs(r, ind);
  if (i < 0 || i >= ind.dim()) throw std::invalid_argument("dimension index out of range");
  return assemble_delta(r, ind, i, flip_factors(r, ind, i));
}

double tau(const Mat& w, const Mat& r, const IndicatorVector& ind, int i,
           const OutlierPrior& prior) {
  check_inputs(r, ind);
  if (w.rows() != r.rows() || w.cols() != r.cols())
    throw std::invalid_argument("W dimension mismatch");
  if (i < 0 || i >= ind.dim()) throw std::invalid_argument("dimension index out of range");
  if (prior.theta.size() != ind.dim())
    throw std::invalid_argument("prior dimension mismatch");
  const double theta = prior.theta(i);
  if (!(theta > 0.0) || !(theta < 1.0))
    throw std::invalid_argument("theta must lie in (0, 1)");

  const FlipFactors f = flip_factors(r, ind, i);
  const Mat delta = assemble_delta(r, ind, i, f);
  const double fit = w.cwiseProduct(delta).sum();  // tr(W * delta)

  // Determinant ratio of the two masked covariances, reduced to the
  // (m-1)-dimensional form |I - r_tilde (D^{-1} r_tilde)^T / R_ii|.
  double logdet = 0.0;
  const int m = ind.dim();
  if (m > 1) {
    const Mat det_arg = Mat::Identity(m - 1, m - 1) -
                        (f.r_tilde * f.v.transpose()) / r(i, i);
    const double det = Eigen::PartialPivLU<Mat>(det_arg).determinant();
    if (!(det > 0.0) || !std::isfinite(det))
      throw std::runtime_error("invalid log-determinant");
    logdet = std::log(det);
  }

  return fit + logdet + std::log(ind.epsilon()) + 2.0 * std::log(1.0 / theta - 1.0);
}

IndicatorVector sweep_indicators(const Mat& w, const Mat& r, IndicatorVector ind,
                                 const OutlierPrior& prior) {
  std::vector<int> order(static_cast<size_t>(ind.dim()));
  std::iota(order.begin(), order.end(), 0);
  return sweep_indicators(w, r, std::move(ind), prior, order);
}

IndicatorVector sweep_indicators(const Mat& w, const Mat& r, IndicatorVector ind,
                                 const OutlierPrior& prior,
                                 const std::vector<int>& order) {
  for (int i : order) {
    const double t = tau(w, r, ind, i, prior);
    ind.set_clean(i, t <= 0.0);  // ties keep the dimension
  }
  return ind;
}

}  // namespace robustssm
