#pragma once

#include <cstdint>
#include <vector>

#include "robustssm/types.hpp"

namespace robustssm {

/// Per-dimension outlier indicators. Each entry takes the value 1 (clean) or
/// a small positive epsilon (outlier); epsilon > 0 keeps the masked noise
/// model a proper distribution.
class IndicatorVector {
 public:
  IndicatorVector(int dim, double epsilon);
  static IndicatorVector all_clean(int dim, double epsilon);

  int dim() const { return static_cast<int>(clean_.size()); }
  double epsilon() const { return epsilon_; }
  bool is_clean(int i) const { return clean_.at(static_cast<size_t>(i)) != 0; }
  void set_clean(int i, bool clean) { clean_.at(static_cast<size_t>(i)) = clean ? 1 : 0; }
  double value(int i) const { return is_clean(i) ? 1.0 : epsilon_; }
  Vec values() const;
  int clean_count() const;

  friend bool operator==(const IndicatorVector& a, const IndicatorVector& b) {
    return a.epsilon_ == b.epsilon_ && a.clean_ == b.clean_;
  }

 private:
  std::vector<std::uint8_t> clean_;
  double epsilon_;
};

/// Per-dimension prior probabilities that a measurement dimension is clean.
struct OutlierPrior {
  Vec theta;  // entries strictly inside (0, 1)
};

/// Masked noise covariance R(I): diagonal entries R_ii / I_i; off-diagonal
/// entries survive only between dimensions that are both clean.
Mat masked_cov(const Mat& r, const IndicatorVector& ind);

/// Inverse of masked_cov, assembled blockwise: the retained (clean) submatrix
/// is inverted in place, outlier dimensions contribute epsilon / R_ii on the
/// diagonal, and no cross terms appear. Never forms R(I) explicitly.
Mat masked_prec(const Mat& r, const IndicatorVector& ind);

/// Precision difference masked_prec with dimension i clean minus
/// masked_prec with dimension i outlying, all other entries of `ind` held
/// fixed. Assembled from the closed-form rank-structured blocks around the
/// Schur complement of the retained submatrix; rows and columns belonging to
/// other outlying dimensions are exactly zero.
Mat delta_prec(const Mat& r, const IndicatorVector& ind, int i);

/// Decision statistic for dimension i: keep it clean iff tau <= 0.
/// tau = tr(W * delta_prec) + log-det term + ln(epsilon) + 2 ln(1/theta_i - 1).
/// The log-det term is evaluated through the reduced (m-1)-dimensional
/// determinant, never through |R(I)| itself, whose epsilon factors would
/// overflow the significand for large m.
double tau(const Mat& w, const Mat& r, const IndicatorVector& ind, int i,
           const OutlierPrior& prior);

/// One coordinate sweep: visits dimensions in ascending order (or a caller
/// supplied order), re-evaluating tau with the freshest values of the other
/// indicators. A sweep from a fixed point is a no-op.
IndicatorVector sweep_indicators(const Mat& w, const Mat& r, IndicatorVector ind,
                                 const OutlierPrior& prior);
IndicatorVector sweep_indicators(const Mat& w, const Mat& r, IndicatorVector ind,
                                 const OutlierPrior& prior,
                                 const std::vector<int>& order);

}  // namespace robustssm
