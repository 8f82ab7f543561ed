#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "oracles.hpp"
#include "robustssm/outlier_algebra.hpp"

using namespace robustssm;

namespace {

OutlierPrior uniform_prior(int m, double theta = 0.5) {
  return OutlierPrior{Vec::Constant(m, theta)};
}

// Iterates coordinate sweeps until the indicators stop changing.
IndicatorVector sweep_to_fixed_point(const Mat& w, const Mat& r, IndicatorVector ind,
                                     const OutlierPrior& prior, int max_sweeps = 10) {
  for (int s = 0; s < max_sweeps; ++s) {
    IndicatorVector next = sweep_indicators(w, r, ind, prior);
    if (next == ind) return ind;
    ind = next;
  }
  FAIL("coordinate sweep did not reach a fixed point");
  return ind;
}

}  // namespace

TEST_CASE("indicator vector starts clean and tracks per-dimension state") {
  IndicatorVector ind(4, 1e-6);
  CHECK(ind.dim() == 4);
  CHECK(ind.epsilon() == 1e-6);
  CHECK(ind.clean_count() == 4);
  for (int i = 0; i < 4; ++i) CHECK(ind.is_clean(i));

  ind.set_clean(2, false);
  CHECK_FALSE(ind.is_clean(2));
  CHECK(ind.clean_count() == 3);
  CHECK(ind.value(2) == 1e-6);
  CHECK(ind.value(0) == 1.0);
  const Vec vals = ind.values();
  CHECK(vals(2) == 1e-6);
  CHECK(vals(3) == 1.0);

  CHECK(ind == ind);
  IndicatorVector other = IndicatorVector::all_clean(4, 1e-6);
  CHECK_FALSE(ind == other);
  other.set_clean(2, false);
  CHECK(ind == other);
}

TEST_CASE("indicator vector rejects bad dimensions and epsilon") {
  CHECK_THROWS_AS(IndicatorVector(0, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(IndicatorVector(-2, 1e-6), std::invalid_argument);
  CHECK_THROWS_AS(IndicatorVector(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(IndicatorVector(3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(IndicatorVector(3, -1e-6), std::invalid_argument);
}

TEST_CASE("masked covariance matches the elementwise definition") {
  Mat r(3, 3);
  r << 4.0, 1.0, 2.0,
       1.0, 5.0, 3.0,
       2.0, 3.0, 6.0;
  IndicatorVector ind(3, 1e-6);
  ind.set_clean(1, false);

  const Mat masked = masked_cov(r, ind);
  CHECK(masked(0, 0) == 4.0);
  CHECK(masked(1, 1) == 5.0 / 1e-6);
  CHECK(masked(2, 2) == 6.0);
  CHECK(masked(0, 2) == 2.0);
  CHECK(masked(2, 0) == 2.0);
  CHECK(masked(0, 1) == 0.0);
  CHECK(masked(1, 0) == 0.0);
  CHECK(masked(1, 2) == 0.0);
  CHECK(masked(2, 1) == 0.0);

  // All clean reproduces R; all outlying keeps only the inflated diagonal.
  CHECK((masked_cov(r, IndicatorVector(3, 1e-6)) - r).norm() == 0.0);
  IndicatorVector none(3, 1e-2);
  for (int i = 0; i < 3; ++i) none.set_clean(i, false);
  const Mat all_out = masked_cov(r, none);
  CHECK((all_out - Vec(r.diagonal() * 1e2).asDiagonal().toDenseMatrix()).norm() == 0.0);
}

TEST_CASE("masked precision inverts the masked covariance for every pattern") {
  std::mt19937 rng(11);
  for (int m = 1; m <= 6; ++m) {
    const Mat r = oracle::random_spd(m, rng);
    for (unsigned bits = 0; bits < (1u << m); ++bits) {
      // Brute inverse at a mild epsilon where its conditioning is trustworthy.
      const IndicatorVector mild = oracle::pattern_from_bits(m, bits, 1e-3);
      const Mat brute = oracle::brute_masked_prec(r, mild);
      const Mat prec = masked_prec(r, mild);
      CHECK((prec - brute).norm() < 1e-10 * brute.norm());

      // At the working epsilon, verify the product directly instead.
      const IndicatorVector tight = oracle::pattern_from_bits(m, bits, 1e-6);
      const Mat prod = masked_prec(r, tight) * masked_cov(r, tight);
      CHECK((prod - Mat::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("masked precision keeps outlier rows decoupled exactly") {
  std::mt19937 rng(12);
  const int m = 5;
  const Mat r = oracle::random_spd(m, rng);
  IndicatorVector ind(m, 1e-6);
  ind.set_clean(1, false);
  ind.set_clean(4, false);
  const Mat prec = masked_prec(r, ind);
  CHECK(prec(1, 1) == 1e-6 / r(1, 1));
  CHECK(prec(4, 4) == 1e-6 / r(4, 4));
  for (int j = 0; j < m; ++j) {
    if (j != 1) {
      CHECK(prec(1, j) == 0.0);
      CHECK(prec(j, 1) == 0.0);
    }
    if (j != 4) {
      CHECK(prec(4, j) == 0.0);
      CHECK(prec(j, 4) == 0.0);
    }
  }
  // Clean block equals the inverse of the retained submatrix.
  Mat retained(3, 3);
  const int keep[3] = {0, 2, 3};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) retained(a, b) = r(keep[a], keep[b]);
  const Mat retained_inv = retained.inverse();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      CHECK(prec(keep[a], keep[b]) == doctest::Approx(retained_inv(a, b)).epsilon(1e-12));
}

TEST_CASE("precision difference matches the brute force indicator flip") {
  std::mt19937 rng(13);
  for (int m = 2; m <= 6; ++m) {
    const Mat r = oracle::random_spd(m, rng);
    for (unsigned bits = 0; bits < (1u << m); ++bits) {
      const IndicatorVector ind = oracle::pattern_from_bits(m, bits, 1e-3);
      for (int i = 0; i < m; ++i) {
        IndicatorVector clean = ind, dirty = ind;
        clean.set_clean(i, true);
        dirty.set_clean(i, false);
        const Mat brute =
            oracle::brute_masked_prec(r, clean) - oracle::brute_masked_prec(r, dirty);
        const Mat delta = delta_prec(r, ind, i);
        CHECK((delta - brute).norm() < 1e-9 * std::max(1.0, brute.norm()));
        CHECK((delta - delta.transpose()).norm() == 0.0);
      }
    }
  }
}

TEST_CASE("precision difference zeroes rows of other outlying dimensions exactly") {
  std::mt19937 rng(14);
  const int m = 6;
  const Mat r = oracle::random_spd(m, rng);
  IndicatorVector ind(m, 1e-6);
  ind.set_clean(0, false);
  ind.set_clean(3, false);
  for (int i : {1, 4}) {
    const Mat delta = delta_prec(r, ind, i);
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      CHECK(delta(0, j) == 0.0);
      CHECK(delta(j, 0) == 0.0);
      CHECK(delta(3, j) == 0.0);
      CHECK(delta(j, 3) == 0.0);
    }
    // The flipped dimension couples only to retained dimensions.
    CHECK(delta(i, i) != 0.0);
  }
}

TEST_CASE("decision statistic equals twice the joint objective gap") {
  std::mt19937 rng(15);
  const int m = 4;
  for (int trial = 0; trial < 50; ++trial) {
    const Mat r = oracle::random_spd(m, rng);
    const Mat w = oracle::random_psd(m, rng);
    OutlierPrior prior{Vec::Zero(m)};
    std::uniform_real_distribution<double> unif(0.1, 0.9);
    for (int i = 0; i < m; ++i) prior.theta(i) = unif(rng);

    const unsigned bits = static_cast<unsigned>(rng() % (1u << m));
    const IndicatorVector ind = oracle::pattern_from_bits(m, bits, 1e-3);
    for (int i = 0; i < m; ++i) {
      IndicatorVector clean = ind, dirty = ind;
      clean.set_clean(i, true);
      dirty.set_clean(i, false);
      const double gap = 2.0 * (oracle::joint_objective(w, r, dirty, prior) -
                                oracle::joint_objective(w, r, clean, prior));
      const double t = tau(w, r, ind, i, prior);
      CHECK(t == doctest::Approx(gap).epsilon(1e-7));
      // The statistic compares the two settings of dimension i, so the
      // current value of that indicator must not matter.
      CHECK(tau(w, r, clean, i, prior) == tau(w, r, dirty, i, prior));
    }
  }
}

TEST_CASE("reduced determinant term reproduces the exact masked ratio") {
  std::mt19937 rng(16);
  const int m = 5;
  for (int trial = 0; trial < 40; ++trial) {
    const Mat r = oracle::random_spd(m, rng);
    const Mat w = oracle::random_psd(m, rng);
    const OutlierPrior prior = uniform_prior(m, 0.4);
    const unsigned bits = static_cast<unsigned>(rng() % (1u << m));
    const IndicatorVector ind = oracle::pattern_from_bits(m, bits, 1e-3);
    for (int i = 0; i < m; ++i) {
      const double fit = w.cwiseProduct(delta_prec(r, ind, i)).sum();
      const double priors = 2.0 * std::log(1.0 / prior.theta(i) - 1.0);
      const double logdet_part = tau(w, r, ind, i, prior) - fit - priors;
      CHECK(logdet_part ==
            doctest::Approx(oracle::exact_logdet_ratio(r, ind, i)).epsilon(1e-8));
    }
  }
}

TEST_CASE("diagonal noise reduces the statistic to independent scalar tests") {
  // Hand value: fit = W_ii (1 - eps) / R_ii, no determinant term, theta = 1/2.
  Mat r = Mat::Zero(2, 2);
  r(0, 0) = 1.0;
  r(1, 1) = 2.0;
  Mat w = Mat::Zero(2, 2);
  w(0, 0) = 9.0;
  w(1, 1) = 4.0;
  const OutlierPrior prior = uniform_prior(2);
  const IndicatorVector ind(2, 1e-6);
  const double expected0 = 9.0 * (1.0 - 1e-6) + std::log(1e-6);
  CHECK(tau(w, r, ind, 0, prior) == doctest::Approx(expected0).epsilon(1e-14));

  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unif_diag(0.2, 5.0);
  std::uniform_real_distribution<double> unif_theta(0.1, 0.9);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 5);
    Mat rd = Mat::Zero(m, m);
    for (int i = 0; i < m; ++i) rd(i, i) = unif_diag(rng);
    const Mat wf = oracle::random_psd(m, rng);
    OutlierPrior pr{Vec::Zero(m)};
    for (int i = 0; i < m; ++i) pr.theta(i) = unif_theta(rng);
    const double eps = 1e-6;
    const IndicatorVector start =
        oracle::pattern_from_bits(m, static_cast<unsigned>(rng() % (1u << m)), eps);

    for (int i = 0; i < m; ++i) {
      const double scalar = wf(i, i) * (1.0 - eps) / rd(i, i) + std::log(eps) +
                            2.0 * std::log(1.0 / pr.theta(i) - 1.0);
      const double t = tau(wf, rd, start, i, pr);
      CHECK(std::abs(t - scalar) < 1e-10 * std::max(1.0, std::abs(scalar)));
    }

    // With no cross terms a single sweep lands on the independent decisions
    // no matter where it starts.
    const IndicatorVector swept = sweep_indicators(wf, rd, start, pr);
    for (int i = 0; i < m; ++i) {
      const double scalar = wf(i, i) * (1.0 - eps) / rd(i, i) + std::log(eps) +
                            2.0 * std::log(1.0 / pr.theta(i) - 1.0);
      CHECK(swept.is_clean(i) == (scalar <= 0.0));
    }
  }
}

TEST_CASE("sweep keeps dimensions on ties and flags large residuals") {
  // Diagonal R, theta = 1/2: the threshold on W_ii / R_ii is -ln(eps)/(1-eps).
  const double eps = 1e-6;
  const double threshold = -std::log(eps) / (1.0 - eps);
  Mat r = Mat::Identity(3, 3);
  Mat w = Mat::Zero(3, 3);
  w(0, 0) = threshold - 0.1;
  w(1, 1) = threshold + 0.1;
  w(2, 2) = 0.0;
  const OutlierPrior prior = uniform_prior(3);
  const IndicatorVector out = sweep_indicators(w, r, IndicatorVector(3, eps), prior);
  CHECK(out.is_clean(0));
  CHECK_FALSE(out.is_clean(1));
  CHECK(out.is_clean(2));
}

TEST_CASE("coordinate sweep reaches a coordinatewise optimum of the objective") {
  std::mt19937 rng(18);
  const int m = 3;
  for (int trial = 0; trial < 30; ++trial) {
    const Mat r = oracle::random_spd(m, rng);
    Mat w = oracle::random_psd(m, rng);
    // Occasionally blow up one residual so both decisions appear.
    if (trial % 3 == 0) w(trial % m, trial % m) += 50.0 * r(trial % m, trial % m);
    const OutlierPrior prior = uniform_prior(m, 0.4);
    const IndicatorVector start =
        oracle::pattern_from_bits(m, static_cast<unsigned>(rng() % 8u), 1e-3);

    const IndicatorVector fixed = sweep_to_fixed_point(w, r, start, prior);
    CHECK(sweep_indicators(w, r, fixed, prior) == fixed);

    const double obj = oracle::joint_objective(w, r, fixed, prior);
    CHECK(obj >= oracle::joint_objective(w, r, start, prior) - 1e-12);
    for (int i = 0; i < m; ++i) {
      IndicatorVector flipped = fixed;
      flipped.set_clean(i, !fixed.is_clean(i));
      CHECK(oracle::joint_objective(w, r, flipped, prior) <= obj + 1e-9 * std::abs(obj));
    }
  }
}

TEST_CASE("decisive outlier drives the sweep to the exhaustive optimum") {
  std::mt19937 rng(19);
  const int m = 3;
  const Mat r = oracle::random_spd(m, rng);
  Mat w = r;  // residuals consistent with the clean model...
  w(1, 1) += 200.0 * r(1, 1);  // ...except one glaring dimension
  const OutlierPrior prior = uniform_prior(m);

  const IndicatorVector fixed =
      sweep_to_fixed_point(w, r, IndicatorVector(m, 1e-6), prior);

  double best = -std::numeric_limits<double>::infinity();
  unsigned best_bits = 0;
  for (unsigned bits = 0; bits < 8u; ++bits) {
    const double obj =
        oracle::joint_objective(w, r, oracle::pattern_from_bits(m, bits, 1e-6), prior);
    if (obj > best) {
      best = obj;
      best_bits = bits;
    }
  }
  CHECK(fixed == oracle::pattern_from_bits(m, best_bits, 1e-6));
  CHECK(fixed.is_clean(0));
  CHECK_FALSE(fixed.is_clean(1));
  CHECK(fixed.is_clean(2));
}

TEST_CASE("explicit visit orders compose like repeated sweeps") {
  std::mt19937 rng(20);
  const int m = 4;
  for (int trial = 0; trial < 20; ++trial) {
    const Mat r = oracle::random_spd(m, rng);
    const Mat w = oracle::random_psd(m, rng);
    const OutlierPrior prior = uniform_prior(m, 0.35);
    const IndicatorVector start =
        oracle::pattern_from_bits(m, static_cast<unsigned>(rng() % 16u), 1e-3);

    const IndicatorVector by_default = sweep_indicators(w, r, start, prior);
    const IndicatorVector by_order =
        sweep_indicators(w, r, start, prior, std::vector<int>{0, 1, 2, 3});
    CHECK(by_default == by_order);

    const IndicatorVector twice =
        sweep_indicators(w, r, by_default, prior);
    const IndicatorVector doubled = sweep_indicators(
        w, r, start, prior, std::vector<int>{0, 1, 2, 3, 0, 1, 2, 3});
    CHECK(twice == doubled);
  }
}

TEST_CASE("single dimension algebra stays consistent") {
  Mat r(1, 1);
  r << 2.5;
  const double eps = 1e-6;
  const IndicatorVector ind(1, eps);
  CHECK(masked_cov(r, ind)(0, 0) == 2.5);
  IndicatorVector dirty = ind;
  dirty.set_clean(0, false);
  CHECK(masked_cov(r, dirty)(0, 0) == 2.5 / eps);
  CHECK(masked_prec(r, dirty)(0, 0) == eps / 2.5);

  const Mat delta = delta_prec(r, ind, 0);
  CHECK(delta(0, 0) == doctest::Approx((1.0 - eps) / 2.5).epsilon(1e-14));

  Mat w(1, 1);
  w << 7.0;
  const OutlierPrior prior = uniform_prior(1, 0.25);
  const double expected = 7.0 * (1.0 - eps) / 2.5 + std::log(eps) + 2.0 * std::log(3.0);
  CHECK(tau(w, r, ind, 0, prior) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("algebra rejects malformed inputs") {
  std::mt19937 rng(21);
  const Mat r = oracle::random_spd(3, rng);
  const Mat w = oracle::random_psd(3, rng);
  const IndicatorVector ind(3, 1e-6);
  const OutlierPrior prior = uniform_prior(3);

  CHECK_THROWS_AS(masked_cov(Mat::Zero(3, 2), ind), std::invalid_argument);
  CHECK_THROWS_AS(masked_cov(Mat::Identity(4, 4), ind), std::invalid_argument);
  CHECK_THROWS_AS(masked_prec(Mat::Identity(2, 2), ind), std::invalid_argument);
  CHECK_THROWS_AS(delta_prec(r, ind, -1), std::invalid_argument);
  CHECK_THROWS_AS(delta_prec(r, ind, 3), std::invalid_argument);
  CHECK_THROWS_AS(tau(Mat::Identity(2, 2), r, ind, 0, prior), std::invalid_argument);
  CHECK_THROWS_AS(tau(w, r, ind, 5, prior), std::invalid_argument);
  CHECK_THROWS_AS(tau(w, r, ind, 0, uniform_prior(2)), std::invalid_argument);
  CHECK_THROWS_AS(tau(w, r, ind, 0, uniform_prior(3, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(tau(w, r, ind, 0, uniform_prior(3, 0.0)), std::invalid_argument);

  Mat bad_diag = r;
  bad_diag(1, 1) = 0.0;
  CHECK_THROWS_AS(delta_prec(bad_diag, ind, 1), std::invalid_argument);

  // Perfectly correlated clean pair: the retained block is singular and the
  // Schur complement collapses.
  Mat corr(2, 2);
  corr << 1.0, 1.0, 1.0, 1.0;
  const IndicatorVector pair(2, 1e-6);
  CHECK_THROWS_AS(masked_prec(corr, pair), std::runtime_error);
  CHECK_THROWS_AS(delta_prec(corr, pair, 0), std::runtime_error);
  CHECK_THROWS_WITH(delta_prec(corr, pair, 0), "Schur complement not positive");
}
