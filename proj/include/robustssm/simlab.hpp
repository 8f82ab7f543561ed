#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "robustssm/bcrb.hpp"
#include "robustssm/emorf.hpp"
#include "robustssm/emors.hpp"
#include "robustssm/ssm.hpp"

namespace robustssm {

/// Method identifiers accepted in Scenario::estimators.
extern const std::vector<std::string> kKnownEstimators;

/// Full experiment description. Defaults reproduce the benchmark target
/// tracking setup, so an empty scenario file runs the reference experiment.
struct Scenario {
  int schema_version = 1;
  int sensors = 10;
  double lambda = 0.3;   // per-sensor contamination probability
  double gamma = 200.0;  // outlier variance multiplier
  int horizon = 100;     // measurement steps per run
  int mc_runs = 100;
  std::uint64_t seed = 1;
  std::vector<std::string> estimators = kKnownEstimators;
  std::string outlier_dist = "gaussian";  // gaussian | uniform | laplace
  int bcrb_trajectories = 200;            // 0 disables the bound
  UtParams ut;
  EmConfig em;
  TrackingParams tracking;  // sensor_count is overridden by `sensors`
  std::string out_dir = "out";

  TrackingParams resolved_tracking() const;
  void validate() const;
};

/// Initial state of the benchmark trajectory.
Vec tracking_initial_state();

/// Deterministic RNG stream for (seed, run, purpose); purposes keep the
/// truth, measurement, initialization and bound draws independent so worker
/// scheduling cannot affect any result.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t run, std::uint64_t purpose);

/// Simulates x_0..x_K; x_0 is the exact initial state, later states add
/// process noise.
std::vector<Vec> simulate_truth(const Scenario& sc, std::mt19937_64& rng);

struct MeasurementSet {
  std::vector<Vec> y;                   // y[t] observed at time t+1
  std::vector<RejectorMask> true_masks; // 0 marks a contaminated dimension
};

/// Draws nominal noise plus sensor-level contamination: each sensor's time
/// of arrival is hit independently with probability lambda, and a
/// difference dimension is contaminated when either of its two sensors is
/// hit. Contaminated dimensions receive additive noise with variance
/// gamma * (nominal dimension variance).
MeasurementSet generate_measurements(const std::vector<Vec>& states, const Scenario& sc,
                                     std::mt19937_64& rng);

struct RejectorRun {
  std::vector<GaussianBelief> predicted;
  std::vector<GaussianBelief> filtered;
};

/// Unscented filter that deletes the truly contaminated dimensions each
/// step. With every dimension deleted the posterior equals the prediction.
RejectorRun perfect_rejector_filter(const std::vector<Vec>& y_seq,
                                    const std::vector<RejectorMask>& masks,
                                    const ModelDef& model, const NoiseSpec& noise,
                                    const UtParams& ut, const GaussianBelief& init);

/// Rejector forward pass followed by the standard backward pass.
std::vector<GaussianBelief> perfect_rejector_smoother(const std::vector<Vec>& y_seq,
                                                      const std::vector<RejectorMask>& masks,
                                                      const ModelDef& model,
                                                      const NoiseSpec& noise,
                                                      const UtParams& ut,
                                                      const GaussianBelief& init);

/// Box plot summary; quartiles use linear interpolation between order
/// statistics and whiskers extend to the farthest sample within 1.5 IQR.
struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
  std::vector<double> outliers;
};

BoxStats boxplot_stats(std::vector<double> samples);

/// One CSV row: per-run, per-method result. bcrb_trace is the matching
/// bound (filter or smoother), normalized like the MSE; NaN when the bound
/// is disabled.
struct MethodRecord {
  int run = 0;
  std::string method;
  double mse = 0.0;
  double wall_time_s = 0.0;
  double bcrb_trace = 0.0;
};

struct McReport {
  Scenario scenario;
  std::vector<MethodRecord> records;         // ordered by run, then method
  std::map<std::string, BoxStats> stats;     // per-method MSE distribution
  std::map<std::string, int> failure_counts; // excluded runs per method
  std::vector<std::string> failure_messages;
};

/// Runs the Monte Carlo study. Runs are distributed over worker threads
/// (ROBUSTSSM_THREADS caps the count); every estimator in a run sees the
/// same data, and all randomness derives from (seed, run), so results are
/// identical for any worker count.
McReport run_mc(const Scenario& sc);

/// Per-step bound traces for one Monte Carlo run: the truth, contamination
/// pattern and expectation trajectories are drawn from the same streams the
/// full study uses, so the traces match the study's bounds for that run.
BcrbTraces bound_traces_for_run(const Scenario& sc, int run);

/// Detection quality of inferred indicators against the true masks.
struct DetectionStats {
  double precision = 1.0;
  double recall = 1.0;
};

DetectionStats detection_stats(const std::vector<IndicatorVector>& indicators,
                               const std::vector<RejectorMask>& masks);

}  // namespace robustssm
