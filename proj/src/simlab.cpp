#include "robustssm/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

namespace robustssm {

const std::vector<std::string> kKnownEstimators = {
    "ukf", "emorf", "ideal_ukf", "urts", "emors", "ideal_urts"};

namespace {

bool is_smoother(const std::string& method) {
  return method == "urts" || method == "emors" || method == "ideal_urts";
}

Mat cholesky_factor(const Mat& pd, const char* what) {
  Eigen::LLT<Mat> llt(symmetrized(pd));
  if (llt.info() != Eigen::Success) throw std::runtime_error(what);
  return llt.matrixL();
}

Vec normal_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec z(n);
  for (int i = 0; i < n; ++i) z(i) = gauss(rng);
  return z;
}

// Zero-mean draw with the requested variance from the configured family.
double outlier_draw(const std::string& dist, double variance, std::mt19937_64& rng) {
  if (dist == "gaussian") {
    std::normal_distribution<double> gauss(0.0, std::sqrt(variance));
    return gauss(rng);
  }
  if (dist == "uniform") {
    const double half_width = std::sqrt(3.0 * variance);
    std::uniform_real_distribution<double> unif(-half_width, half_width);
    return unif(rng);
  }
  if (dist == "laplace") {
    const double scale = std::sqrt(variance / 2.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng) - 0.5;
    return -scale * (u < 0.0 ? -1.0 : 1.0) * std::log(1.0 - 2.0 * std::abs(u));
  }
  throw std::invalid_argument("unknown outlier distribution: " + dist);
}

double mse_of(const std::vector<Vec>& means, const std::vector<Vec>& states) {
  // means[t] estimates states[t + 1]; average over steps and state entries.
  double acc = 0.0;
  const int n = static_cast<int>(states.front().size());
  for (size_t t = 0; t < means.size(); ++t)
    acc += (means[t] - states[t + 1]).squaredNorm();
  return acc / (static_cast<double>(means.size()) * n);
}

std::vector<Vec> filtered_means(const std::vector<GaussianBelief>& beliefs) {
  std::vector<Vec> means;
  means.reserve(beliefs.size());
  for (const auto& b : beliefs) means.push_back(b.mean);
  return means;
}

unsigned worker_count(int runs) {
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ROBUSTSSM_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) workers = std::min<unsigned>(workers, static_cast<unsigned>(parsed));
  }
  return std::min<unsigned>(workers, static_cast<unsigned>(std::max(runs, 1)));
}

struct RunOutput {
  std::vector<MethodRecord> records;
  std::vector<std::string> failures;
};

struct RunContext {
  const Scenario& sc;
  const ModelDef& model;
  const NoiseSpec& noise;
  const Mat& init_chol;  // factor of P0 = Q
};

std::vector<Vec> estimate(const std::string& method, const std::vector<Vec>& y,
                          const std::vector<RejectorMask>& masks, const RunContext& ctx,
                          const GaussianBelief& init) {
  if (method == "emorf") {
    const FilterRun run = run_filter(y, ctx.model, ctx.noise, ctx.sc.em, ctx.sc.ut, init);
    if (!run.ok()) throw std::runtime_error(run.error);
    std::vector<Vec> means;
    means.reserve(run.steps.size());
    for (const auto& s : run.steps) means.push_back(s.posterior.mean);
    return means;
  }
  if (method == "ukf" || method == "urts") {
    const int m = ctx.model.meas_dim;
    const std::vector<IndicatorVector> clean(
        y.size(), IndicatorVector::all_clean(m, ctx.sc.em.epsilon));
    ForwardPassResult fwd = forward_pass(y, ctx.model, ctx.noise, clean, ctx.sc.ut, init);
    if (method == "ukf") return filtered_means(fwd.filtered);
    return filtered_means(backward_pass(fwd.predicted, fwd.filtered, ctx.model, ctx.sc.ut));
  }
  if (method == "ideal_ukf")
    return filtered_means(
        perfect_rejector_filter(y, masks, ctx.model, ctx.noise, ctx.sc.ut, init).filtered);
  if (method == "ideal_urts")
    return filtered_means(
        perfect_rejector_smoother(y, masks, ctx.model, ctx.noise, ctx.sc.ut, init));
  if (method == "emors") {
    const SmootherState st = emors_run(y, ctx.model, ctx.noise, ctx.sc.em, ctx.sc.ut, init);
    return filtered_means(st.smoothed);
  }
  throw std::invalid_argument("unknown estimator: " + method);
}

// Per-run bound: trajectory expectation samples are drawn from the prior and
// the process model, and the masks are this run's true contamination pattern.
BcrbTraces compute_bound_traces(const RunContext& ctx,
                                const std::vector<RejectorMask>& masks,
                                std::mt19937_64& rng) {
  const int n = ctx.model.state_dim;
  const Vec x0 = tracking_initial_state();
  std::vector<std::vector<Vec>> samples(static_cast<size_t>(ctx.sc.bcrb_trajectories));
  for (auto& traj : samples) {
    traj.reserve(masks.size() + 1);
    traj.push_back(x0 + ctx.init_chol * normal_vector(n, rng));
    for (size_t k = 0; k < masks.size(); ++k)
      traj.push_back(ctx.model.f(traj.back()) + ctx.init_chol * normal_vector(n, rng));
  }
  const DBlockSequence d = d_blocks(samples, ctx.model, ctx.noise.Q, ctx.noise.R, masks);
  FimSequence fims = fim_filter(d, d.q_inv);  // prior information is Q^{-1}
  fim_smoother(d, fims);
  return bcrb_traces(fims);
}

// Scalar bounds normalized exactly like the MSE.
std::pair<double, double> run_bounds(const RunContext& ctx,
                                     const std::vector<RejectorMask>& masks,
                                     std::mt19937_64& rng) {
  const BcrbTraces traces = compute_bound_traces(ctx, masks, rng);
  const double denom =
      static_cast<double>(traces.filter_trace.size()) * ctx.model.state_dim;
  double filter_bound = 0.0, smoother_bound = 0.0;
  for (double v : traces.filter_trace) filter_bound += v;
  for (double v : traces.smoother_trace) smoother_bound += v;
  return {filter_bound / denom, smoother_bound / denom};
}

RunOutput execute_run(int run, const RunContext& ctx) {
  RunOutput out;
  std::mt19937_64 rng_truth = make_stream(ctx.sc.seed, static_cast<std::uint64_t>(run), 0);
  const std::vector<Vec> states = simulate_truth(ctx.sc, rng_truth);
  std::mt19937_64 rng_meas = make_stream(ctx.sc.seed, static_cast<std::uint64_t>(run), 1);
  const MeasurementSet meas = generate_measurements(states, ctx.sc, rng_meas);

  std::mt19937_64 rng_init = make_stream(ctx.sc.seed, static_cast<std::uint64_t>(run), 2);
  GaussianBelief init;
  init.mean = tracking_initial_state() + ctx.init_chol * normal_vector(ctx.model.state_dim, rng_init);
  init.cov = ctx.noise.Q;

  double filter_bound = std::numeric_limits<double>::quiet_NaN();
  double smoother_bound = std::numeric_limits<double>::quiet_NaN();
  if (ctx.sc.bcrb_trajectories > 0) {
    std::mt19937_64 rng_bcrb = make_stream(ctx.sc.seed, static_cast<std::uint64_t>(run), 3);
    try {
      std::tie(filter_bound, smoother_bound) = run_bounds(ctx, meas.true_masks, rng_bcrb);
    } catch (const std::exception& e) {
      out.failures.push_back("run " + std::to_string(run) + " bcrb: " + e.what());
    }
  }

  for (const std::string& method : ctx.sc.estimators) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const std::vector<Vec> means = estimate(method, meas.y, meas.true_masks, ctx, init);
      const double wall = std::chrono::duration<double>(
                              std::chrono::steady_clock::now() - start).count();
      out.records.push_back({run, method, mse_of(means, states), wall,
                             is_smoother(method) ? smoother_bound : filter_bound});
    } catch (const std::exception& e) {
      out.failures.push_back("run " + std::to_string(run) + " " + method + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

TrackingParams Scenario::resolved_tracking() const {
  TrackingParams p = tracking;
  p.sensor_count = sensors;
  return p;
}

void Scenario::validate() const {
  if (schema_version != 1) throw std::invalid_argument("unsupported schema_version");
  if (sensors < 2) throw std::invalid_argument("sensors must be at least 2");
  if (!(lambda >= 0.0) || !(lambda <= 1.0)) throw std::invalid_argument("lambda must lie in [0, 1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (mc_runs < 1) throw std::invalid_argument("mc_runs must be positive");
  if (bcrb_trajectories < 0) throw std::invalid_argument("bcrb_trajectories must be nonnegative");
  if (estimators.empty()) throw std::invalid_argument("estimators must not be empty");
  const std::set<std::string> known(kKnownEstimators.begin(), kKnownEstimators.end());
  for (const auto& e : estimators)
    if (!known.count(e)) throw std::invalid_argument("unknown estimator: " + e);
  if (outlier_dist != "gaussian" && outlier_dist != "uniform" && outlier_dist != "laplace")
    throw std::invalid_argument("unknown outlier distribution: " + outlier_dist);
  if (!(em.epsilon > 0.0) || !(em.epsilon < 1.0))
    throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(em.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (em.max_iter < 1 || em.max_outer_iter < 1)
    throw std::invalid_argument("iteration limits must be positive");
  resolve_prior(em, sensors - 1);
  const TrackingParams p = resolved_tracking();
  tracking_process_cov(p);
  tdoa_noise_cov(p);
}

Vec tracking_initial_state() {
  Vec x0(5);
  x0 << 0.0, 1.0, 0.0, -1.0, -0.0524;
  return x0;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t run, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(run >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

std::vector<Vec> simulate_truth(const Scenario& sc, std::mt19937_64& rng) {
  const TrackingParams p = sc.resolved_tracking();
  const Mat q_chol = cholesky_factor(tracking_process_cov(p), "singular process covariance");
  std::vector<Vec> states;
  states.reserve(static_cast<size_t>(sc.horizon) + 1);
  states.push_back(tracking_initial_state());
  for (int k = 0; k < sc.horizon; ++k)
    states.push_back(coordinated_turn_f(states.back(), p.zeta) +
                     q_chol * normal_vector(5, rng));
  return states;
}

MeasurementSet generate_measurements(const std::vector<Vec>& states, const Scenario& sc,
                                     std::mt19937_64& rng) {
  const TrackingParams p = sc.resolved_tracking();
  const Mat r = tdoa_noise_cov(p);
  const Mat r_chol = cholesky_factor(r, "singular measurement covariance");
  const int m = p.sensor_count - 1;
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  MeasurementSet out;
  out.y.reserve(states.size() - 1);
  out.true_masks.reserve(states.size() - 1);
  for (size_t k = 1; k < states.size(); ++k) {
    Vec y = tdoa_measurement(states[k], p) + r_chol * normal_vector(m, rng);
    std::vector<std::uint8_t> hit(static_cast<size_t>(p.sensor_count));
    for (int s = 0; s < p.sensor_count; ++s)
      hit[static_cast<size_t>(s)] = unif(rng) < sc.lambda ? 1 : 0;
    RejectorMask mask;
    mask.included.resize(static_cast<size_t>(m));
    for (int j = 0; j < m; ++j) {
      const bool contaminated = hit[0] || hit[static_cast<size_t>(j + 1)];
      mask.included[static_cast<size_t>(j)] = contaminated ? 0 : 1;
      if (contaminated) y(j) += outlier_draw(sc.outlier_dist, sc.gamma * r(j, j), rng);
    }
    out.y.push_back(std::move(y));
    out.true_masks.push_back(std::move(mask));
  }
  return out;
}

RejectorRun perfect_rejector_filter(const std::vector<Vec>& y_seq,
                                    const std::vector<RejectorMask>& masks,
                                    const ModelDef& model, const NoiseSpec& noise,
                                    const UtParams& ut, const GaussianBelief& init) {
  if (masks.size() != y_seq.size()) throw std::invalid_argument("mask sequence length mismatch");
  RejectorRun run;
  run.predicted.reserve(y_seq.size());
  run.filtered.reserve(y_seq.size());
  GaussianBelief belief = init;
  for (size_t k = 0; k < y_seq.size(); ++k) {
    run.predicted.push_back(predict(belief, model, noise.Q, ut));
    std::vector<int> keep;
    for (size_t j = 0; j < masks[k].included.size(); ++j)
      if (masks[k].included[j]) keep.push_back(static_cast<int>(j));
    if (keep.empty()) {
      run.filtered.push_back(run.predicted.back());
    } else {
      const int c = static_cast<int>(keep.size());
      ModelDef reduced = model;
      reduced.meas_dim = c;
      reduced.h = [&model, keep](const Vec& x) {
        const Vec full = model.h(x);
        Vec sub(static_cast<Eigen::Index>(keep.size()));
        for (size_t j = 0; j < keep.size(); ++j) sub(static_cast<Eigen::Index>(j)) = full(keep[j]);
        return sub;
      };
      Mat r_sub(c, c);
      Vec y_sub(c);
      for (int a = 0; a < c; ++a) {
        y_sub(a) = y_seq[k](keep[static_cast<size_t>(a)]);
        for (int b = 0; b < c; ++b)
          r_sub(a, b) = noise.R(keep[static_cast<size_t>(a)], keep[static_cast<size_t>(b)]);
      }
      run.filtered.push_back(gaussian_update(run.predicted.back(), y_sub, reduced, r_sub, ut));
    }
    belief = run.filtered.back();
  }
  return run;
}

std::vector<GaussianBelief> perfect_rejector_smoother(const std::vector<Vec>& y_seq,
                                                      const std::vector<RejectorMask>& masks,
                                                      const ModelDef& model,
                                                      const NoiseSpec& noise,
                                                      const UtParams& ut,
                                                      const GaussianBelief& init) {
  const RejectorRun run = perfect_rejector_filter(y_seq, masks, model, noise, ut, init);
  return backward_pass(run.predicted, run.filtered, model, ut);
}

BoxStats boxplot_stats(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  std::sort(samples.begin(), samples.end());
  const auto quantile = [&samples](double p) {
    const double pos = p * static_cast<double>(samples.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= samples.size()) return samples.back();
    return samples[lo] + frac * (samples[lo + 1] - samples[lo]);
  };
  BoxStats s;
  s.median = quantile(0.5);
  s.q1 = quantile(0.25);
  s.q3 = quantile(0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_lo = std::numeric_limits<double>::infinity();
  s.whisker_hi = -std::numeric_limits<double>::infinity();
  for (double v : samples) {
    if (v >= lo_fence && v <= hi_fence) {
      s.whisker_lo = std::min(s.whisker_lo, v);
      s.whisker_hi = std::max(s.whisker_hi, v);
    } else {
      s.outliers.push_back(v);
    }
  }
  return s;
}

BcrbTraces bound_traces_for_run(const Scenario& sc, int run) {
  sc.validate();
  if (sc.bcrb_trajectories < 1)
    throw std::invalid_argument("bcrb_trajectories must be positive for bound computation");
  const TrackingParams params = sc.resolved_tracking();
  const ModelDef model = make_tracking_model(params);
  const NoiseSpec noise{tracking_process_cov(params), tdoa_noise_cov(params)};
  const Mat init_chol = cholesky_factor(noise.Q, "singular process covariance");
  const RunContext ctx{sc, model, noise, init_chol};

  std::mt19937_64 rng_truth = make_stream(sc.seed, static_cast<std::uint64_t>(run), 0);
  const std::vector<Vec> states = simulate_truth(sc, rng_truth);
  std::mt19937_64 rng_meas = make_stream(sc.seed, static_cast<std::uint64_t>(run), 1);
  const MeasurementSet meas = generate_measurements(states, sc, rng_meas);
  std::mt19937_64 rng_bcrb = make_stream(sc.seed, static_cast<std::uint64_t>(run), 3);
  return compute_bound_traces(ctx, meas.true_masks, rng_bcrb);
}

DetectionStats detection_stats(const std::vector<IndicatorVector>& indicators,
                               const std::vector<RejectorMask>& masks) {
  if (indicators.size() != masks.size())
    throw std::invalid_argument("sequence length mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (size_t k = 0; k < masks.size(); ++k) {
    if (masks[k].included.size() != static_cast<size_t>(indicators[k].dim()))
      throw std::invalid_argument("mask dimension mismatch");
    for (int j = 0; j < indicators[k].dim(); ++j) {
      const bool flagged = !indicators[k].is_clean(j);
      const bool contaminated = masks[k].included[static_cast<size_t>(j)] == 0;
      if (flagged && contaminated) ++tp;
      else if (flagged && !contaminated) ++fp;
      else if (!flagged && contaminated) ++fn;
    }
  }
  DetectionStats d;
  d.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  d.recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  return d;
}

McReport run_mc(const Scenario& sc) {
  sc.validate();
  const TrackingParams params = sc.resolved_tracking();
  const ModelDef model = make_tracking_model(params);
  const NoiseSpec noise{tracking_process_cov(params), tdoa_noise_cov(params)};
  const Mat init_chol = cholesky_factor(noise.Q, "singular process covariance");
  const RunContext ctx{sc, model, noise, init_chol};

  std::vector<RunOutput> outputs(static_cast<size_t>(sc.mc_runs));
  const unsigned workers = worker_count(sc.mc_runs);
  if (workers <= 1) {
    for (int run = 0; run < sc.mc_runs; ++run)
      outputs[static_cast<size_t>(run)] = execute_run(run, ctx);
  } else {
    std::atomic<int> next{0};
    auto work = [&]() {
      for (int run = next.fetch_add(1); run < sc.mc_runs; run = next.fetch_add(1))
        outputs[static_cast<size_t>(run)] = execute_run(run, ctx);
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  McReport report;
  report.scenario = sc;
  std::map<std::string, std::vector<double>> mse_by_method;
  for (const auto& out : outputs) {
    for (const auto& rec : out.records) {
      mse_by_method[rec.method].push_back(rec.mse);
      report.records.push_back(rec);
    }
    for (const auto& msg : out.failures) report.failure_messages.push_back(msg);
  }
  for (const auto& method : sc.estimators) {
    const auto it = mse_by_method.find(method);
    const int successes = it == mse_by_method.end() ? 0 : static_cast<int>(it->second.size());
    const int failed = sc.mc_runs - successes;
    if (failed > 0) report.failure_counts[method] = failed;
    if (successes > 0) report.stats[method] = boxplot_stats(it->second);
  }
  return report;
}

}  // namespace robustssm
