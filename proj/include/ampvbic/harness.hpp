#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "ampvbic/detector.hpp"
#include "ampvbic/metrics.hpp"
#include "ampvbic/model.hpp"
#include "ampvbic/types.hpp"

namespace ampvbic {

enum class DetectorKind { AmpVbic, AmpVbicNoOffset, Genie };

inline std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::AmpVbic: return "amp_vbic";
    case DetectorKind::AmpVbicNoOffset: return "amp_vbic_no_offset";
    case DetectorKind::Genie: return "genie";
  }
  return "unknown";
}

inline std::optional<DetectorKind> parse_detector(std::string_view name) {
  if (name == "amp_vbic") return DetectorKind::AmpVbic;
  if (name == "amp_vbic_no_offset") return DetectorKind::AmpVbicNoOffset;
  if (name == "genie") return DetectorKind::Genie;
  return std::nullopt;
}

struct MetricsRecord {
  int trial = 0;
  double snr_db = 0.0;
  double p_a = 0.0;
  int M = 0;
  int N = 0;
  int J = 0;
  int n_it = 0;
  double aer = 0.0;
  double ser = 0.0;
  double ce_mse = 0.0;
  double runtime_ms = 0.0;
  DetectorKind detector = DetectorKind::AmpVbic;
};

/**
 * Known-support baseline: true activity and true channels, per-symbol
 * minimum-distance decisions on the detector's final pseudo-observations.
 */
inline DetectionResult genie_detect(const CMatrix& R, const std::vector<int>& support, const CVector& mu,
                                    const ExtendedAlphabet& alphabet) {
  const Eigen::Index M = R.rows();
  const Eigen::Index J = R.cols();
  if (static_cast<Eigen::Index>(support.size()) != M || mu.size() != M)
    throw LengthMismatch("genie truth does not match the pseudo-observations");

  DetectionResult out;
  out.activity_hat = support;
  out.D_hat = CMatrix::Zero(M, J);
  out.channel_hat = mu;
  out.llr_dec = RVector::Zero(M);
  out.llr_vbi = RVector::Zero(M);
  out.llr_offset = RVector::Zero(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    if (!support[m]) continue;
    for (Eigen::Index j = 0; j < J; ++j) {
      std::size_t best = 1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t k = 1; k < alphabet.size(); ++k) {
        const double dist = std::norm(R(m, j) - mu(m) * alphabet[k]);
        if (dist < best_dist) {
          best_dist = dist;
          best = k;
        }
      }
      out.D_hat(m, j) = alphabet[best];
    }
  }
  return out;
}

/// Posterior mean and variance of mu * d for d uniform over the active
/// alphabet, observed as r = mu * d + CN(0, tau).
inline std::pair<cd, double> known_channel_mmse(cd r, double tau, cd mu, const ExtendedAlphabet& alphabet) {
  const std::size_t K = alphabet.size();
  double peak = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(K);
  for (std::size_t k = 1; k < K; ++k) {
    logw[k] = -std::norm(r - mu * alphabet[k]) / tau;
    peak = std::max(peak, logw[k]);
  }
  double z = 0.0, second = 0.0;
  cd first{0.0, 0.0};
  for (std::size_t k = 1; k < K; ++k) {
    const double w = std::exp(logw[k] - peak);
    const cd x = mu * alphabet[k];
    z += w;
    first += w * x;
    second += w * std::norm(x);
  }
  first /= z;
  return {first, std::max(second / z - std::norm(first), kVarianceFloor)};
}

/**
 * Pseudo-observations of AMP run on the true support only, with the exact
 * symbol denoiser for the true channels. This is the input to genie_detect;
 * rows of inactive users stay zero.
 */
inline CMatrix known_support_observations(const CMatrix& A, const CMatrix& Y, const std::vector<int>& support,
                                          const CVector& mu, const ExtendedAlphabet& alphabet, double noise_var,
                                          int n_it) {
  const Eigen::Index M = A.cols();
  const Eigen::Index J = Y.cols();
  if (static_cast<Eigen::Index>(support.size()) != M || mu.size() != M)
    throw LengthMismatch("genie truth does not match the frame");
  std::vector<Eigen::Index> cols;
  for (Eigen::Index m = 0; m < M; ++m)
    if (support[m]) cols.push_back(m);

  CMatrix R = CMatrix::Zero(M, J);
  if (cols.empty()) return R;
  const auto Ms = static_cast<Eigen::Index>(cols.size());
  CMatrix As(A.rows(), Ms);
  CVector mus(Ms);
  for (Eigen::Index i = 0; i < Ms; ++i) {
    As.col(i) = A.col(cols[i]);
    mus(i) = mu(cols[i]);
  }

  auto [state, post] = amp_init(Ms, A.rows(), J, alphabet.e_sym());
  for (Eigen::Index i = 0; i < Ms; ++i) post.That.row(i).setConstant(std::norm(mus(i)) * alphabet.e_sym());
  PseudoObservations obs;
  for (int it = 0; it < n_it; ++it) {
    obs = amp_decouple(As, Y, post, state, noise_var);
    for (Eigen::Index i = 0; i < Ms; ++i)
      for (Eigen::Index j = 0; j < J; ++j) {
        const auto [mean, var] = known_channel_mmse(obs.R(i, j), obs.Tau(i, j), mus(i), alphabet);
        post.Xhat(i, j) = mean;
        post.That(i, j) = var;
      }
  }
  for (Eigen::Index i = 0; i < Ms; ++i) R.row(cols[i]) = obs.R.row(i);
  return R;
}

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the RNG substream owned by one trial.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) {
  return mix64(mix64(master) ^ mix64(trial + 0x632be59bd9b4e019ULL));
}

struct TrialOptions {
  bool include_rs_in_ser = false;
  int threads = 1;
  /// First trial index; lets a run be split into batches with identical records.
  int first_trial = 0;
  DetectorConfig detector{};  // n_it, p_a and noise_var are overwritten per config
};

namespace detail {

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

[[noreturn]] inline void rethrow_with_trial(int trial) {
  const std::string prefix = "trial " + std::to_string(trial) + ": ";
  try {
    throw;
  } catch (const NonPositiveScale& e) {
    throw NonPositiveScale(prefix + e.what());
  } catch (const PrecisionDegenerate& e) {
    throw PrecisionDegenerate(prefix + e.what());
  } catch (const NumericalBreakdown& e) {
    throw NumericalBreakdown(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const std::exception& e) {
    throw Error(prefix + e.what());
  }
}

inline std::vector<MetricsRecord> run_one_trial(const ScenarioConfig& config, const ExtendedAlphabet& alphabet,
                                                int trial, const std::vector<DetectorKind>& detectors,
                                                const TrialOptions& opts) {
  std::mt19937_64 rng(trial_seed(config.seed, static_cast<std::uint64_t>(trial)));
  const ScenarioInstance frame = generate_frame(config, alphabet, rng);

  DetectorConfig dc = opts.detector;
  dc.n_it = config.n_it;
  dc.p_a = config.p_a;
  dc.noise_var = frame.noise_var;

  const auto start = std::chrono::steady_clock::now();
  const DetectorOutput run = run_detector(frame.A, frame.Y, dc, alphabet);
  const double detector_ms = elapsed_ms(start);

  std::vector<MetricsRecord> out;
  for (DetectorKind kind : detectors) {
    MetricsRecord rec;
    rec.trial = trial;
    rec.snr_db = config.snr_db;
    rec.p_a = config.p_a;
    rec.M = config.M;
    rec.N = config.N;
    rec.J = config.J;
    rec.n_it = config.n_it;
    rec.detector = kind;

    DetectionResult res;
    switch (kind) {
      case DetectorKind::AmpVbic:
        res = dc.use_offset_llr ? run.result
                                : decide_frame(run.resp, run.posterior, run.channel, alphabet, dc.p_a, true);
        rec.runtime_ms = detector_ms;
        break;
      case DetectorKind::AmpVbicNoOffset:
        res = decide_frame(run.resp, run.posterior, run.channel, alphabet, dc.p_a, false);
        rec.runtime_ms = detector_ms;
        break;
      case DetectorKind::Genie: {
        const auto t = std::chrono::steady_clock::now();
        const CMatrix R = known_support_observations(frame.A, frame.Y, frame.activity, frame.mu, alphabet,
                                                     frame.noise_var, config.n_it);
        res = genie_detect(R, frame.activity, frame.mu, alphabet);
        rec.runtime_ms = elapsed_ms(t);
        break;
      }
    }
    rec.aer = compute_aer(frame.activity, res.activity_hat);
    rec.ser = compute_ser(frame.D, res.D_hat, opts.include_rs_in_ser);
    rec.ce_mse = compute_ce_mse(frame.mu, res.channel_hat);
    if (!std::isfinite(rec.aer) || !std::isfinite(rec.ser) || !std::isfinite(rec.ce_mse))
      throw NumericalBreakdown("non-finite metric");
    out.push_back(rec);
  }
  return out;
}

}  // namespace detail

/**
 * Runs trials [first_trial, first_trial + n_trials). Each trial draws its
 * frame from its own substream, so the records do not depend on the thread
 * count or the execution order. Output is ordered by trial, then detector.
 */
inline std::vector<MetricsRecord> run_trials(const ScenarioConfig& config, int n_trials,
                                             const std::vector<DetectorKind>& detectors,
                                             const TrialOptions& opts = {}) {
  if (n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (detectors.empty()) throw ConfigError("no detectors requested");
  config.validate();
  const ExtendedAlphabet alphabet = build_alphabet(config.modulation);

  std::vector<std::vector<MetricsRecord>> per_trial(static_cast<std::size_t>(n_trials));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_trials));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < n_trials; i = next++) {
      const int trial = opts.first_trial + i;
      try {
        per_trial[i] = detail::run_one_trial(config, alphabet, trial, detectors, opts);
      } catch (...) {
        try {
          detail::rethrow_with_trial(trial);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    }
  };

  const int threads = std::clamp(opts.threads, 1, n_trials);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  std::vector<MetricsRecord> out;
  out.reserve(static_cast<std::size_t>(n_trials) * detectors.size());
  for (auto& recs : per_trial) out.insert(out.end(), recs.begin(), recs.end());
  return out;
}

struct AggregateRow {
  DetectorKind detector = DetectorKind::AmpVbic;
  int M = 0;
  int N = 0;
  int J = 0;
  double p_a = 0.0;
  double snr_db = 0.0;
  int n_it = 0;
  int trials = 0;
  double aer = 0.0;
  double ser = 0.0;
  double ce_mse = 0.0;
  double runtime_ms = 0.0;
  double aer_stderr = 0.0;
  double ser_stderr = 0.0;
  double ce_mse_stderr = 0.0;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_and_stderr(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return {};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

/// One row per detector, in the order the detectors first appear.
inline std::vector<AggregateRow> aggregate(const std::vector<MetricsRecord>& records) {
  std::vector<DetectorKind> order;
  for (const auto& r : records)
    if (std::find(order.begin(), order.end(), r.detector) == order.end()) order.push_back(r.detector);

  std::vector<AggregateRow> rows;
  for (DetectorKind kind : order) {
    std::vector<double> aer, ser, ce, rt;
    AggregateRow row;
    row.detector = kind;
    for (const auto& r : records) {
      if (r.detector != kind) continue;
      row.M = r.M;
      row.N = r.N;
      row.J = r.J;
      row.p_a = r.p_a;
      row.snr_db = r.snr_db;
      row.n_it = r.n_it;
      aer.push_back(r.aer);
      ser.push_back(r.ser);
      ce.push_back(r.ce_mse);
      rt.push_back(r.runtime_ms);
    }
    row.trials = static_cast<int>(aer.size());
    const auto a = mean_and_stderr(aer);
    const auto s = mean_and_stderr(ser);
    const auto c = mean_and_stderr(ce);
    row.aer = a.mean;
    row.aer_stderr = a.stderr_;
    row.ser = s.mean;
    row.ser_stderr = s.stderr_;
    row.ce_mse = c.mean;
    row.ce_mse_stderr = c.stderr_;
    row.runtime_ms = mean_and_stderr(rt).mean;
    rows.push_back(row);
  }
  return rows;
}

enum class SweepAxis { SnrDb, N, PA, NIt };

inline std::optional<SweepAxis> parse_axis(std::string_view name) {
  if (name == "snr_db") return SweepAxis::SnrDb;
  if (name == "N") return SweepAxis::N;
  if (name == "p_a") return SweepAxis::PA;
  if (name == "n_it") return SweepAxis::NIt;
  return std::nullopt;
}

inline std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::SnrDb: return "snr_db";
    case SweepAxis::N: return "N";
    case SweepAxis::PA: return "p_a";
    case SweepAxis::NIt: return "n_it";
  }
  return "unknown";
}

class InvalidAxis : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct SweepOptions {
  TrialOptions trials{};
  /// On the p_a axis, draw exactly round(p_a * M) active users per frame.
  bool fixed_active_on_pa_axis = true;
};

inline ScenarioConfig apply_axis(ScenarioConfig config, SweepAxis axis, double value, bool fixed_active) {
  switch (axis) {
    case SweepAxis::SnrDb: config.snr_db = value; break;
    case SweepAxis::N: config.N = static_cast<int>(std::lround(value)); break;
    case SweepAxis::NIt: config.n_it = static_cast<int>(std::lround(value)); break;
    case SweepAxis::PA:
      config.p_a = value;
      if (fixed_active) config.active_count = static_cast<int>(std::lround(value * config.M));
      break;
  }
  return config;
}

inline std::vector<AggregateRow> sweep(const ScenarioConfig& base, SweepAxis axis,
                                       const std::vector<double>& values, int n_trials,
                                       const std::vector<DetectorKind>& detectors,
                                       const SweepOptions& opts = {}) {
  if (values.empty()) throw InvalidAxis("sweep needs at least one axis value");
  const bool increasing = std::is_sorted(values.begin(), values.end());
  const bool decreasing = std::is_sorted(values.rbegin(), values.rend());
  if (!increasing && !decreasing) throw InvalidAxis("sweep values must be monotone");

  std::vector<AggregateRow> rows;
  for (double v : values) {
    const ScenarioConfig cfg = apply_axis(base, axis, v, opts.fixed_active_on_pa_axis);
    const auto cell = aggregate(run_trials(cfg, n_trials, detectors, opts.trials));
    rows.insert(rows.end(), cell.begin(), cell.end());
  }
  return rows;
}

inline constexpr std::string_view kCsvHeader = "detector,trial,M,N,J,p_a,snr_db,n_it,aer,ser,ce_mse,runtime_ms";
inline constexpr std::string_view kCsvStderrColumns = "aer_stderr,ser_stderr,ce_mse_stderr";

namespace detail {

inline std::string fmt_real(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

}  // namespace detail

inline void write_records_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
  using detail::fmt_real;
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    os << to_string(r.detector) << ',' << r.trial << ',' << r.M << ',' << r.N << ',' << r.J << ','
       << fmt_real(r.p_a) << ',' << fmt_real(r.snr_db) << ',' << r.n_it << ',' << fmt_real(r.aer) << ','
       << fmt_real(r.ser) << ',' << fmt_real(r.ce_mse) << ',' << fmt_real(r.runtime_ms) << '\n';
  }
}

inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  using detail::fmt_real;
  os << kCsvHeader << ',' << kCsvStderrColumns << '\n';
  for (const auto& r : rows) {
    os << to_string(r.detector) << ",-1," << r.M << ',' << r.N << ',' << r.J << ',' << fmt_real(r.p_a) << ','
       << fmt_real(r.snr_db) << ',' << r.n_it << ',' << fmt_real(r.aer) << ',' << fmt_real(r.ser) << ','
       << fmt_real(r.ce_mse) << ',' << fmt_real(r.runtime_ms) << ',' << fmt_real(r.aer_stderr) << ','
       << fmt_real(r.ser_stderr) << ',' << fmt_real(r.ce_mse_stderr) << '\n';
  }
}

}  // namespace ampvbic
