#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ampvbic/amp.hpp"
#include "ampvbic/decide.hpp"
#include "ampvbic/metrics.hpp"
#include "ampvbic/model.hpp"
#include "ampvbic/types.hpp"
#include "ampvbic/vbic.hpp"

namespace ampvbic {

enum class ChannelInit {
  Zero,             // mu0 = 0 for every user
  ReferenceSymbol,  // mu0 from the first pseudo-observation and the known RS
};

struct DetectorConfig {
  int n_it = 20;
  double p_a = 0.1;
  double noise_var = 1.0;
  bool use_offset_llr = true;
  double damping = 1.0;
  CarryOver carry{};
  ChannelInit channel_init = ChannelInit::ReferenceSymbol;
  /// Stop once mean |delta x_hat| drops below this value. Off when unset.
  std::optional<double> convergence_tol;
  VbicHyperparameters hyper{};
};

struct GroundTruth {
  std::vector<int> activity;
  CVector mu;
  CMatrix D;
};

struct IterationRecord {
  CVector channel_hat;
  double mean_delta_xhat = 0.0;
  std::optional<double> aer;
  std::optional<double> ser;
  std::optional<double> ce_mse;
};

using IterationTrace = std::vector<IterationRecord>;

struct DetectorOutput {
  DetectionResult result;
  IterationTrace trace;
  // Final-iteration internals, kept for re-deciding and for the genie baseline.
  PseudoObservations observations;
  Posterior posterior;
  RMatrix resp;
  CVector channel;
};

/// Final decision from clustering output: activity/symbols, then RS phase fix.
inline DetectionResult decide_frame(const RMatrix& resp, const Posterior& post, const CVector& channel,
                                    const ExtendedAlphabet& alphabet, double p_a, bool use_offset_llr) {
  DetectionResult res = detect(resp, post, channel, alphabet, DecisionOptions{p_a, use_offset_llr});
  apply_phase_correction(res, alphabet);
  return res;
}

/// Breaks the rotational symmetry of the all-uniform start: without it the
/// first channel update sums to zero over a symmetric constellation and the
/// estimates never leave zero. Only the first iteration's prior mean is set.
inline void seed_channel_from_reference(VbicState& st, const PseudoObservations& obs,
                                        const ExtendedAlphabet& alphabet) {
  const cd rs = alphabet.reference_symbol();
  for (Eigen::Index m = 0; m < st.M; ++m) st.mu0(m) = obs.R(m, 0) / rs;
  st.mu_bar = st.mu0;
}

inline DetectorOutput run_detector(const CMatrix& A, const CMatrix& Y, const DetectorConfig& config,
                                   const ExtendedAlphabet& alphabet,
                                   const GroundTruth* truth = nullptr) {
  const Eigen::Index N = A.rows();
  const Eigen::Index M = A.cols();
  const Eigen::Index J = Y.cols();
  if (Y.rows() != N) throw DimensionMismatch("Y must be N x J with N = rows(A)");
  if (config.n_it < 1) throw ConfigError("n_it must be >= 1");
  if (!(config.p_a > 0.0 && config.p_a < 1.0)) throw ConfigError("p_a must lie in (0, 1)");
  if (truth && (static_cast<Eigen::Index>(truth->activity.size()) != M || truth->mu.size() != M ||
                truth->D.rows() != M || truth->D.cols() != J))
    throw DimensionMismatch("ground truth does not match the frame");

  const auto K = static_cast<Eigen::Index>(alphabet.size());
  auto [amp, post] = amp_init(M, N, J, alphabet.e_sym());
  VbicState vb = vbic_init(M * J, K, M, config.hyper);

  DetectorOutput out;
  out.trace.reserve(static_cast<std::size_t>(config.n_it));
  for (int it = 0; it < config.n_it; ++it) {
    out.observations = amp_decouple(A, Y, post, amp, config.noise_var, config.damping);
    if (it == 0 && config.channel_init == ChannelInit::ReferenceSymbol)
      seed_channel_from_reference(vb, out.observations, alphabet);
    Posterior next = vbic_step(vb, out.observations, alphabet, config.carry);

    IterationRecord rec;
    rec.channel_hat = vb.mu_bar;
    rec.mean_delta_xhat = (next.Xhat - post.Xhat).cwiseAbs().mean();
    post = std::move(next);
    if (truth) {
      const DetectionResult r = decide_frame(vb.resp, post, vb.mu_bar, alphabet, config.p_a,
                                             config.use_offset_llr);
      rec.aer = compute_aer(truth->activity, r.activity_hat);
      rec.ser = compute_ser(truth->D, r.D_hat);
      rec.ce_mse = compute_ce_mse(truth->mu, r.channel_hat);
    }
    out.trace.push_back(std::move(rec));
    if (config.convergence_tol && out.trace.back().mean_delta_xhat < *config.convergence_tol) break;
  }

  out.posterior = std::move(post);
  out.resp = vb.resp;
  out.channel = vb.mu_bar;
  out.result = decide_frame(out.resp, out.posterior, out.channel, alphabet, config.p_a,
                            config.use_offset_llr);
  return out;
}

}  // namespace ampvbic
