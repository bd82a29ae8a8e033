#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ampvbic/amp.hpp"
#include "ampvbic/model.hpp"
#include "ampvbic/types.hpp"
#include "ampvbic/vbic.hpp"

namespace ampvbic {

inline constexpr double kResponsibilityFloor = 1e-300;

struct DetectionResult {
  std::vector<int> activity_hat;  // length M
  CMatrix D_hat;                  // M x J
  CVector channel_hat;            // length M
  RVector llr_dec;
  RVector llr_vbi;
  RVector llr_offset;  // sum over the user's observations
};

/// Sum over user m's observations of ln(max_{k>=1} e_sk / e_s0).
inline double vbi_activity_llr(const RMatrix& resp, Eigen::Index m, Eigen::Index J) {
  double llr = 0.0;
  for (Eigen::Index s = m * J; s < (m + 1) * J; ++s) {
    const double active = resp.row(s).tail(resp.cols() - 1).maxCoeff();
    // The active term gets the same floor so an underflowed row stays finite.
    llr += std::log(std::max(active, kResponsibilityFloor)) -
           std::log(std::max(resp(s, 0), kResponsibilityFloor));
  }
  return llr;
}

/// ln CN(x; 0, E + t) - ln CN(x; 0, t).
inline double offset_llr(cd x_hat, double tau_hat, double e_sym) {
  const double x2 = std::norm(x_hat);
  return std::log(tau_hat / (e_sym + tau_hat)) + x2 / tau_hat - x2 / (e_sym + tau_hat);
}

inline double prior_llr(double p_a) { return std::log(p_a / (1.0 - p_a)); }

inline double decision_llr(double llr_vbi, double offset_sum, double p_a) {
  return llr_vbi + offset_sum + prior_llr(p_a);
}

/// Most responsible active cluster for observation s; ties to the lowest index.
inline Eigen::Index best_active_cluster(const RMatrix& resp, Eigen::Index s) {
  Eigen::Index best = 1;
  for (Eigen::Index k = 2; k < resp.cols(); ++k)
    if (resp(s, k) > resp(s, best)) best = k;
  return best;
}

struct DecisionOptions {
  double p_a = 0.1;
  bool use_offset_llr = true;
};

inline DetectionResult detect(const RMatrix& resp, const Posterior& post, const CVector& channel_hat,
                              const ExtendedAlphabet& alphabet, const DecisionOptions& opts) {
  const Eigen::Index M = post.Xhat.rows();
  const Eigen::Index J = post.Xhat.cols();
  if (resp.rows() != M * J || resp.cols() != static_cast<Eigen::Index>(alphabet.size()))
    throw DimensionMismatch("responsibilities do not match the posterior");
  if (channel_hat.size() != M) throw DimensionMismatch("channel estimate must have length M");

  DetectionResult out;
  out.activity_hat.assign(static_cast<std::size_t>(M), 0);
  out.D_hat = CMatrix::Zero(M, J);
  out.channel_hat = channel_hat;
  out.llr_dec = RVector::Zero(M);
  out.llr_vbi = RVector::Zero(M);
  out.llr_offset = RVector::Zero(M);

  for (Eigen::Index m = 0; m < M; ++m) {
    out.llr_vbi(m) = vbi_activity_llr(resp, m, J);
    double offsets = 0.0;
    for (Eigen::Index j = 0; j < J; ++j)
      offsets += offset_llr(post.Xhat(m, j), std::max(post.That(m, j), kVarianceFloor), alphabet.e_sym());
    out.llr_offset(m) = offsets;
    out.llr_dec(m) = decision_llr(out.llr_vbi(m), opts.use_offset_llr ? offsets : 0.0, opts.p_a);
    if (out.llr_dec(m) > 0.0) {
      out.activity_hat[m] = 1;
      for (Eigen::Index j = 0; j < J; ++j)
        out.D_hat(m, j) = alphabet[static_cast<std::size_t>(best_active_cluster(resp, flat_index(m, j, J)))];
    }
  }
  return out;
}

/// Rotates a decided row so its reference symbol matches the known one.
inline CVector correct_phase(const CVector& row, cd rs_detected, cd rs_true) {
  if (rs_detected == cd{0.0, 0.0}) throw ZeroReferenceSymbol("detected reference symbol is zero");
  CVector out = row * (rs_true / rs_detected);
  if (row.size() > 0 && row(0) == rs_detected) out(0) = rs_true;
  return out;
}

inline CVector snap_to_alphabet(const CVector& row, const ExtendedAlphabet& alphabet) {
  CVector out(row.size());
  for (Eigen::Index j = 0; j < row.size(); ++j) out(j) = alphabet[alphabet.nearest_active(row(j))];
  return out;
}

/// Phase-corrects every active row in place using column 0 as the reference
/// slot. The channel estimate gets the inverse rotation (phase only, so a
/// wrongly decided QAM reference does not rescale it).
inline void apply_phase_correction(DetectionResult& res, const ExtendedAlphabet& alphabet) {
  const cd rs_true = alphabet.reference_symbol();
  for (Eigen::Index m = 0; m < res.D_hat.rows(); ++m) {
    if (!res.activity_hat[m]) continue;
    const cd rs_detected = res.D_hat(m, 0);
    const CVector row = res.D_hat.row(m).transpose();
    res.D_hat.row(m) = snap_to_alphabet(correct_phase(row, rs_detected, rs_true), alphabet).transpose();
    const cd ratio = rs_detected / rs_true;
    res.channel_hat(m) *= ratio / std::abs(ratio);
  }
}

}  // namespace ampvbic
