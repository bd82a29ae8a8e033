#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ampvbic/amp.hpp"
#include "ampvbic/model.hpp"
#include "ampvbic/special.hpp"
#include "ampvbic/types.hpp"

namespace ampvbic {

struct VbicHyperparameters {
  double alpha0 = 0.1;
  double a0 = 1e-4;
  double b0 = 1.0;
  double lambda0 = 1.0;
  cd mu0 = {0.0, 0.0};
};

/**
 * Variational parameters of the Gaussian-mixture clustering.
 *
 * The "prior" members (alpha, lambda0, mu0, a0, b0) are the values carried
 * from the previous outer iteration; the "bar" members hold the refreshed
 * parameters of the current one. alpha is updated in place, so it has no
 * separate bar member. Observation s belongs to user s / J.
 */
struct VbicState {
  Eigen::Index M = 0;
  Eigen::Index J = 0;
  Eigen::Index K = 0;

  RMatrix alpha;  // S x K Dirichlet parameters, accumulated in place
  RVector lambda0;
  RVector lambda_bar;
  CVector mu0;
  CVector mu_bar;  // channel estimates
  double a0 = 1e-4;
  double a_bar = 1e-4;
  double b0 = 1.0;
  double b_bar = 1.0;
  RMatrix resp;  // S x K responsibilities e_sk
  VbicHyperparameters hyper;

  [[nodiscard]] Eigen::Index observations() const { return M * J; }
  [[nodiscard]] Eigen::Index user_of(Eigen::Index s) const { return s / J; }
};

inline VbicState vbic_init(Eigen::Index S, Eigen::Index K, Eigen::Index M,
                           const VbicHyperparameters& hyper = {}) {
  if (S < 1 || K < 1 || M < 1) throw DimensionMismatch("vbic_init needs positive dimensions");
  if (S % M != 0) throw DimensionMismatch("observation count must be a multiple of M");
  VbicState st;
  st.M = M;
  st.J = S / M;
  st.K = K;
  st.hyper = hyper;
  st.alpha = RMatrix::Constant(S, K, hyper.alpha0);
  st.lambda0 = RVector::Constant(M, hyper.lambda0);
  st.lambda_bar = st.lambda0;
  st.mu0 = CVector::Constant(M, hyper.mu0);
  st.mu_bar = st.mu0;
  st.a0 = st.a_bar = hyper.a0;
  st.b0 = st.b_bar = hyper.b0;
  st.resp = RMatrix::Constant(S, K, 1.0 / static_cast<double>(K));
  return st;
}

/// alpha[s][k] += e_sk.
inline void update_dirichlet(VbicState& st) { st.alpha += st.resp; }

inline void check_observations(const VbicState& st, const CVector& r) {
  if (r.size() != st.observations())
    throw IndexError("expected " + std::to_string(st.observations()) + " observations, got " +
                     std::to_string(r.size()));
}

/// Refreshes lambda_bar and mu_bar from the J observations of each user.
inline void update_channel(VbicState& st, const CVector& r, const ExtendedAlphabet& alphabet) {
  check_observations(st, r);
  if (static_cast<std::size_t>(st.K) != alphabet.size())
    throw DimensionMismatch("alphabet size does not match the responsibilities");
  for (Eigen::Index m = 0; m < st.M; ++m) {
    double weight = st.lambda0(m);
    cd num = st.lambda0(m) * st.mu0(m);
    for (Eigen::Index s = m * st.J; s < (m + 1) * st.J; ++s) {
      for (Eigen::Index k = 0; k < st.K; ++k) {
        const double e = st.resp(s, k);
        weight += e * alphabet.energy(k);
        num += e * std::conj(alphabet[k]) * r(s);
      }
    }
    st.lambda_bar(m) = weight;
    st.mu_bar(m) = num / weight;
  }
}

/// Shape-rate update of the shared precision. Must follow update_channel.
inline void update_gamma(VbicState& st, const CVector& r) {
  check_observations(st, r);
  const double S = static_cast<double>(st.observations());
  st.a_bar = st.a0 + S;
  double b = st.b0;
  for (Eigen::Index m = 0; m < st.M; ++m)
    b += st.lambda0(m) * std::norm(st.mu0(m)) - st.lambda_bar(m) * std::norm(st.mu_bar(m));
  for (Eigen::Index s = 0; s < st.observations(); ++s) b += st.resp.row(s).sum() * std::norm(r(s));
  if (!(b > 0.0)) throw NonPositiveScale("Gamma scale parameter became non-positive");
  st.b_bar = b;
}

inline RVector expected_log_pi(const VbicState& st, Eigen::Index s) {
  const double total = digamma(st.alpha.row(s).sum());
  RVector out(st.K);
  for (Eigen::Index k = 0; k < st.K; ++k) out(k) = digamma(st.alpha(s, k)) - total;
  return out;
}

inline double expected_log_tau(const VbicState& st) { return digamma(st.a_bar) - std::log(st.b_bar); }

/// E[tau |r_s - mu_m d_k|^2] under the current Gaussian-Gamma factor.
inline double expected_sq_err(const VbicState& st, Eigen::Index s, Eigen::Index k, cd r_s,
                              const ExtendedAlphabet& alphabet) {
  const Eigen::Index m = st.user_of(s);
  const cd d = alphabet[static_cast<std::size_t>(k)];
  const cd mu = st.mu_bar(m);
  const double d2 = std::norm(d);
  const double quad = std::norm(r_s) + d2 * std::norm(mu) - 2.0 * std::real(std::conj(r_s) * mu * d);
  return (st.a_bar / st.b_bar) * quad + d2 / st.lambda_bar(m);
}

/// In-place max-subtracted softmax of a row of log-weights.
template <class Row>
void softmax_inplace(Row&& row) {
  const double peak = row.maxCoeff();
  row = (row.array() - peak).exp().matrix();
  row /= row.sum();
}

inline void update_responsibilities(VbicState& st, const CVector& r,
                                    const ExtendedAlphabet& alphabet) {
  check_observations(st, r);
  const double log_tau = expected_log_tau(st) - std::log(std::numbers::pi);
  Eigen::RowVectorXd log_rho(st.K);
  for (Eigen::Index s = 0; s < st.observations(); ++s) {
    const RVector log_pi = expected_log_pi(st, s);
    for (Eigen::Index k = 0; k < st.K; ++k)
      log_rho(k) = log_tau + log_pi(k) - expected_sq_err(st, s, k, r(s), alphabet);
    softmax_inplace(log_rho);
    st.resp.row(s) = log_rho;
  }
}

/// Which refreshed parameters become the next outer iteration's priors.
/// Anything not carried is restored to its initial hyperparameter.
struct CarryOver {
  bool dirichlet = true;  // alpha
  bool precision = true;  // a, b
  bool channel = false;   // lambda, mu

  static constexpr CarryOver all() { return {true, true, true}; }
  static constexpr CarryOver none() { return {false, false, false}; }
};

inline void carry_over(VbicState& st, const CarryOver& carry = CarryOver::all()) {
  if (!carry.dirichlet) st.alpha.setConstant(st.hyper.alpha0);
  if (carry.precision) {
    st.a0 = st.a_bar;
    st.b0 = st.b_bar;
  } else {
    st.a0 = st.hyper.a0;
    st.b0 = st.hyper.b0;
  }
  if (carry.channel) {
    st.lambda0 = st.lambda_bar;
    st.mu0 = st.mu_bar;
  } else {
    st.lambda0.setConstant(st.hyper.lambda0);
    st.mu0.setConstant(st.hyper.mu0);
  }
}

/// Variance of the symbol under responsibilities `e`, before flooring.
template <class Row>
double symbol_variance(const Row& e, const ExtendedAlphabet& alphabet) {
  double second = 0.0;
  cd first{0.0, 0.0};
  for (Eigen::Index k = 0; k < e.size(); ++k) {
    second += e(k) * alphabet.energy(static_cast<std::size_t>(k));
    first += e(k) * alphabet[static_cast<std::size_t>(k)];
  }
  return second - std::norm(first);
}

template <class Row>
cd symbol_mean(const Row& e, const ExtendedAlphabet& alphabet) {
  cd first{0.0, 0.0};
  for (Eigen::Index k = 0; k < e.size(); ++k) first += e(k) * alphabet[static_cast<std::size_t>(k)];
  return first;
}

inline Posterior posterior_moments(const VbicState& st, const ExtendedAlphabet& alphabet) {
  if (!(st.a_bar > 1.0)) throw PrecisionDegenerate("Gamma shape must exceed 1 for the variance");
  Posterior post{CMatrix(st.M, st.J), RMatrix(st.M, st.J)};
  for (Eigen::Index m = 0; m < st.M; ++m) {
    const double scale = st.b_bar / (st.lambda_bar(m) * (st.a_bar - 1.0));
    for (Eigen::Index j = 0; j < st.J; ++j) {
      const auto e = st.resp.row(flat_index(m, j, st.J));
      post.Xhat(m, j) = st.mu_bar(m) * symbol_mean(e, alphabet);
      post.That(m, j) = std::max(scale * symbol_variance(e, alphabet), kVarianceFloor);
    }
  }
  return post;
}

/// One clustering pass: Dirichlet, channel, precision, responsibilities,
/// carry-over, then posterior moments of X.
inline Posterior vbic_step(VbicState& st, const PseudoObservations& obs,
                           const ExtendedAlphabet& alphabet, const CarryOver& carry = {}) {
  if (obs.users() != st.M || obs.symbols() != st.J)
    throw DimensionMismatch("pseudo-observations do not match the clustering state");
  const CVector r = flatten(obs.R);
  update_dirichlet(st);
  update_channel(st, r, alphabet);
  update_gamma(st, r);
  update_responsibilities(st, r, alphabet);
  carry_over(st, carry);
  return posterior_moments(st, alphabet);
}

}  // namespace ampvbic
