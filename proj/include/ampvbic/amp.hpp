#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "ampvbic/types.hpp"

namespace ampvbic {

/// Matrices kept between outer iterations by the decoupling module.
struct AmpState {
  CMatrix S;    // N x J scaled residual s^j
  CMatrix P;    // N x J
  RMatrix Tp;   // N x J
  RMatrix Ts;   // N x J
  RMatrix Tau;  // M x J pseudo-observation variances
};

/// Per-element means and variances of X fed back into the decoupling module.
struct Posterior {
  CMatrix Xhat;  // M x J
  RMatrix That;  // M x J
};

/// r_m^j = x_m^j + n_m^j with n_m^j ~ CN(0, tau_m^j).
struct PseudoObservations {
  CMatrix R;    // M x J
  RMatrix Tau;  // M x J

  [[nodiscard]] Eigen::Index users() const { return R.rows(); }
  [[nodiscard]] Eigen::Index symbols() const { return R.cols(); }
};

// Observation index s (zero-based) of element (m, j): s = j + m * J.
inline Eigen::Index flat_index(Eigen::Index m, Eigen::Index j, Eigen::Index J) { return j + m * J; }

/// Row-major flattening: row m of the matrix becomes entries [m*J, (m+1)*J).
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> flatten(
    const Eigen::MatrixBase<Derived>& mat) {
  const Eigen::Index M = mat.rows();
  const Eigen::Index J = mat.cols();
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(M * J);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index j = 0; j < J; ++j) out(flat_index(m, j, J)) = mat(m, j);
  return out;
}

template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> unflatten(
    const Eigen::MatrixBase<Derived>& vec, Eigen::Index M, Eigen::Index J) {
  if (vec.size() != M * J) throw IndexError("flat vector length does not match M * J");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(M, J);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index j = 0; j < J; ++j) out(m, j) = vec(flat_index(m, j, J));
  return out;
}

inline std::pair<AmpState, Posterior> amp_init(Eigen::Index M, Eigen::Index N, Eigen::Index J,
                                               double e_sym) {
  if (M < 1 || N < 1 || J < 1) throw DimensionMismatch("amp_init needs positive dimensions");
  AmpState state{CMatrix::Zero(N, J), CMatrix::Zero(N, J), RMatrix::Zero(N, J),
                 RMatrix::Zero(N, J), RMatrix::Zero(M, J)};
  Posterior post{CMatrix::Zero(M, J), RMatrix::Constant(M, J, e_sym)};
  return {std::move(state), std::move(post)};
}

/**
 * One decoupling pass over all J columns.
 *
 * Per column j:
 *   tau_p = |A|^2 tau_hat
 *   p     = A x_hat - tau_p .* s
 *   tau_s = 1 ./ (tau_p + sigma^2)
 *   s     = tau_s .* (y - p)
 *   tau   = 1 ./ (|A^H|^2 tau_s)
 *   r     = x_hat + tau .* (A^H s)
 *
 * The columns are independent, so all J are evaluated together as matrix
 * products. `state.S` carries s^j into the next outer iteration. `damping`
 * blends the new s with the previous one (1.0 disables it).
 */
inline PseudoObservations amp_decouple(const CMatrix& A, const CMatrix& Y, const Posterior& post,
                                       AmpState& state, double noise_var, double damping = 1.0) {
  const Eigen::Index N = A.rows();
  const Eigen::Index M = A.cols();
  const Eigen::Index J = Y.cols();
  if (Y.rows() != N) throw DimensionMismatch("Y must have as many rows as A");
  if (post.Xhat.rows() != M || post.Xhat.cols() != J || post.That.rows() != M ||
      post.That.cols() != J)
    throw DimensionMismatch("posterior must be M x J");
  if (state.S.rows() != N || state.S.cols() != J || state.Tau.rows() != M ||
      state.Tau.cols() != J)
    throw DimensionMismatch("AMP state does not match the problem dimensions");
  if (!(noise_var > 0.0)) throw NonPositiveNoise("noise variance must be positive");

  const RMatrix abs2 = A.cwiseAbs2();
  const RMatrix that = post.That.cwiseMax(kVarianceFloor);

  state.Tp = abs2 * that;
  state.P = A * post.Xhat - CMatrix(state.Tp.cast<cd>().cwiseProduct(state.S));
  state.Ts = (state.Tp.array() + noise_var).inverse().matrix();
  CMatrix s_new = state.Ts.cast<cd>().cwiseProduct(Y - state.P);
  if (damping != 1.0) s_new = damping * s_new + (1.0 - damping) * state.S;
  state.S = std::move(s_new);
  state.Tau = (abs2.transpose() * state.Ts).array().inverse().matrix();

  PseudoObservations obs;
  obs.R = post.Xhat + CMatrix(state.Tau.cast<cd>().cwiseProduct(A.adjoint() * state.S));
  obs.Tau = state.Tau;
  return obs;
}

}  // namespace ampvbic
