#pragma once

#include <cmath>
#include <vector>

#include "ampvbic/types.hpp"

namespace ampvbic {

inline double compute_aer(const std::vector<int>& truth, const std::vector<int>& detected) {
  if (truth.size() != detected.size()) throw LengthMismatch("activity vectors differ in length");
  if (truth.empty()) return 0.0;
  std::size_t errors = 0;
  for (std::size_t m = 0; m < truth.size(); ++m) errors += (truth[m] != 0) != (detected[m] != 0);
  return static_cast<double>(errors) / static_cast<double>(truth.size());
}

/// Symbol error rate; column 0 (the reference slot) is skipped unless include_rs.
inline double compute_ser(const CMatrix& D_true, const CMatrix& D_hat, bool include_rs = false) {
  if (D_true.rows() != D_hat.rows() || D_true.cols() != D_hat.cols())
    throw DimensionMismatch("symbol matrices differ in shape");
  const Eigen::Index first = include_rs ? 0 : 1;
  const Eigen::Index counted = D_true.rows() * (D_true.cols() - first);
  if (counted <= 0) return 0.0;
  Eigen::Index errors = 0;
  for (Eigen::Index m = 0; m < D_true.rows(); ++m)
    for (Eigen::Index j = first; j < D_true.cols(); ++j)
      errors += std::abs(D_true(m, j) - D_hat(m, j)) > 1e-9;
  return static_cast<double>(errors) / static_cast<double>(counted);
}

/// Mean squared channel error over all users; inactive truth is zero.
inline double compute_ce_mse(const CVector& mu_true, const CVector& mu_hat) {
  if (mu_true.size() != mu_hat.size()) throw LengthMismatch("channel vectors differ in length");
  if (mu_true.size() == 0) return 0.0;
  return (mu_true - mu_hat).squaredNorm() / static_cast<double>(mu_true.size());
}

}  // namespace ampvbic
