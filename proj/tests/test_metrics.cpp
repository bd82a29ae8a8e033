#include <random>

#include <gtest/gtest.h>

#include "ampvbic/harness.hpp"
#include "ampvbic/metrics.hpp"
#include "oracles.hpp"

using namespace ampvbic;

TEST(Aer, Examples) {
  EXPECT_DOUBLE_EQ(compute_aer({1, 0, 0, 1}, {1, 1, 0, 1}), 0.25);
  EXPECT_DOUBLE_EQ(compute_aer({1, 0, 1}, {1, 0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(compute_aer({1, 0, 1}, {0, 1, 0}), 1.0);
  EXPECT_THROW(compute_aer({1, 0}, {1}), LengthMismatch);
}

TEST(Ser, Examples) {
  const auto al = build_alphabet(Modulation::QPSK);
  CMatrix D = CMatrix::Constant(2, 5, al[1]);
  EXPECT_DOUBLE_EQ(compute_ser(D, D, true), 0.0);
  CMatrix E = D;
  E(1, 3) = al[2];
  EXPECT_DOUBLE_EQ(compute_ser(D, E, true), 0.1);
  EXPECT_DOUBLE_EQ(compute_ser(D, E, false), 0.125);

  CMatrix T = CMatrix::Zero(10, 10);
  T.row(4).setConstant(al[3]);
  CMatrix H = CMatrix::Zero(10, 10);
  EXPECT_DOUBLE_EQ(compute_ser(T, H, true), 0.1);
  EXPECT_THROW(compute_ser(T, CMatrix::Zero(10, 9)), DimensionMismatch);
}

TEST(CeMse, Examples) {
  CVector mu(2), hat(2);
  mu << cd(1.0, 0.0), cd(0.0, 0.0);
  hat << cd(0.0, 0.0), cd(1.0, 0.0);
  EXPECT_DOUBLE_EQ(compute_ce_mse(mu, mu), 0.0);
  EXPECT_DOUBLE_EQ(compute_ce_mse(mu, hat), 1.0);
  EXPECT_DOUBLE_EQ(compute_ce_mse(mu.head(1), CVector::Zero(1)), 1.0);
  EXPECT_THROW(compute_ce_mse(mu, CVector::Zero(3)), LengthMismatch);
}

TEST(Genie, NoiselessAndTieBreak) {
  const auto al = build_alphabet(Modulation::QAM16);
  CVector mu(2);
  mu << cd(0.5, 0.9), cd(0.0, 0.0);
  CMatrix R = CMatrix::Zero(2, 3);
  R.row(0) << mu(0) * al[1], mu(0) * al[9], mu(0) * al[16];
  const auto res = genie_detect(R, {1, 0}, mu, al);
  EXPECT_EQ(res.D_hat(0, 0), al[1]);
  EXPECT_EQ(res.D_hat(0, 1), al[9]);
  EXPECT_EQ(res.D_hat(0, 2), al[16]);
  EXPECT_TRUE(res.D_hat.row(1).isZero(0.0));

  const auto qpsk = build_alphabet(Modulation::QPSK);
  CVector one = CVector::Ones(1);
  const CMatrix mid = CMatrix::Constant(1, 1, (qpsk[1] + qpsk[2]) / 2.0);
  EXPECT_EQ(genie_detect(mid, {1}, one, qpsk).D_hat(0, 0), qpsk[1]);
}

TEST(Genie, QpskSerMatchesClosedForm) {
  const auto al = build_alphabet(Modulation::QPSK);
  const double snr_db = 10.0;
  const double nv = noise_variance_from_snr(snr_db, al.e_sym());
  std::mt19937_64 rng(30);
  std::uniform_int_distribution<std::size_t> pick(1, 4);
  ComplexGaussian noise(nv);
  const int J = 1000, frames = 1000;
  CVector mu = CVector::Ones(1);
  long errors = 0;
  for (int f = 0; f < frames; ++f) {
    CMatrix D(1, J), R(1, J);
    for (int j = 0; j < J; ++j) {
      D(0, j) = al[pick(rng)];
      R(0, j) = D(0, j) + noise(rng);
    }
    errors += std::lround(compute_ser(D, genie_detect(R, {1}, mu, al).D_hat, true) * J);
  }
  const double n = static_cast<double>(J) * frames;
  const double p = oracle::qpsk_ser(1.0 / nv);
  const double measured = errors / n;
  EXPECT_NEAR(measured, p, 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Genie, KnownSupportAmpRecoversCleanFrame) {
  ScenarioConfig c;
  c.M = 60;
  c.N = 40;
  c.J = 8;
  c.p_a = 0.2;
  c.snr_db = 30;
  const auto al = build_alphabet(c.modulation);
  std::mt19937_64 rng(31);
  const auto f = generate_frame(c, al, rng);
  const CMatrix R = known_support_observations(f.A, f.Y, f.activity, f.mu, al, f.noise_var, 20);
  for (int m = 0; m < c.M; ++m) {
    if (f.activity[m]) {
      EXPECT_LT((R.row(m) - f.X.row(m)).cwiseAbs().maxCoeff(), 0.1);
    } else {
      EXPECT_TRUE(R.row(m).isZero(0.0));
    }
  }
  EXPECT_EQ(compute_ser(f.D, genie_detect(R, f.activity, f.mu, al).D_hat, true), 0.0);
}

TEST(Genie, KnownChannelDenoiser) {
  const auto al = build_alphabet(Modulation::QPSK);
  const cd mu{0.0, 2.0};
  const auto [mean, var] = known_channel_mmse(mu * al[2], 1e-6, mu, al);
  EXPECT_NEAR(std::abs(mean - mu * al[2]), 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(var, kVarianceFloor);
  // Far from every point relative to the noise: the mean is the centroid.
  const auto [m0, v0] = known_channel_mmse(0.0, 1e6, mu, al);
  EXPECT_NEAR(std::abs(m0), 0.0, 1e-6);
  EXPECT_NEAR(v0, 4.0, 1e-5);
}

TEST(Genie, EmptySupport) {
  const auto al = build_alphabet(Modulation::QPSK);
  std::mt19937_64 rng(32);
  const CMatrix A = draw_spreading_matrix(5, 4, rng);
  const CMatrix R = known_support_observations(A, CMatrix::Ones(5, 3), {0, 0, 0, 0}, CVector::Zero(4), al, 0.1, 5);
  EXPECT_TRUE(R.isZero(0.0));
  EXPECT_THROW(known_support_observations(A, CMatrix::Ones(5, 3), {0, 0}, CVector::Zero(4), al, 0.1, 5),
               LengthMismatch);
}
