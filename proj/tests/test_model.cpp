#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ampvbic/model.hpp"

using namespace ampvbic;

TEST(Alphabet, QpskLayout) {
  const auto al = build_alphabet(Modulation::QPSK);
  EXPECT_EQ(al.size(), 5u);
  EXPECT_EQ(al.active_size(), 4u);
  EXPECT_EQ(al[0], cd(0.0, 0.0));
  EXPECT_DOUBLE_EQ(al.e_sym(), 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_EQ(al.reference_symbol(), cd(s, s));
  for (std::size_t k = 1; k < al.size(); ++k) EXPECT_NEAR(al.energy(k), 1.0, 1e-15);
}

TEST(Alphabet, Qam16Layout) {
  const auto al = build_alphabet(Modulation::QAM16);
  EXPECT_EQ(al.size(), 17u);
  EXPECT_NEAR(al.e_sym(), 1.0, 1e-15);
  const double s = 1.0 / std::sqrt(10.0);
  EXPECT_EQ(al.reference_symbol(), cd(3 * s, 3 * s));
  // Distinct points, closed under 90 degree rotation.
  for (std::size_t a = 1; a < al.size(); ++a) {
    for (std::size_t b = a + 1; b < al.size(); ++b) EXPECT_GT(std::abs(al[a] - al[b]), 0.1);
    const cd rot = al[a] * cd(0.0, 1.0);
    EXPECT_LT(std::abs(al[al.nearest_active(rot)] - rot), 1e-12);
  }
}

TEST(Alphabet, NearestActiveTiesToLowestIndex) {
  const auto al = build_alphabet(Modulation::QPSK);
  EXPECT_EQ(al.nearest_active(cd(0.0, 0.0)), 1u);
  EXPECT_EQ(al.nearest_active(cd(-1.0, 0.0)), 3u);
}

TEST(Snr, NoiseVariance) {
  EXPECT_DOUBLE_EQ(noise_variance_from_snr(0.0, 1.0), 1.0);
  EXPECT_NEAR(noise_variance_from_snr(10.0, 1.0), 0.1, 1e-15);
  EXPECT_NEAR(noise_variance_from_snr(3.0, 2.0), 2.0 * std::pow(10.0, -0.3), 1e-15);
  EXPECT_NEAR(noise_variance_from_snr(3.0, 2.0), 1.00237, 1e-5);
}

TEST(Spreading, ShapeAndDeterminism) {
  std::mt19937_64 a(42), b(42);
  const CMatrix A1 = draw_spreading_matrix(2, 3, a);
  const CMatrix A2 = draw_spreading_matrix(2, 3, b);
  EXPECT_EQ(A1.rows(), 2);
  EXPECT_EQ(A1.cols(), 3);
  EXPECT_EQ(A1, A2);
}

TEST(Spreading, UnitVarianceEntries) {
  std::mt19937_64 rng(3);
  const CMatrix A = draw_spreading_matrix(1000, 1000, rng);
  EXPECT_NEAR(A.cwiseAbs2().mean(), 1.0, 0.01);
  EXPECT_NEAR(std::abs(A.mean()), 0.0, 0.01);
}

TEST(Frame, NoActiveUsers) {
  ScenarioConfig c;
  c.M = 20;
  c.N = 10;
  c.p_a = 0.0;
  std::mt19937_64 rng(5);
  const auto al = build_alphabet(c.modulation);
  const auto f = generate_frame(c, al, rng);
  EXPECT_TRUE(f.D.isZero(0.0));
  EXPECT_TRUE(f.mu.isZero(0.0));
  EXPECT_LT((f.Y - f.W).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Frame, JointSparsityAndReferenceSlot) {
  ScenarioConfig c;
  c.M = 60;
  c.N = 30;
  c.p_a = 0.3;
  std::mt19937_64 rng(6);
  const auto al = build_alphabet(c.modulation);
  const auto f = generate_frame(c, al, rng);
  for (int m = 0; m < c.M; ++m) {
    if (f.activity[m]) {
      EXPECT_EQ(f.D(m, 0), al.reference_symbol());
      for (int j = 0; j < c.J; ++j) EXPECT_NE(f.D(m, j), cd(0.0, 0.0));
      EXPECT_NE(f.mu(m), cd(0.0, 0.0));
    } else {
      EXPECT_TRUE(f.D.row(m).isZero(0.0));
      EXPECT_EQ(f.mu(m), cd(0.0, 0.0));
    }
  }
  EXPECT_LT((f.X - f.mu.asDiagonal() * f.D).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((f.Y - f.A * f.X - f.W).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Frame, MeanActiveCount) {
  ScenarioConfig c;
  c.M = 200;
  c.N = 1;
  c.J = 2;
  c.p_a = 0.1;
  const auto al = build_alphabet(Modulation::QPSK);
  std::mt19937_64 rng(9);
  double total = 0.0;
  const int frames = 10000;
  for (int i = 0; i < frames; ++i) {
    const auto f = generate_frame(c, al, rng);
    for (int a : f.activity) total += a;
  }
  EXPECT_NEAR(total / frames, 20.0, 0.5);
}

TEST(Frame, FixedActiveCount) {
  ScenarioConfig c;
  c.M = 50;
  c.N = 5;
  c.active_count = 7;
  const auto al = build_alphabet(c.modulation);
  std::mt19937_64 rng(10);
  for (int i = 0; i < 20; ++i) {
    const auto f = generate_frame(c, al, rng);
    int n = 0;
    for (int a : f.activity) n += a;
    EXPECT_EQ(n, 7);
  }
}

TEST(Frame, ChannelGainVariance) {
  ScenarioConfig c;
  c.M = 100;
  c.N = 1;
  c.J = 2;
  c.p_a = 0.5;
  const auto al = build_alphabet(Modulation::QPSK);
  std::mt19937_64 rng(11);
  double sum2 = 0.0;
  int n = 0;
  for (int i = 0; i < 2000; ++i) {
    const auto f = generate_frame(c, al, rng);
    for (int m = 0; m < c.M; ++m)
      if (f.activity[m]) {
        sum2 += std::norm(f.mu(m));
        ++n;
      }
  }
  EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}

TEST(Config, Validation) {
  ScenarioConfig c;
  EXPECT_NO_THROW(c.validate());
  c.p_a = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.p_a = 0.1;
  c.J = 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.J = 10;
  c.active_count = 500;
  EXPECT_THROW(c.validate(), ConfigError);
}
