#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ampvbic/types.hpp"

namespace ampvbic {

enum class Modulation { QPSK, QAM16 };

inline std::string_view to_string(Modulation mod) {
  switch (mod) {
    case Modulation::QPSK: return "qpsk";
    case Modulation::QAM16: return "qam16";
  }
  return "unknown";
}

inline std::optional<Modulation> parse_modulation(std::string_view name) {
  if (name == "qpsk" || name == "QPSK") return Modulation::QPSK;
  if (name == "qam16" || name == "QAM16" || name == "16qam") return Modulation::QAM16;
  return std::nullopt;
}

/**
 * Modulation alphabet extended with the null symbol of inactive users.
 *
 * Index 0 always holds the null symbol; indices 1..K-1 hold the active
 * constellation. Index 1 doubles as the reference symbol sent in the first
 * slot of every active frame.
 */
class ExtendedAlphabet {
 public:
  explicit ExtendedAlphabet(std::vector<cd> active) {
    symbols_.reserve(active.size() + 1);
    symbols_.push_back(cd{0.0, 0.0});
    symbols_.insert(symbols_.end(), active.begin(), active.end());
    double energy = 0.0;
    for (const cd& d : active) energy += std::norm(d);
    e_sym_ = active.empty() ? 0.0 : energy / static_cast<double>(active.size());
  }

  [[nodiscard]] std::size_t size() const { return symbols_.size(); }
  [[nodiscard]] std::size_t active_size() const { return symbols_.size() - 1; }
  [[nodiscard]] const std::vector<cd>& symbols() const { return symbols_; }
  [[nodiscard]] cd operator[](std::size_t k) const { return symbols_[k]; }
  [[nodiscard]] double energy(std::size_t k) const { return std::norm(symbols_[k]); }

  /// Mean energy of the active symbols.
  [[nodiscard]] double e_sym() const { return e_sym_; }

  [[nodiscard]] std::size_t reference_index() const { return 1; }
  [[nodiscard]] cd reference_symbol() const { return symbols_[1]; }

  /// Index of the active symbol closest to `z`; ties go to the lowest index.
  [[nodiscard]] std::size_t nearest_active(cd z) const {
    std::size_t best = 1;
    double best_dist = std::norm(z - symbols_[1]);
    for (std::size_t k = 2; k < symbols_.size(); ++k) {
      const double dist = std::norm(z - symbols_[k]);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    return best;
  }

 private:
  std::vector<cd> symbols_;
  double e_sym_ = 0.0;
};

// Constellations are listed with real part descending, then imaginary part
// descending, so the reference symbol is the upper-right point.
inline ExtendedAlphabet build_alphabet(Modulation mod) {
  std::vector<cd> active;
  switch (mod) {
    case Modulation::QPSK: {
      const double s = 1.0 / std::sqrt(2.0);
      for (double re : {1.0, -1.0})
        for (double im : {1.0, -1.0}) active.emplace_back(re * s, im * s);
      break;
    }
    case Modulation::QAM16: {
      const double s = 1.0 / std::sqrt(10.0);
      for (double re : {3.0, 1.0, -1.0, -3.0})
        for (double im : {3.0, 1.0, -1.0, -3.0}) active.emplace_back(re * s, im * s);
      break;
    }
  }
  return ExtendedAlphabet(std::move(active));
}

/// sigma_n^2 = E_sym * 10^(-snr_db / 10).
inline double noise_variance_from_snr(double snr_db, double e_sym) {
  return e_sym * std::pow(10.0, -snr_db / 10.0);
}

struct ScenarioConfig {
  int M = 200;
  int N = 100;
  int J = 10;  // reference symbol + J-1 data symbols
  double p_a = 0.1;
  double snr_db = 5.0;
  Modulation modulation = Modulation::QAM16;
  int n_it = 20;
  std::uint64_t seed = 1;
  /// Exact number of active users per frame; Bernoulli(p_a) draws when unset.
  std::optional<int> active_count;

  void validate() const {
    if (M < 1) throw ConfigError("M must be >= 1");
    if (N < 1) throw ConfigError("N must be >= 1");
    if (J < 2) throw ConfigError("J must be >= 2 (reference symbol plus data)");
    if (!(p_a > 0.0 && p_a < 1.0)) throw ConfigError("p_a must lie in (0, 1)");
    if (n_it < 1) throw ConfigError("n_it must be >= 1");
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
    if (active_count && (*active_count < 0 || *active_count > M))
      throw ConfigError("active_count must lie in [0, M]");
  }
};

struct ScenarioInstance {
  CMatrix A;                  // N x M spreading sequences
  std::vector<int> activity;  // length M, 0/1
  CVector mu;                 // length M, zero for inactive users
  CMatrix D;                  // M x J transmitted symbols
  CMatrix X;                  // diag(mu) * D
  CMatrix Y;                  // A * X + W
  CMatrix W;                  // the noise draw
  double noise_var = 1.0;
};

// Circularly-symmetric CN(0, var).
class ComplexGaussian {
 public:
  explicit ComplexGaussian(double var = 1.0) : dist_(0.0, std::sqrt(var / 2.0)) {}

  template <class Rng>
  cd operator()(Rng& rng) {
    const double re = dist_(rng);
    const double im = dist_(rng);
    return {re, im};
  }

 private:
  std::normal_distribution<double> dist_;
};

template <class Rng>
CMatrix draw_complex_gaussian(Eigen::Index rows, Eigen::Index cols, double var, Rng& rng) {
  ComplexGaussian g(var);
  CMatrix out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = g(rng);
  return out;
}

template <class Rng>
CMatrix draw_spreading_matrix(int N, int M, Rng& rng) {
  if (N < 1 || M < 1) throw DimensionMismatch("spreading matrix needs N, M >= 1");
  return draw_complex_gaussian(N, M, 1.0, rng);
}

/// Draws one frame. Unlike ScenarioConfig::validate this accepts p_a in
/// [0, 1] so degenerate all-inactive or all-active frames can be produced.
template <class Rng>
ScenarioInstance generate_frame(const ScenarioConfig& config, const ExtendedAlphabet& alphabet,
                                Rng& rng) {
  const int M = config.M;
  const int N = config.N;
  const int J = config.J;
  if (M < 1 || N < 1 || J < 2) throw ConfigError("invalid frame dimensions");
  if (config.p_a < 0.0 || config.p_a > 1.0) throw ConfigError("p_a must lie in [0, 1]");

  ScenarioInstance frame;
  frame.noise_var = noise_variance_from_snr(config.snr_db, alphabet.e_sym());
  frame.A = draw_spreading_matrix(N, M, rng);

  frame.activity.assign(static_cast<std::size_t>(M), 0);
  if (config.active_count) {
    std::vector<int> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < *config.active_count; ++i) frame.activity[order[i]] = 1;
  } else {
    std::bernoulli_distribution active(config.p_a);
    for (auto& a : frame.activity) a = active(rng) ? 1 : 0;
  }

  ComplexGaussian unit(1.0);
  frame.mu = CVector::Zero(M);
  for (int m = 0; m < M; ++m) {
    const cd gain = unit(rng);
    if (frame.activity[m]) frame.mu(m) = gain;
  }

  std::uniform_int_distribution<std::size_t> pick(1, alphabet.active_size());
  frame.D = CMatrix::Zero(M, J);
  for (int m = 0; m < M; ++m) {
    if (!frame.activity[m]) continue;
    frame.D(m, 0) = alphabet.reference_symbol();
    for (int j = 1; j < J; ++j) frame.D(m, j) = alphabet[pick(rng)];
  }

  frame.X = frame.mu.asDiagonal() * frame.D;
  frame.W = draw_complex_gaussian(N, J, frame.noise_var, rng);
  frame.Y = frame.A * frame.X + frame.W;
  return frame;
}

}  // namespace ampvbic
