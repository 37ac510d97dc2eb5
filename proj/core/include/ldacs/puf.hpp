#pragma once

// Simulated arbiter-PUF hardware.
//
// Each of the 128 response bits comes from an independent arbiter chain
// modelled as a linear additive delay over 32 stages plus a bias term:
//
//   bit_i(C) = [ <w_i, phi(C)> + noise_i >= 0 ]
//   phi_j(C) = prod_{k=j}^{31} (1 - 2 C_k)   for j = 0..31,   phi_32 = 1
//
// Noise is Gaussian on the delay difference. Aging grows the bit error rate
// according to an AgingPolicy; the noise standard deviation is rescaled so
// that the device's analytic error curve hits the aged error rate.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldacs/bits.hpp"
#include "ldacs/rng.hpp"

namespace ldacs::puf {

inline constexpr std::size_t kStages = kChallengeBits;
inline constexpr std::size_t kFeatureDim = kStages + 1;
inline constexpr std::size_t kChains = kResponseBits;

using FeatureVector = std::array<double, kFeatureDim>;

/// Parity feature map of the arbiter chain.
FeatureVector features(Challenge c);

/// Row n holds phi(challenges[n]).
Eigen::MatrixXd feature_matrix(std::span<const Challenge> challenges);
Eigen::MatrixXf feature_matrix_f(std::span<const Challenge> challenges);

/// Threshold with ties resolved to 1.
constexpr int threshold(double x) { return x >= 0.0 ? 1 : 0; }

enum class AgingMode {
  kMultiplicative,  ///< ber(t) = base * factor^(t / period)
  kAdditive,        ///< ber(t) = base + (factor - 1) * t / period, capped at 0.5
};

struct AgingPolicy {
  double factor_per_period = 1.19;
  double period_years = 2.0;
  AgingMode mode = AgingMode::kMultiplicative;

  /// Throws ArgumentError unless factor >= 1 and period > 0.
  void validate() const;
};

/// Bit error rate after `years` of aging from `base_ber`.
double aged_ber(double base_ber, double years, const AgingPolicy& policy);

class PufDevice {
 public:
  /// Weights for all chains, kChains x kFeatureDim.
  const Eigen::MatrixXd& chains() const { return chains_; }
  /// Euclidean norm of each chain's weight vector.
  const std::vector<double>& chain_norms() const { return chain_norms_; }
  double noise_sigma() const { return noise_sigma_; }
  double age_years() const { return age_years_; }
  double base_ber() const { return base_ber_; }
  std::uint64_t seed() const { return seed_; }
  const AgingPolicy& aging_policy() const { return aging_; }

  double effective_ber() const { return aged_ber(base_ber_, age_years_, aging_); }
  /// Noise standard deviation currently applied to each delay difference.
  double effective_sigma() const { return effective_sigma_; }

  /// Raw delay differences <w_i, phi(C)>, noiseless.
  Eigen::VectorXd delays(Challenge c) const;

  Response evaluate(Challenge c) const;
  Response evaluate_noisy(Challenge c, Rng& rng) const;
  /// Per-bit majority over `votes` noisy reads; `votes` must be odd.
  Response read_majority(Challenge c, int votes, Rng& rng) const;

  /// Builds a device around explicit weights. base_ber is estimated the same
  /// way as for generated devices.
  static PufDevice from_weights(Eigen::MatrixXd chains, double noise_sigma, std::uint64_t seed);

 private:
  friend PufDevice generate_device(std::uint64_t seed, double noise_sigma);
  friend PufDevice age_device(const PufDevice& device, double years, const AgingPolicy& policy);

  PufDevice() = default;
  void refresh_effective_sigma();

  Eigen::MatrixXd chains_;
  std::vector<double> chain_norms_;
  double noise_sigma_ = 0.0;
  double age_years_ = 0.0;
  double base_ber_ = 0.0;
  double effective_sigma_ = 0.0;
  std::uint64_t seed_ = 0;
  AgingPolicy aging_{};
};

/// Draws chain weights i.i.d. N(0,1) from a stream seeded by `seed`.
PufDevice generate_device(std::uint64_t seed, double noise_sigma);

/// evaluate(device, C, noisy, rng_seed): noise drawn from Rng(rng_seed) when noisy.
Response evaluate(const PufDevice& device, Challenge c, bool noisy, std::uint64_t rng_seed);

/// Returns an older copy of `device`. Chains are unchanged; only the noise grows.
PufDevice age_device(const PufDevice& device, double years, const AgingPolicy& policy = {});

/// Monte-Carlo bit error rate: fraction of noisy reads disagreeing with the
/// noiseless response, over `challenges` random challenges x `reads` reads.
double measure_ber(const PufDevice& device, std::uint64_t seed, int challenges, int reads);

/// Analytic bit error rate of the linear model for Gaussian delay differences:
/// mean over chains of atan(sigma / |w_i|) / pi.
double analytic_ber(const PufDevice& device, double sigma);

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, double best_sigma)
      : std::runtime_error(what), best_sigma_(best_sigma) {}
  double best_sigma() const { return best_sigma_; }

 private:
  double best_sigma_;
};

/// Noise sigma for which the Monte-Carlo error rate of the device generated
/// from `device_seed` equals `target_ber`. Requires 0 < target_ber < 0.5.
double calibrate_sigma_for_ber(std::uint64_t device_seed, double target_ber);

}  // namespace ldacs::puf
