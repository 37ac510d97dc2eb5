#include "ldacs/puf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ldacs/errors.hpp"

namespace ldacs::puf {

namespace {

constexpr std::uint64_t kWeightStream = 1;
constexpr std::uint64_t kBerStream = 2;
constexpr std::uint64_t kCalibrationStream = 3;

constexpr int kBerChallenges = 10'000;
constexpr int kBerReads = 10;

// Error rates at or above this are treated as a coin flip.
constexpr double kMaxBer = 0.5 - 1e-9;

template <typename Scalar>
void fill_features(Challenge c, Scalar* out) {
  Scalar p = 1;
  out[kStages] = 1;
  for (int j = static_cast<int>(kStages) - 1; j >= 0; --j) {
    p *= c.bit(static_cast<std::size_t>(j)) ? Scalar(-1) : Scalar(1);
    out[j] = p;
  }
}

double inverse_analytic_ber(const PufDevice& device, double ber) {
  if (ber <= 0.0) return 0.0;
  if (ber >= kMaxBer) return std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = 1.0;
  while (analytic_ber(device, hi) < ber) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (analytic_ber(device, mid) < ber ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

FeatureVector features(Challenge c) {
  FeatureVector phi{};
  fill_features(c, phi.data());
  return phi;
}

Eigen::MatrixXd feature_matrix(std::span<const Challenge> challenges) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(challenges.size(), kFeatureDim);
  for (std::size_t n = 0; n < challenges.size(); ++n) fill_features(challenges[n], m.row(n).data());
  return m;
}

Eigen::MatrixXf feature_matrix_f(std::span<const Challenge> challenges) {
  Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(challenges.size(), kFeatureDim);
  for (std::size_t n = 0; n < challenges.size(); ++n) fill_features(challenges[n], m.row(n).data());
  return m;
}

void AgingPolicy::validate() const {
  if (!(factor_per_period >= 1.0)) throw ArgumentError("aging factor_per_period must be >= 1");
  if (!(period_years > 0.0)) throw ArgumentError("aging period_years must be > 0");
}

double aged_ber(double base_ber, double years, const AgingPolicy& policy) {
  if (years < 0.0) throw ArgumentError("aging years must be non-negative");
  const double periods = years / policy.period_years;
  if (policy.mode == AgingMode::kAdditive) {
    return std::min(0.5, base_ber + (policy.factor_per_period - 1.0) * periods);
  }
  return base_ber * std::pow(policy.factor_per_period, periods);
}

Eigen::VectorXd PufDevice::delays(Challenge c) const {
  const auto phi = features(c);
  return chains_ * Eigen::Map<const Eigen::VectorXd>(phi.data(), kFeatureDim);
}

Response PufDevice::evaluate(Challenge c) const {
  const Eigen::VectorXd d = delays(c);
  Response r;
  for (std::size_t i = 0; i < kChains; ++i) r.set_bit(i, threshold(d[static_cast<Eigen::Index>(i)]));
  return r;
}

Response PufDevice::evaluate_noisy(Challenge c, Rng& rng) const {
  const Eigen::VectorXd d = delays(c);
  Response r;
  const bool saturated = std::isinf(effective_sigma_);
  for (std::size_t i = 0; i < kChains; ++i) {
    const double z = rng.normal();
    const double x = saturated ? z : d[static_cast<Eigen::Index>(i)] + effective_sigma_ * z;
    r.set_bit(i, threshold(x));
  }
  return r;
}

Response PufDevice::read_majority(Challenge c, int votes, Rng& rng) const {
  if (votes < 1 || votes % 2 == 0) throw ArgumentError("majority vote needs an odd number of reads");
  const Eigen::VectorXd d = delays(c);
  const bool saturated = std::isinf(effective_sigma_);
  Response r;
  for (std::size_t i = 0; i < kChains; ++i) {
    int ones = 0;
    for (int v = 0; v < votes; ++v) {
      const double z = rng.normal();
      ones += threshold(saturated ? z : d[static_cast<Eigen::Index>(i)] + effective_sigma_ * z);
    }
    r.set_bit(i, 2 * ones > votes ? 1 : 0);
  }
  return r;
}

void PufDevice::refresh_effective_sigma() {
  if (age_years_ == 0.0) {
    effective_sigma_ = noise_sigma_;
    return;
  }
  const double target = effective_ber();
  if (target <= 0.0) {
    effective_sigma_ = 0.0;
    return;
  }
  const double scale = base_ber_ > 0.0 ? noise_sigma_ / inverse_analytic_ber(*this, base_ber_) : 1.0;
  effective_sigma_ = scale * inverse_analytic_ber(*this, target);
}

PufDevice PufDevice::from_weights(Eigen::MatrixXd chains, double noise_sigma, std::uint64_t seed) {
  if (chains.rows() != static_cast<Eigen::Index>(kChains) ||
      chains.cols() != static_cast<Eigen::Index>(kFeatureDim)) {
    throw ArgumentError("device needs 128 chains of 33 weights");
  }
  if (!(noise_sigma >= 0.0)) throw ArgumentError("noise_sigma must be non-negative");
  PufDevice d;
  d.chains_ = std::move(chains);
  d.chain_norms_.resize(kChains);
  for (std::size_t i = 0; i < kChains; ++i) d.chain_norms_[i] = d.chains_.row(static_cast<Eigen::Index>(i)).norm();
  d.noise_sigma_ = noise_sigma;
  d.effective_sigma_ = noise_sigma;
  d.seed_ = seed;
  if (noise_sigma > 0.0) d.base_ber_ = measure_ber(d, derive_seed(seed, kBerStream), kBerChallenges, kBerReads);
  return d;
}

PufDevice generate_device(std::uint64_t seed, double noise_sigma) {
  Rng rng(derive_seed(seed, kWeightStream));
  Eigen::MatrixXd w(kChains, kFeatureDim);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.normal();
  return PufDevice::from_weights(std::move(w), noise_sigma, seed);
}

Response evaluate(const PufDevice& device, Challenge c, bool noisy, std::uint64_t rng_seed) {
  if (!noisy) return device.evaluate(c);
  Rng rng(rng_seed);
  return device.evaluate_noisy(c, rng);
}

PufDevice age_device(const PufDevice& device, double years, const AgingPolicy& policy) {
  if (!(years >= 0.0)) throw ArgumentError("age_device: years must be non-negative");
  policy.validate();
  PufDevice aged = device;
  aged.aging_ = policy;
  aged.age_years_ = device.age_years_ + years;
  aged.refresh_effective_sigma();
  return aged;
}

double measure_ber(const PufDevice& device, std::uint64_t seed, int challenges, int reads) {
  Rng rng(seed);
  const double sigma = device.effective_sigma();
  if (sigma == 0.0) return 0.0;
  const bool saturated = std::isinf(sigma);
  std::uint64_t flips = 0;
  for (int n = 0; n < challenges; ++n) {
    const Eigen::VectorXd d = device.delays(Challenge(rng.next_u32()));
    for (int r = 0; r < reads; ++r) {
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double z = rng.normal();
        const double x = saturated ? z : d[i] + sigma * z;
        flips += threshold(x) != threshold(d[i]);
      }
    }
  }
  return static_cast<double>(flips) / (static_cast<double>(challenges) * reads * kChains);
}

double analytic_ber(const PufDevice& device, double sigma) {
  if (sigma <= 0.0) return 0.0;
  double acc = 0.0;
  for (const double norm : device.chain_norms()) acc += std::atan(sigma / norm);
  return acc / (std::numbers::pi * static_cast<double>(device.chain_norms().size()));
}

double calibrate_sigma_for_ber(std::uint64_t device_seed, double target_ber) {
  if (!(target_ber > 0.0 && target_ber < 0.5)) {
    throw ArgumentError("calibrate_sigma_for_ber: target must lie in (0, 0.5)");
  }
  const PufDevice device = generate_device(device_seed, 0.0);

  // With the noise draws fixed, a read of bit i flips exactly when sigma
  // exceeds |delay| / |z| and z points across the threshold. The empirical
  // error rate is therefore a step function of sigma whose steps are these
  // ratios, and the calibrated sigma is an order statistic of them.
  constexpr int kChallenges = 4000;
  constexpr int kReads = 8;
  Rng rng(derive_seed(device_seed, kCalibrationStream));
  std::vector<double> thresholds;
  thresholds.reserve(static_cast<std::size_t>(kChallenges) * kReads * kChains / 2);
  for (int n = 0; n < kChallenges; ++n) {
    const Eigen::VectorXd d = device.delays(Challenge(rng.next_u32()));
    for (int r = 0; r < kReads; ++r) {
      for (Eigen::Index i = 0; i < d.size(); ++i) {
        const double z = rng.normal();
        if ((d[i] >= 0.0) != (z >= 0.0)) thresholds.push_back(std::abs(d[i]) / std::abs(z));
      }
    }
  }
  const double total = static_cast<double>(kChallenges) * kReads * kChains;
  const auto wanted = static_cast<std::size_t>(std::llround(target_ber * total));
  if (wanted == 0 || wanted >= thresholds.size()) {
    const double best = thresholds.empty() ? 0.0 : *std::max_element(thresholds.begin(), thresholds.end());
    throw CalibrationError("target bit error rate unreachable for this device", best);
  }
  // sigma strictly between the wanted-th and (wanted+1)-th smallest ratio.
  std::nth_element(thresholds.begin(), thresholds.begin() + static_cast<std::ptrdiff_t>(wanted),
                   thresholds.end());
  const double upper = thresholds[wanted];
  const double lower =
      *std::max_element(thresholds.begin(), thresholds.begin() + static_cast<std::ptrdiff_t>(wanted));
  return 0.5 * (lower + upper);
}

}  // namespace ldacs::puf
