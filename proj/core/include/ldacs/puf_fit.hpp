#pragma once

// Fitting arbiter-chain delay models to observed CRPs with CMA-ES.
//
// Each response bit is an independent 33-dimensional problem: minimize the
// 0-1 misclassification rate of sign(<w, phi(C)>) against the observed bit.
// Predictions are invariant to positive scaling of w, so fitted weights are
// returned at unit Euclidean norm.
//
// Model file format:
//   #pufmodel v1 chains=128 dim=33
//   <33 decimal floats, 17 significant digits>   (one line per chain)

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ldacs/cmaes.hpp"
#include "ldacs/crp.hpp"

namespace ldacs::cma {

struct PufModel {
  /// kChains x kFeatureDim weights.
  Eigen::MatrixXd chains;

  static PufModel from_device(const puf::PufDevice& device) { return {device.chains()}; }
};

/// bit i = threshold(<w_i, phi(C)>). Throws ArgumentError on a model that is
/// not 128 x 33.
Response predict_response(const PufModel& model, Challenge c);

/// Predictions for many challenges at once, same rule as predict_response.
std::vector<Response> predict_responses(const PufModel& model, std::span<const Challenge> challenges);

/// Fraction of response bits predicted correctly over `crps`.
double bit_accuracy(const PufModel& model, const puf::CrpTable& crps);

void write_model(std::ostream& out, const PufModel& model);
PufModel read_model(std::istream& in);

struct FitOptions {
  /// Fitness evaluations per chain.
  std::uint64_t budget = 50'000;
  /// Chains ending below this training accuracy are flagged.
  double accuracy_floor = 0.98;
  double sigma0 = 1.0;
  /// Generations without improvement before giving up on a chain; 0 disables.
  std::uint64_t stall_generations = 100;
};

struct ChainFit {
  Eigen::VectorXd weights;  // unit norm, length 33
  double training_accuracy = 0.0;
  bool below_floor = false;
  std::uint64_t evaluations = 0;
  StopReason reason = StopReason::kBudget;
};

/// Shares the feature matrix of one CRP table across all chain fits.
class ChainFitter {
 public:
  /// Throws ArgumentError on an empty table.
  explicit ChainFitter(const puf::CrpTable& crps);

  ChainFit fit(std::size_t chain_index, const FitOptions& options, std::uint64_t seed) const;

  /// Misclassification fraction of `weights` on one chain's training bits.
  double training_error(std::size_t chain_index, const Eigen::VectorXd& weights) const;

  std::size_t size() const { return static_cast<std::size_t>(features_.rows()); }

 private:
  Eigen::MatrixXf features_;  // column-major, one column per feature
  Eigen::MatrixXd features_d_;
  // labels_(n, i) = bit i of response n.
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> labels_;
};

ChainFit fit_puf_chain(const puf::CrpTable& crps, std::size_t chain_index, std::uint64_t budget,
                       std::uint64_t seed);

struct ModelFit {
  PufModel model;
  std::vector<ChainFit> chains;
  double mean_training_accuracy = 0.0;
  std::size_t chains_below_floor = 0;
};

/// Fits all 128 chains; chain i uses seed derive_seed(seed, i).
ModelFit fit_puf_model(const puf::CrpTable& crps, const FitOptions& options, std::uint64_t seed);

}  // namespace ldacs::cma
