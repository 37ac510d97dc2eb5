#pragma once

// (mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates and
// cumulative step-size adaptation. Default strategy parameters follow the
// usual published tutorial values.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include "ldacs/rng.hpp"

namespace ldacs::cma {

class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scalar objective, lower is better. Must be deterministic and reentrant.
struct FitnessFunction {
  std::size_t arity = 0;
  std::function<double(std::span<const double>)> evaluate;
};

/// Evaluates a whole population at once: column k of `population` is
/// candidate k, its score goes to `scores[k]`.
struct BatchFitness {
  std::size_t arity = 0;
  std::function<void(const Eigen::MatrixXd& population, std::span<double> scores)> evaluate;
};

BatchFitness as_batch(FitnessFunction f);

struct CmaEsState {
  Eigen::VectorXd mean;
  double sigma = 0.0;
  Eigen::MatrixXd cov;
  Eigen::VectorXd path_sigma;
  Eigen::VectorXd path_cov;
  std::uint64_t generation = 0;
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;

  // Best candidate seen so far (elitist bookkeeping only; selection is comma).
  Eigen::VectorXd best_x;
  double best_f = std::numeric_limits<double>::infinity();
  std::uint64_t evaluations = 0;

  std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
};

class CmaEs {
 public:
  /// Throws ArgumentError on n < 1, sigma0 <= 0 or |mean0| != n.
  CmaEs(std::size_t n, const Eigen::VectorXd& mean0, double sigma0, std::uint64_t seed);

  const CmaEsState& state() const { return state_; }

  /// One generation: sample lambda candidates, rank, update mean, paths,
  /// covariance and step size. Throws OptimizationError if any fitness value
  /// is not finite.
  void step(const BatchFitness& f);
  void step(const FitnessFunction& f) { step(as_batch(f)); }

  double mu_eff() const { return mu_eff_; }
  /// Eigenvalues of the covariance from the last decomposition.
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  /// sigma * sqrt(max diag(C)), the largest coordinate-wise step.
  double max_step() const;

 private:
  void update_eigensystem();

  CmaEsState state_;
  Rng rng_;

  double mu_eff_ = 0.0;
  double cc_ = 0.0, cs_ = 0.0, c1_ = 0.0, cmu_ = 0.0, damps_ = 0.0, chi_n_ = 0.0;

  Eigen::MatrixXd basis_;          // B: eigenvectors of cov
  Eigen::VectorXd eigenvalues_;    // D^2
  Eigen::MatrixXd inv_sqrt_cov_;   // B D^-1 B^T
  std::uint64_t eigen_generation_ = 0;
};

/// Equivalent to constructing CmaEs directly.
CmaEs cma_init(std::size_t n, const Eigen::VectorXd& mean0, double sigma0, std::uint64_t seed);
void cma_step(CmaEs& es, const BatchFitness& f);
void cma_step(CmaEs& es, const FitnessFunction& f);

struct MinimizeOptions {
  std::uint64_t max_evaluations = 100'000;
  std::uint64_t max_generations = std::numeric_limits<std::uint64_t>::max();
  /// Stop as soon as best fitness <= target.
  double target_fitness = -std::numeric_limits<double>::infinity();
  /// Stop when max_step() falls below this.
  double tol_x = 1e-12;
  /// Stop after this many generations without improving the best fitness; 0 disables.
  std::uint64_t stall_generations = 0;
};

enum class StopReason { kTargetReached, kBudget, kTolX, kStalled };

struct MinimizeResult {
  Eigen::VectorXd best_x;
  double best_f = 0.0;
  std::uint64_t evaluations = 0;
  std::uint64_t generations = 0;
  StopReason reason = StopReason::kBudget;
};

MinimizeResult minimize(const BatchFitness& f, const Eigen::VectorXd& mean0, double sigma0,
                        std::uint64_t seed, const MinimizeOptions& options);

std::string to_string(StopReason r);

}  // namespace ldacs::cma
