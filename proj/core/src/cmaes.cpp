#include "ldacs/cmaes.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ldacs/errors.hpp"

namespace ldacs::cma {

BatchFitness as_batch(FitnessFunction f) {
  BatchFitness b;
  b.arity = f.arity;
  b.evaluate = [fn = std::move(f.evaluate)](const Eigen::MatrixXd& pop, std::span<double> scores) {
    for (Eigen::Index k = 0; k < pop.cols(); ++k) {
      const Eigen::VectorXd x = pop.col(k);
      scores[static_cast<std::size_t>(k)] = fn(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    }
  };
  return b;
}

CmaEs::CmaEs(std::size_t n, const Eigen::VectorXd& mean0, double sigma0, std::uint64_t seed) : rng_(seed) {
  if (n < 1) throw ArgumentError("cma: dimension must be >= 1");
  if (static_cast<std::size_t>(mean0.size()) != n) throw ArgumentError("cma: mean0 has wrong length");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ArgumentError("cma: sigma0 must be positive");

  const double dn = static_cast<double>(n);
  auto& s = state_;
  s.mean = mean0;
  s.sigma = sigma0;
  s.cov = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  s.path_sigma = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.path_cov = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(dn)));
  s.mu = s.lambda / 2;

  s.weights.resize(s.mu);
  for (int i = 0; i < s.mu; ++i) s.weights[i] = std::log(s.mu + 0.5) - std::log(i + 1.0);
  s.weights /= s.weights.sum();
  mu_eff_ = 1.0 / s.weights.squaredNorm();

  cc_ = (4.0 + mu_eff_ / dn) / (dn + 4.0 + 2.0 * mu_eff_ / dn);
  cs_ = (mu_eff_ + 2.0) / (dn + mu_eff_ + 5.0);
  c1_ = 2.0 / ((dn + 1.3) * (dn + 1.3) + mu_eff_);
  cmu_ = std::min(1.0 - c1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((dn + 2.0) * (dn + 2.0) + mu_eff_));
  damps_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (dn + 1.0)) - 1.0) + cs_;
  chi_n_ = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

  s.best_x = mean0;
  basis_ = s.cov;
  eigenvalues_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  inv_sqrt_cov_ = s.cov;
}

double CmaEs::max_step() const { return state_.sigma * std::sqrt(state_.cov.diagonal().maxCoeff()); }

void CmaEs::update_eigensystem() {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(state_.cov);
  if (solver.info() != Eigen::Success) throw OptimizationError("cma: eigendecomposition failed");
  eigenvalues_ = solver.eigenvalues();
  if (eigenvalues_.minCoeff() <= 0.0) {
    throw OptimizationError("cma: covariance lost positive definiteness (min eigenvalue " +
                            std::to_string(eigenvalues_.minCoeff()) + ")");
  }
  basis_ = solver.eigenvectors();
  inv_sqrt_cov_ = basis_ * eigenvalues_.cwiseSqrt().cwiseInverse().asDiagonal() * basis_.transpose();
  eigen_generation_ = state_.generation;
}

void CmaEs::step(const BatchFitness& f) {
  auto& s = state_;
  const auto n = static_cast<Eigen::Index>(s.dimension());
  if (f.arity != s.dimension()) throw ArgumentError("cma: fitness arity does not match dimension");

  // Lazy eigendecomposition, O(n^2) amortized per generation.
  const double lag = static_cast<double>(s.lambda) / (c1_ + cmu_) / static_cast<double>(n) / 10.0;
  if (s.generation == 0 || static_cast<double>(s.generation - eigen_generation_) > lag) update_eigensystem();

  const Eigen::MatrixXd bd = basis_ * eigenvalues_.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd z(n, s.lambda);
  for (Eigen::Index k = 0; k < s.lambda; ++k)
    for (Eigen::Index i = 0; i < n; ++i) z(i, k) = rng_.normal();
  const Eigen::MatrixXd y = bd * z;
  const Eigen::MatrixXd x = (s.sigma * y).colwise() + s.mean;

  std::vector<double> scores(static_cast<std::size_t>(s.lambda));
  f.evaluate(x, scores);
  s.evaluations += static_cast<std::uint64_t>(s.lambda);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k])) {
      throw OptimizationError("cma: non-finite fitness at generation " + std::to_string(s.generation) +
                              ", candidate " + std::to_string(k));
    }
  }

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

  if (scores[order[0]] < s.best_f) {
    s.best_f = scores[order[0]];
    s.best_x = x.col(order[0]);
  }

  Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < s.mu; ++i) y_w += s.weights[i] * y.col(order[i]);
  s.mean += s.sigma * y_w;

  s.path_sigma = (1.0 - cs_) * s.path_sigma + std::sqrt(cs_ * (2.0 - cs_) * mu_eff_) * (inv_sqrt_cov_ * y_w);
  const double ps_norm = s.path_sigma.norm();
  const double decay = 1.0 - std::pow(1.0 - cs_, 2.0 * static_cast<double>(s.generation + 1));
  const bool hsig = ps_norm / std::sqrt(decay) / chi_n_ < 1.4 + 2.0 / (static_cast<double>(n) + 1.0);
  s.path_cov = (1.0 - cc_) * s.path_cov;
  if (hsig) s.path_cov += std::sqrt(cc_ * (2.0 - cc_) * mu_eff_) * y_w;

  Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < s.mu; ++i) {
    const auto yi = y.col(order[i]);
    rank_mu.noalias() += s.weights[i] * yi * yi.transpose();
  }
  const double hsig_correction = hsig ? 0.0 : cc_ * (2.0 - cc_);
  s.cov = (1.0 - c1_ - cmu_) * s.cov + c1_ * (s.path_cov * s.path_cov.transpose() + hsig_correction * s.cov) +
          cmu_ * rank_mu;
  s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();

  s.sigma *= std::exp((cs_ / damps_) * (ps_norm / chi_n_ - 1.0));
  if (!std::isfinite(s.sigma) || s.sigma <= 0.0) throw OptimizationError("cma: step size degenerated");
  ++s.generation;
}

CmaEs cma_init(std::size_t n, const Eigen::VectorXd& mean0, double sigma0, std::uint64_t seed) {
  return CmaEs(n, mean0, sigma0, seed);
}

void cma_step(CmaEs& es, const BatchFitness& f) { es.step(f); }
void cma_step(CmaEs& es, const FitnessFunction& f) { es.step(f); }

MinimizeResult minimize(const BatchFitness& f, const Eigen::VectorXd& mean0, double sigma0,
                        std::uint64_t seed, const MinimizeOptions& options) {
  CmaEs es(f.arity, mean0, sigma0, seed);
  MinimizeResult result;
  double last_best = std::numeric_limits<double>::infinity();
  std::uint64_t last_improvement = 0;
  for (;;) {
    es.step(f);
    const auto& s = es.state();
    if (s.best_f < last_best) {
      last_best = s.best_f;
      last_improvement = s.generation;
    }
    if (s.best_f <= options.target_fitness) {
      result.reason = StopReason::kTargetReached;
      break;
    }
    if (s.evaluations + static_cast<std::uint64_t>(s.lambda) > options.max_evaluations ||
        s.generation >= options.max_generations) {
      result.reason = StopReason::kBudget;
      break;
    }
    if (es.max_step() < options.tol_x) {
      result.reason = StopReason::kTolX;
      break;
    }
    if (options.stall_generations > 0 && s.generation - last_improvement >= options.stall_generations) {
      result.reason = StopReason::kStalled;
      break;
    }
  }
  const auto& s = es.state();
  result.best_x = s.best_x;
  result.best_f = s.best_f;
  result.evaluations = s.evaluations;
  result.generations = s.generation;
  return result;
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::kTargetReached: return "target";
    case StopReason::kBudget: return "budget";
    case StopReason::kTolX: return "tolx";
    case StopReason::kStalled: return "stalled";
  }
  return "unknown";
}

}  // namespace ldacs::cma
