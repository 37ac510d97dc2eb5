#include "ldacs/puf_fit.hpp"

#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "ldacs/errors.hpp"

namespace ldacs::cma {

namespace {

constexpr const char* kModelHeader = "#pufmodel v1 chains=128 dim=33";

void check_shape(const PufModel& model) {
  if (model.chains.rows() != static_cast<Eigen::Index>(puf::kChains) ||
      model.chains.cols() != static_cast<Eigen::Index>(puf::kFeatureDim)) {
    throw ArgumentError("puf model must be 128 chains x 33 weights");
  }
}

}  // namespace

Response predict_response(const PufModel& model, Challenge c) {
  check_shape(model);
  const auto phi = puf::features(c);
  const Eigen::VectorXd d = model.chains * Eigen::Map<const Eigen::VectorXd>(phi.data(), puf::kFeatureDim);
  Response r;
  for (std::size_t i = 0; i < puf::kChains; ++i) r.set_bit(i, puf::threshold(d[static_cast<Eigen::Index>(i)]));
  return r;
}

std::vector<Response> predict_responses(const PufModel& model, std::span<const Challenge> challenges) {
  check_shape(model);
  std::vector<Response> out(challenges.size());
  constexpr std::size_t kBlock = 4096;
  for (std::size_t start = 0; start < challenges.size(); start += kBlock) {
    const std::size_t len = std::min(kBlock, challenges.size() - start);
    const Eigen::MatrixXd phi = puf::feature_matrix(challenges.subspan(start, len));
    const Eigen::MatrixXd d = phi * model.chains.transpose();  // len x 128
    for (std::size_t n = 0; n < len; ++n) {
      Response& r = out[start + n];
      for (std::size_t i = 0; i < puf::kChains; ++i) {
        r.set_bit(i, puf::threshold(d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i))));
      }
    }
  }
  return out;
}

double bit_accuracy(const PufModel& model, const puf::CrpTable& crps) {
  if (crps.empty()) return 0.0;
  const auto predicted = predict_responses(model, puf::challenges_of(crps));
  std::uint64_t wrong = 0;
  for (std::size_t n = 0; n < crps.size(); ++n) {
    wrong += static_cast<std::uint64_t>(hamming_distance(predicted[n], crps[n].response));
  }
  return 1.0 - static_cast<double>(wrong) / (static_cast<double>(crps.size()) * puf::kChains);
}

void write_model(std::ostream& out, const PufModel& model) {
  check_shape(model);
  out << kModelHeader << '\n';
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < model.chains.rows(); ++i) {
    for (Eigen::Index j = 0; j < model.chains.cols(); ++j) {
      if (j) out << ' ';
      out << model.chains(i, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

PufModel read_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kModelHeader) throw FormatError("pufmodel: missing or unsupported header");
  PufModel model{Eigen::MatrixXd(puf::kChains, puf::kFeatureDim)};
  for (Eigen::Index i = 0; i < model.chains.rows(); ++i) {
    if (!std::getline(in, line)) throw FormatError("pufmodel: expected 128 chain lines");
    std::istringstream fields(line);
    for (Eigen::Index j = 0; j < model.chains.cols(); ++j) {
      if (!(fields >> model.chains(i, j))) {
        throw FormatError("pufmodel: chain " + std::to_string(i) + " has fewer than 33 weights");
      }
    }
    std::string extra;
    if (fields >> extra) throw FormatError("pufmodel: chain " + std::to_string(i) + " has extra fields");
  }
  while (std::getline(in, line)) {
    if (!line.empty()) throw FormatError("pufmodel: trailing content after 128 chains");
  }
  return model;
}

ChainFitter::ChainFitter(const puf::CrpTable& crps) {
  if (crps.empty()) throw ArgumentError("fit: CRP table is empty");
  const auto challenges = puf::challenges_of(crps);
  features_ = puf::feature_matrix_f(challenges);
  features_d_ = puf::feature_matrix(challenges);
  labels_.resize(static_cast<Eigen::Index>(crps.size()), static_cast<Eigen::Index>(puf::kChains));
  for (std::size_t n = 0; n < crps.size(); ++n) {
    for (std::size_t i = 0; i < puf::kChains; ++i) {
      labels_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = crps[n].response.bit(i) != 0;
    }
  }
}

double ChainFitter::training_error(std::size_t chain_index, const Eigen::VectorXd& weights) const {
  const Eigen::ArrayXd s = (features_d_ * weights).array();
  const auto wrong = ((s >= 0.0) != labels_.col(static_cast<Eigen::Index>(chain_index))).count();
  return static_cast<double>(wrong) / static_cast<double>(size());
}

ChainFit ChainFitter::fit(std::size_t chain_index, const FitOptions& options, std::uint64_t seed) const {
  if (chain_index >= puf::kChains) throw ArgumentError("fit: chain_index must be in 0..127");
  const auto col = static_cast<Eigen::Index>(chain_index);
  const auto n = static_cast<double>(size());

  // Rows are folded with the label sign so that a sample is misclassified
  // exactly when its folded score is negative (label 1) or non-positive
  // (label 0, since ties resolve to 1).
  Eigen::MatrixXf folded = features_;
  std::vector<float> cutoff(size());
  for (Eigen::Index r = 0; r < folded.rows(); ++r) {
    if (!labels_(r, col)) {
      folded.row(r) = -folded.row(r);
      cutoff[static_cast<std::size_t>(r)] = std::numeric_limits<float>::denorm_min();
    }
  }

  BatchFitness fitness;
  fitness.arity = puf::kFeatureDim;
  Eigen::MatrixXf scores_buf;
  fitness.evaluate = [&](const Eigen::MatrixXd& pop, std::span<double> scores) {
    const Eigen::MatrixXf w = pop.cast<float>();
    scores_buf.noalias() = folded * w;
    for (Eigen::Index k = 0; k < scores_buf.cols(); ++k) {
      const float* sk = scores_buf.col(k).data();
      std::size_t wrong = 0;
      for (std::size_t r = 0; r < cutoff.size(); ++r) wrong += sk[r] < cutoff[r];
      scores[static_cast<std::size_t>(k)] = static_cast<double>(wrong) / n;
    }
  };

  MinimizeOptions mo;
  mo.max_evaluations = options.budget;
  mo.target_fitness = 0.0;
  mo.stall_generations = options.stall_generations;
  const auto result =
      minimize(fitness, Eigen::VectorXd::Zero(puf::kFeatureDim), options.sigma0, seed, mo);

  ChainFit fit;
  const double norm = result.best_x.norm();
  fit.weights = norm > 0.0 ? Eigen::VectorXd(result.best_x / norm) : result.best_x;
  fit.training_accuracy = 1.0 - training_error(chain_index, fit.weights);
  fit.below_floor = fit.training_accuracy < options.accuracy_floor;
  fit.evaluations = result.evaluations;
  fit.reason = result.reason;
  return fit;
}

ChainFit fit_puf_chain(const puf::CrpTable& crps, std::size_t chain_index, std::uint64_t budget,
                       std::uint64_t seed) {
  FitOptions options;
  options.budget = budget;
  return ChainFitter(crps).fit(chain_index, options, seed);
}

ModelFit fit_puf_model(const puf::CrpTable& crps, const FitOptions& options, std::uint64_t seed) {
  const ChainFitter fitter(crps);
  ModelFit out;
  out.model.chains.resize(puf::kChains, puf::kFeatureDim);
  out.chains.reserve(puf::kChains);
  double acc = 0.0;
  for (std::size_t i = 0; i < puf::kChains; ++i) {
    auto fit = fitter.fit(i, options, derive_seed(seed, i));
    out.model.chains.row(static_cast<Eigen::Index>(i)) = fit.weights.transpose();
    acc += fit.training_accuracy;
    out.chains_below_floor += fit.below_floor ? 1 : 0;
    out.chains.push_back(std::move(fit));
  }
  out.mean_training_accuracy = acc / static_cast<double>(puf::kChains);
  return out;
}

}  // namespace ldacs::cma
