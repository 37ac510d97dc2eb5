#include "doctest.h"

#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "ldacs/cmaes.hpp"
#include "ldacs/errors.hpp"
#include "ldacs/puf_fit.hpp"

using namespace ldacs;
using namespace ldacs::cma;

namespace {

FitnessFunction sphere(std::size_t n) {
  return {n, [](std::span<const double> x) {
            double s = 0.0;
            for (double v : x) s += v * v;
            return s;
          }};
}

FitnessFunction rosenbrock(std::size_t n) {
  return {n, [](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < x.size(); ++i) {
              const double a = x[i + 1] - x[i] * x[i];
              const double b = 1.0 - x[i];
              s += 100.0 * a * a + b * b;
            }
            return s;
          }};
}

}  // namespace

TEST_SUITE("cmaes") {
  TEST_CASE("population size and recombination weights") {
    const CmaEs a(10, Eigen::VectorXd::Zero(10), 1.0, 1);
    CHECK(a.state().lambda == 10);
    CHECK(a.state().mu == 5);
    CHECK(a.state().weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 1; i < a.state().mu; ++i) CHECK(a.state().weights[i] < a.state().weights[i - 1]);

    const CmaEs b(1, Eigen::VectorXd::Zero(1), 1.0, 1);
    CHECK(b.state().lambda == 4);
    const CmaEs c(33, Eigen::VectorXd::Zero(33), 1.0, 1);
    CHECK(c.state().lambda == 14);
  }

  TEST_CASE("bad construction arguments are rejected") {
    CHECK_THROWS_AS(CmaEs(0, Eigen::VectorXd::Zero(0), 1.0, 1), ArgumentError);
    CHECK_THROWS_AS(CmaEs(3, Eigen::VectorXd::Zero(2), 1.0, 1), ArgumentError);
    CHECK_THROWS_AS(CmaEs(3, Eigen::VectorXd::Zero(3), 0.0, 1), ArgumentError);
    CmaEs es(3, Eigen::VectorXd::Zero(3), 1.0, 1);
    CHECK_THROWS_AS(es.step(sphere(4)), ArgumentError);
  }

  TEST_CASE("sphere in 10 dimensions converges within 300 generations") {
    MinimizeOptions opt;
    opt.max_generations = 300;
    opt.max_evaluations = std::numeric_limits<std::uint64_t>::max();
    opt.target_fitness = 1e-10;
    const auto r = minimize(as_batch(sphere(10)), Eigen::VectorXd::Constant(10, 5.0), 2.0, 42, opt);
    CHECK(r.best_f < 1e-10);
    CHECK(r.reason == StopReason::kTargetReached);
    CHECK(r.generations <= 300);
  }

  TEST_CASE("Rosenbrock in 5 dimensions converges within 2000 generations") {
    MinimizeOptions opt;
    opt.max_generations = 2000;
    opt.max_evaluations = std::numeric_limits<std::uint64_t>::max();
    opt.target_fitness = 1e-6;
    const auto r = minimize(as_batch(rosenbrock(5)), Eigen::VectorXd::Zero(5), 0.5, 7, opt);
    CHECK(r.best_f < 1e-6);
    for (int i = 0; i < 5; ++i) CHECK(r.best_x[i] == doctest::Approx(1.0).epsilon(1e-2));
  }

  TEST_CASE("covariance stays symmetric positive definite") {
    CmaEs es(6, Eigen::VectorXd::Constant(6, 3.0), 1.0, 5);
    for (int g = 0; g < 200; ++g) {
      es.step(rosenbrock(6));
      const auto& cov = es.state().cov;
      REQUIRE((cov - cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
      REQUIRE(Eigen::LLT<Eigen::MatrixXd>(cov).info() == Eigen::Success);
    }
    CHECK(es.state().generation == 200);
    CHECK(es.state().evaluations == 200U * static_cast<unsigned>(es.state().lambda));
  }

  TEST_CASE("non-finite fitness is an optimization error") {
    CmaEs es(3, Eigen::VectorXd::Zero(3), 1.0, 1);
    const FitnessFunction nan{3, [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); }};
    CHECK_THROWS_AS(es.step(nan), OptimizationError);
  }

  TEST_CASE("same seed, same trajectory") {
    MinimizeOptions opt;
    opt.max_generations = 50;
    const auto a = minimize(as_batch(rosenbrock(4)), Eigen::VectorXd::Zero(4), 0.5, 9, opt);
    const auto b = minimize(as_batch(rosenbrock(4)), Eigen::VectorXd::Zero(4), 0.5, 9, opt);
    CHECK(a.best_f == b.best_f);
    CHECK(a.best_x == b.best_x);
    const auto c = minimize(as_batch(rosenbrock(4)), Eigen::VectorXd::Zero(4), 0.5, 10, opt);
    CHECK(c.best_x != a.best_x);
  }

  TEST_CASE("a flat landscape stops on stall without errors") {
    MinimizeOptions opt;
    opt.max_generations = 1000;
    opt.stall_generations = 20;
    const FitnessFunction flat{4, [](std::span<const double>) { return 1.0; }};
    const auto r = minimize(as_batch(flat), Eigen::VectorXd::Zero(4), 1.0, 3, opt);
    CHECK(r.best_f == 1.0);
    CHECK(r.reason == StopReason::kStalled);
    CHECK(r.generations < 1000);
  }
}

TEST_SUITE("puf_fit") {
  TEST_CASE("the zero model answers all ones; true weights reproduce the device") {
    PufModel zero{Eigen::MatrixXd::Zero(128, 33)};
    const Response r = predict_response(zero, Challenge(0x12345678));
    for (std::size_t i = 0; i < 128; ++i) CHECK(r.bit(i) == 1);

    const auto dev = puf::generate_device(4, 0.0);
    const auto model = PufModel::from_device(dev);
    const auto crps = puf::collect_crps(dev, 500, 8);
    CHECK(bit_accuracy(model, crps) == 1.0);
    const auto cs = puf::challenges_of(crps);
    const auto batch = predict_responses(model, cs);
    for (std::size_t i = 0; i < cs.size(); ++i) REQUIRE(batch[i] == dev.evaluate(cs[i]));
  }

  TEST_CASE("model files round-trip exactly") {
    const auto model = PufModel::from_device(puf::generate_device(4, 0.0));
    std::stringstream ss;
    write_model(ss, model);
    const auto back = read_model(ss);
    CHECK(back.chains == model.chains);
    std::stringstream bad("not a model\n");
    CHECK_THROWS_AS(read_model(bad), FormatError);
  }

  TEST_CASE("a chain fitted on noiseless CRPs generalises") {
    const auto dev = puf::generate_device(4, 0.0);
    const auto train = puf::collect_crps(dev, 2000, 1);
    const auto held = puf::collect_crps(dev, 2000, 2);
    const ChainFit f = fit_puf_chain(train, 0, 20'000, 3);
    CHECK(f.training_accuracy > 0.97);
    CHECK(f.weights.norm() == doctest::Approx(1.0));
    PufModel m{Eigen::MatrixXd::Zero(128, 33)};
    m.chains.row(0) = f.weights.transpose();
    std::size_t agree = 0;
    for (const auto& rec : held) agree += predict_response(m, rec.challenge).bit(0) == rec.response.bit(0);
    CHECK(static_cast<double>(agree) / held.size() > 0.95);
  }

  TEST_CASE("ten CRPs are not enough to generalise") {
    const auto dev = puf::generate_device(4, 0.0);
    const auto train = puf::collect_crps(dev, 10, 1);
    const auto held = puf::collect_crps(dev, 2000, 2);
    FitOptions opt;
    opt.budget = 2'000;
    const auto fit = fit_puf_model(train, opt, 5);
    const double acc = bit_accuracy(fit.model, held);
    CHECK(acc >= 0.4);
    CHECK(acc <= 0.7);
  }

  TEST_CASE("fitting rejects empty tables and bad chain indices") {
    CHECK_THROWS_AS(fit_puf_chain({}, 0, 100, 1), ArgumentError);
    const auto crps = puf::collect_crps(puf::generate_device(4, 0.0), 10, 1);
    CHECK_THROWS_AS(fit_puf_chain(crps, 128, 100, 1), ArgumentError);
  }
}
