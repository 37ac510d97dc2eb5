#include <benchmark/benchmark.h>

#include "ldacs/adversary.hpp"
#include "ldacs/handshake.hpp"
#include "ldacs/hash.hpp"
#include "ldacs/puf_fit.hpp"

using namespace ldacs;

static void BM_Sha256Tau(benchmark::State& state) {
  std::array<std::uint8_t, 19> buf{};
  std::uint64_t i = 0;
  for (auto _ : state) {
    buf[18] = static_cast<std::uint8_t>(++i);
    benchmark::DoNotOptimize(trunc24(sha256(buf)));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Sha256Tau);

static void BM_PufEvaluate(benchmark::State& state) {
  const auto dev = puf::generate_device(1, 0.0);
  std::uint32_t c = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dev.evaluate(Challenge(c++)));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PufEvaluate);

static void BM_PredictBlock(benchmark::State& state) {
  const auto model = cma::PufModel::from_device(puf::generate_device(1, 0.0));
  std::vector<Challenge> cs;
  for (std::uint32_t x = 0; x < static_cast<std::uint32_t>(state.range(0)); ++x) cs.emplace_back(x << 16);
  for (auto _ : state) benchmark::DoNotOptimize(cma::predict_responses(model, cs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PredictBlock)->Arg(1 << 12)->Arg(1 << 16);

// One CMA-ES fitness evaluation of a full population for one chain.
static void BM_ChainFitness(benchmark::State& state) {
  const auto crps = puf::collect_crps(puf::generate_device(1, 0.0), static_cast<std::size_t>(state.range(0)), 2);
  const cma::ChainFitter fitter(crps);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(33);
  for (auto _ : state) benchmark::DoNotOptimize(fitter.training_error(0, w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ChainFitness)->Arg(5'000)->Arg(50'000);

static void BM_FitChain(benchmark::State& state) {
  const auto crps = puf::collect_crps(puf::generate_device(1, 0.0), 5'000, 2);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cma::fit_puf_chain(crps, 0, 20'000, ++seed));
}
BENCHMARK(BM_FitChain)->Unit(benchmark::kMillisecond);

static void BM_Handshake(benchmark::State& state) {
  const auto dev = puf::generate_device(1, 0.0);
  const auto reg = proto::register_aircraft(IcaoAddress(0xA00001), dev, Challenge(0x12340000));
  proto::TowerDb db;
  db.enroll(reg.tower_side);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    proto::PufReader reader(dev, 5, seed);
    benchmark::DoNotOptimize(
        proto::run_handshake(reg.aircraft_side, reader, db, proto::HandshakeSeeds::derive(++seed)).completed);
  }
}
BENCHMARK(BM_Handshake)->Unit(benchmark::kMicrosecond);

static void BM_FlipCorrection(benchmark::State& state) {
  const IcaoAddress icao(0xA00001);
  const Response truth = puf::generate_device(1, 0.0).evaluate(Challenge(7));
  Response noisy = truth;
  noisy.flip_bit(100);
  noisy.flip_bit(127);
  const Tau target = proto::derive_tau(icao, truth);
  for (auto _ : state) {
    benchmark::DoNotOptimize(attack::correct_response(icao, target, noisy.bytes(), 128, 2).found);
  }
}
BENCHMARK(BM_FlipCorrection)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
