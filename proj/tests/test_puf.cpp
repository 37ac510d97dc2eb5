#include "doctest.h"

#include <cmath>
#include <sstream>

#include "ldacs/crp.hpp"
#include "ldacs/errors.hpp"
#include "ldacs/puf.hpp"

using namespace ldacs;
using namespace ldacs::puf;

namespace {

// Straight from the definition, O(n^2): phi_j = prod_{k >= j} (1 - 2 c_k), phi_32 = 1.
int oracle_bit(const Eigen::MatrixXd& w, std::size_t chain, Challenge c) {
  double x = w(static_cast<Eigen::Index>(chain), 32);
  for (int j = 0; j < 32; ++j) {
    double phi = 1.0;
    for (int k = j; k < 32; ++k) phi *= 1.0 - 2.0 * c.bit(static_cast<std::size_t>(k));
    x += w(static_cast<Eigen::Index>(chain), j) * phi;
  }
  return x >= 0.0 ? 1 : 0;
}

}  // namespace

TEST_SUITE("puf") {
  TEST_CASE("noiseless evaluation matches the parity-feature oracle") {
    const auto dev = generate_device(7, 0.0);
    Rng rng(99);
    for (int n = 0; n < 200; ++n) {
      const Challenge c(rng.next_u32());
      const Response r = dev.evaluate(c);
      for (std::size_t i = 0; i < kChains; ++i) REQUIRE(r.bit(i) == oracle_bit(dev.chains(), i, c));
    }
  }

  TEST_CASE("same seed gives the same device; noiseless evaluation is repeatable") {
    const auto a = generate_device(7, 0.0);
    const auto b = generate_device(7, 0.0);
    CHECK(a.chains() == b.chains());
    const Challenge c(0xDEADBEEF);
    CHECK(a.evaluate(c) == b.evaluate(c));
    CHECK(evaluate(a, c, false, 1) == evaluate(a, c, false, 2));
    CHECK(a.chains().rows() == 128);
    CHECK(a.chains().cols() == 33);
  }

  TEST_CASE("inter-device Hamming distance is 64 +- 6 over 1000 challenges") {
    const auto a = generate_device(7, 0.0);
    const auto b = generate_device(8, 0.0);
    Rng rng(1);
    double sum = 0.0;
    for (int n = 0; n < 1000; ++n) {
      const Challenge c(rng.next_u32());
      sum += hamming_distance(a.evaluate(c), b.evaluate(c));
    }
    CHECK(std::abs(sum / 1000.0 - 64.0) <= 6.0);
  }

  TEST_CASE("single-bit challenge flips change about half the response") {
    // Flipping C_m negates phi_0..phi_m. With N(0,1) weights a bit changes
    // with probability (2/pi) atan(sqrt((m+1)/(32-m))); averaged over a
    // uniform m this is exactly 1/2, i.e. 64 bits.
    const auto dev = generate_device(7, 0.0);
    Rng rng(3);
    double sum = 0.0;
    for (int n = 0; n < 1000; ++n) {
      const Challenge c(rng.next_u32());
      const Challenge d(c.value() ^ (1U << rng.below(32)));
      sum += hamming_distance(dev.evaluate(c), dev.evaluate(d));
    }
    CHECK(sum / 1000.0 == doctest::Approx(64.0).epsilon(4.0 / 64.0));
  }

  TEST_CASE("noise produces a nonzero error rate") {
    const auto dev = generate_device(7, 0.05);
    CHECK(dev.base_ber() > 0.0);
    CHECK(generate_device(7, 0.0).base_ber() == 0.0);
    CHECK_THROWS_AS(generate_device(7, -1.0), ArgumentError);
  }

  TEST_CASE("calibrated 2% device flips about 2.56 of 128 bits per read") {
    const double sigma = calibrate_sigma_for_ber(7, 0.02);
    const auto dev = generate_device(7, sigma);
    Rng rng(11);
    double flips = 0.0;
    const int challenges = 2000, reads = 2;  // 512000 bit reads
    for (int n = 0; n < challenges; ++n) {
      const Challenge c(rng.next_u32());
      const Response clean = dev.evaluate(c);
      for (int r = 0; r < reads; ++r) flips += hamming_distance(clean, dev.evaluate_noisy(c, rng));
    }
    const double mean = flips / (challenges * reads);
    CHECK(mean == doctest::Approx(2.56).epsilon(0.10));
    CHECK(dev.base_ber() == doctest::Approx(0.02).epsilon(0.10));
  }

  TEST_CASE("calibration is monotone and rejects bad targets") {
    const double s1 = calibrate_sigma_for_ber(7, 0.01);
    const double s2 = calibrate_sigma_for_ber(7, 0.02);
    const double s5 = calibrate_sigma_for_ber(7, 0.05);
    CHECK(s1 < s2);
    CHECK(s2 < s5);
    CHECK_THROWS_AS(calibrate_sigma_for_ber(7, 0.0), ArgumentError);
    CHECK_THROWS_AS(calibrate_sigma_for_ber(7, 0.5), ArgumentError);
  }

  TEST_CASE("aging compounds the error rate by 1.19 every two years") {
    const AgingPolicy p;
    CHECK(aged_ber(0.02, 0.0, p) == 0.02);
    CHECK(aged_ber(0.02, 2.0, p) == doctest::Approx(0.0238).epsilon(1e-12));
    CHECK(aged_ber(0.02, 4.0, p) == doctest::Approx(0.028322).epsilon(1e-12));

    const auto dev = generate_device(7, calibrate_sigma_for_ber(7, 0.02));
    const auto two = age_device(age_device(dev, 2.0), 2.0);
    const auto four = age_device(dev, 4.0);
    CHECK(std::abs(two.effective_ber() - four.effective_ber()) <= 1e-12);
    CHECK(std::abs(four.effective_ber() - dev.base_ber() * 1.19 * 1.19) <= 1e-12);
    CHECK(four.chains() == dev.chains());
    CHECK(four.effective_sigma() > dev.effective_sigma());
    CHECK(age_device(dev, 0.0).effective_ber() == dev.base_ber());
    CHECK_THROWS_AS(age_device(dev, -1.0), ArgumentError);
  }

  TEST_CASE("aged noise matches the aged error rate") {
    const auto dev = age_device(generate_device(7, calibrate_sigma_for_ber(7, 0.02)), 6.0);
    const double measured = measure_ber(dev, 5, 5000, 4);
    CHECK(measured == doctest::Approx(dev.effective_ber()).epsilon(0.05));
  }

  TEST_CASE("additive aging is available and capped") {
    AgingPolicy p;
    p.mode = AgingMode::kAdditive;
    CHECK(aged_ber(0.02, 2.0, p) == doctest::Approx(0.21));
    CHECK(aged_ber(0.02, 40.0, p) == 0.5);
    AgingPolicy bad;
    bad.factor_per_period = 0.9;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
  }

  TEST_CASE("majority vote needs an odd vote count") {
    const auto dev = generate_device(7, 0.1);
    Rng rng(1);
    CHECK_THROWS_AS(dev.read_majority(Challenge(1), 4, rng), ArgumentError);
    CHECK(generate_device(7, 0.0).read_majority(Challenge(1), 5, rng) == dev.evaluate(Challenge(1)));
  }

  TEST_CASE("CRP files round-trip bit-exactly") {
    const auto dev = generate_device(3, 0.0);
    const auto crps = collect_crps(dev, 50, 4);
    std::stringstream ss;
    write_crps(ss, crps);
    CHECK(ss.str().rfind("#crp v1 clen=32 rlen=128\n", 0) == 0);
    const auto back = read_crps(ss);
    REQUIRE(back.size() == crps.size());
    for (std::size_t i = 0; i < crps.size(); ++i) {
      CHECK(back[i].challenge == crps[i].challenge);
      CHECK(back[i].response == crps[i].response);
    }
    std::stringstream bad("#crp v2\n");
    CHECK_THROWS_AS(read_crps(bad), FormatError);
    std::stringstream short_line("#crp v1 clen=32 rlen=128\n0000 00\n");
    CHECK_THROWS_AS(read_crps(short_line), FormatError);
  }
}
