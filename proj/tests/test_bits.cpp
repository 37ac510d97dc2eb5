#include "doctest.h"

#include <vector>

#include "ldacs/bits.hpp"
#include "ldacs/errors.hpp"
#include "ldacs/hash.hpp"

using namespace ldacs;

TEST_SUITE("bits") {
  TEST_CASE("challenge bit 0 is the most significant bit") {
    const Challenge c(0x80000001U);
    CHECK(c.bit(0) == 1);
    CHECK(c.bit(1) == 0);
    CHECK(c.bit(31) == 1);
    CHECK(c.to_hex() == "80000001");
    CHECK(Challenge::from_hex("80000001") == c);
  }

  TEST_CASE("challenge from_bits requires exactly 32 bits") {
    std::vector<std::uint8_t> bits(32, 0);
    bits[0] = 1;
    CHECK(Challenge::from_bits(bits).value() == 0x80000000U);
    bits.pop_back();
    CHECK_THROWS_AS(Challenge::from_bits(bits), EncodingError);
    CHECK_THROWS_AS(Challenge::from_hex("1234"), EncodingError);
  }

  TEST_CASE("response bits, flips and hex") {
    Response r;
    r.set_bit(0, 1);
    r.set_bit(127, 1);
    CHECK(r.to_hex() == "80000000000000000000000000000001");
    CHECK(Response::from_hex(r.to_hex()) == r);
    Response s = r;
    s.flip_bit(5);
    CHECK(hamming_distance(r, s) == 1);
    CHECK_THROWS_AS(Response::from_bits(std::vector<std::uint8_t>(127, 0)), EncodingError);
    CHECK_THROWS_AS(Response::from_hex("zz"), EncodingError);
  }

  TEST_CASE("24-bit identifiers encode as three big-endian bytes") {
    const IcaoAddress a(0x0A0B0C);
    const auto b = a.to_bytes();
    CHECK(b[0] == 0x0A);
    CHECK(b[2] == 0x0C);
    CHECK(IcaoAddress::from_bytes(b) == a);
    CHECK(id24_to_hex(0x00ABCD) == "00abcd");
    CHECK(id24_from_hex("00abcd") == 0x00ABCDU);
  }

  TEST_CASE("sha256 of the empty string") {
    CHECK(to_hex(sha256(Bytes{})) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }
}
