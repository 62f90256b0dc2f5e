#include <doctest.h>

#include <algorithm>
#include <random>

#include "marge/beacon_protocol.h"
#include "marge/error.h"
#include "oracles.h"

using namespace marge;
using namespace marge::beacon;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::BadRequest;
}

BeaconFrame random_frame(std::mt19937_64& rng) {
  BeaconFrame f;
  for (auto& b : f.id.uuid) b = static_cast<std::uint8_t>(rng());
  f.id.major = static_cast<std::uint16_t>(rng());
  f.id.minor = static_cast<std::uint16_t>(rng());
  f.measured_power = static_cast<std::int8_t>(-static_cast<int>(rng() % 128));
  return f;
}

}  // namespace

TEST_CASE("known vector: zero uuid, major 1, minor 2, power -59") {
  const std::uint8_t zero[16] = {};
  const auto expected = oracle::encode_frame(zero, 1, 2, -59);
  // Frozen oracle output.
  const std::vector<std::uint8_t> frozen{0x4C, 0x00, 0x02, 0x15, 0, 0, 0, 0, 0, 0, 0,
                                         0,    0,    0,    0,    0, 0, 0, 0, 0, 0x00,
                                         0x01, 0x00, 0x02, 0xC5};
  CHECK(expected == frozen);

  const auto frame = parse_advertisement(expected);
  CHECK(frame.id.uuid == Uuid{});
  CHECK(frame.id.major == 1);
  CHECK(frame.id.minor == 2);
  CHECK(frame.measured_power == -59);

  BeaconFrame f;
  f.id.major = 1;
  f.id.minor = 2;
  const auto bytes = encode_advertisement(f);
  CHECK(std::equal(bytes.begin(), bytes.end(), expected.begin(), expected.end()));
}

TEST_CASE("encode matches the oracle for zero uuid, major 0, minor 0") {
  const std::uint8_t zero[16] = {};
  const auto expected = oracle::encode_frame(zero, 0, 0, -59);
  const auto bytes = encode_advertisement(BeaconFrame{});
  CHECK(std::vector<std::uint8_t>(bytes.begin(), bytes.end()) == expected);
}

TEST_CASE("encode matches the oracle on random frames") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto f = random_frame(rng);
    std::uint8_t uuid[16];
    std::copy(f.id.uuid.begin(), f.id.uuid.end(), uuid);
    const auto expected = oracle::encode_frame(uuid, f.id.major, f.id.minor, f.measured_power);
    const auto bytes = encode_advertisement(f);
    REQUIRE(std::vector<std::uint8_t>(bytes.begin(), bytes.end()) == expected);
  }
}

TEST_CASE("round trip over randomized frames") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const auto f = random_frame(rng);
    REQUIRE(parse_advertisement(encode_advertisement(f)) == f);
  }
}

TEST_CASE("kind comes from the deployment map") {
  BeaconFrame f;
  f.id.minor = 9;
  KindMap kinds{{f.id, BeaconKind::sticker}};
  CHECK(parse_advertisement(encode_advertisement(f), kinds).kind == BeaconKind::sticker);
  CHECK(parse_advertisement(encode_advertisement(f)).kind == BeaconKind::proximity);
}

TEST_CASE("frames differing only in minor differ only in the minor bytes") {
  BeaconFrame a;
  a.id.uuid = uuid_from_hex("b9407f30-f5f8-466e-aff9-25556b57fe6d");
  a.id.major = 20;
  a.id.minor = 1;
  BeaconFrame b = a;
  b.id.minor = 0x0102;
  const auto ea = encode_advertisement(a);
  const auto eb = encode_advertisement(b);
  for (std::size_t i = 0; i < kFrameSize; ++i) {
    if (i == 22 || i == 23) continue;
    CHECK(ea[i] == eb[i]);
  }
  CHECK(ea[22] != eb[22]);
}

TEST_CASE("malformed frames are rejected") {
  const auto good = encode_advertisement(BeaconFrame{});
  auto corrupt = [&](std::size_t at, std::uint8_t value) {
    auto bytes = good;
    bytes[at] = value;
    return code_of([&] { parse_advertisement(bytes); });
  };
  CHECK(corrupt(2, 0x03) == ErrorCode::MalformedFrame);  // beacon type
  CHECK(corrupt(3, 0x14) == ErrorCode::MalformedFrame);  // length marker
  CHECK(corrupt(0, 0x4D) == ErrorCode::MalformedFrame);  // manufacturer
  CHECK(corrupt(1, 0x01) == ErrorCode::MalformedFrame);
  CHECK(corrupt(24, 0x05) == ErrorCode::MalformedFrame);  // power +5 dBm

  std::vector<std::uint8_t> shorter(good.begin(), good.end() - 1);
  CHECK(code_of([&] { parse_advertisement(shorter); }) == ErrorCode::MalformedFrame);
  std::vector<std::uint8_t> longer(good.begin(), good.end());
  longer.push_back(0);
  CHECK(code_of([&] { parse_advertisement(longer); }) == ErrorCode::MalformedFrame);
  CHECK(code_of([&] { parse_advertisement({}); }) == ErrorCode::MalformedFrame);
}

TEST_CASE("power at the range limits") {
  BeaconFrame f;
  f.measured_power = -127;
  CHECK(parse_advertisement(encode_advertisement(f)).measured_power == -127);
  f.measured_power = 0;
  CHECK(parse_advertisement(encode_advertisement(f)).measured_power == 0);
  f.measured_power = -128;
  CHECK(code_of([&] { encode_advertisement(f); }) == ErrorCode::InvalidEvent);
  f.measured_power = 4;
  CHECK(code_of([&] { encode_advertisement(f); }) == ErrorCode::InvalidEvent);
}

TEST_CASE("arbitrary bytes yield a frame or MalformedFrame") {
  std::mt19937_64 rng(3);
  const auto good = encode_advertisement(BeaconFrame{});
  int parsed = 0;
  for (int i = 0; i < 20000; ++i) {
    std::vector<std::uint8_t> bytes;
    if (i % 2 == 0) {
      bytes.resize(rng() % 40);
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    } else {
      // Valid prefix with random mutations keeps the parser's deeper paths busy.
      bytes.assign(good.begin(), good.end());
      bytes[rng() % bytes.size()] = static_cast<std::uint8_t>(rng());
    }
    try {
      parse_advertisement(bytes);
      ++parsed;
    } catch (const Error& e) {
      REQUIRE(e.code() == ErrorCode::MalformedFrame);
    }
  }
  CHECK(parsed > 0);
}

TEST_CASE("distance estimate") {
  CHECK(estimate_distance(-59, -59, 2.0) == doctest::Approx(1.0));
  CHECK(estimate_distance(-70, -70, 3.7) == doctest::Approx(1.0));
  CHECK(estimate_distance(-79, -59, 2.0) == doctest::Approx(10.0));
  CHECK(estimate_distance(-99, -59, 2.0) == doctest::Approx(100.0));
  CHECK(estimate_distance(-79, -59) == doctest::Approx(10.0));
  CHECK(code_of([] { estimate_distance(-70, -59, 0.0); }) == ErrorCode::InvalidExponent);
  CHECK(code_of([] { estimate_distance(-70, -59, -2.0); }) == ErrorCode::InvalidExponent);

  for (double n : {1.5, 2.0, 3.0}) {
    for (int rssi = -126; rssi <= 0; ++rssi) {
      REQUIRE(estimate_distance(rssi - 1, -59, n) > estimate_distance(rssi, -59, n));
    }
  }
}

TEST_CASE("zones") {
  CHECK(classify_proximity(0.5).zone == Zone::immediate);
  CHECK(classify_proximity(1.0).zone == Zone::immediate);
  CHECK(classify_proximity(5.0).zone == Zone::near);
  CHECK(classify_proximity(7.0).zone == Zone::near);
  CHECK(classify_proximity(30.0).zone == Zone::far);
  CHECK(classify_proximity(31.0).zone == Zone::out_of_range);
  CHECK(classify_proximity(31.0).distance_m == 31.0);

  Zone prev = Zone::immediate;
  for (double d = 0.0; d < 60.0; d += 0.05) {
    const auto z = classify_proximity(d).zone;
    REQUIRE(static_cast<int>(z) >= static_cast<int>(prev));
    REQUIRE((z == Zone::out_of_range) == (d > 30.0));
    prev = z;
  }
}

TEST_CASE("uuid text form") {
  const auto u = uuid_from_hex("B9407F30-F5F8-466E-AFF9-25556B57FE6D");
  CHECK(uuid_to_hex(u) == "b9407f30f5f8466eaff925556b57fe6d");
  CHECK(uuid_from_hex(uuid_to_hex(u)) == u);
  CHECK(code_of([] { uuid_from_hex("xyz"); }) == ErrorCode::InvalidEvent);
  CHECK(code_of([] { uuid_from_hex("b9407f30f5f8466eaff925556b57fe6"); }) ==
        ErrorCode::InvalidEvent);
}
