#include <doctest.h>

#include <cmath>
#include <deque>
#include <memory>
#include <numeric>

#include "duelbench/detection.hpp"
#include "duelbench/policies.hpp"
#include "duelbench/regret.hpp"
#include "test_util.hpp"

using namespace duelbench;
using duelbench::test::throws_code;

namespace {

DetectionWindow filled(std::initializer_list<int> bits) {
  DetectionWindow w(bits.size());
  for (int b : bits) w.push(b != 0);
  return w;
}

std::unique_ptr<DuelingPolicy> btw(std::size_t k, std::uint64_t seed) {
  return std::make_unique<BeatTheWinner>(k, seed);
}

}  // namespace

TEST_SUITE("detection") {

TEST_CASE("window fill, order and eviction") {
  DetectionWindow w(4);
  w.push(true);
  CHECK(w.size() == 1);
  CHECK_FALSE(w.full());
  CHECK_FALSE(w.alarm(-1.0));

  DetectionWindow four = filled({1, 0, 0, 1});
  CHECK(four.contents() == std::vector<bool>{true, false, false, true});

  DetectionWindow six(4);
  for (int b : {1, 1, 0, 1, 0, 0}) six.push(b != 0);
  CHECK(six.contents() == std::vector<bool>{false, true, false, false});
  CHECK(six.older_sum() == 1);
  CHECK(six.newer_sum() == 0);

  CHECK(throws_code(ErrorCode::kInvalidArgument, [] { DetectionWindow(3); }));
  CHECK(throws_code(ErrorCode::kInvalidArgument, [] { DetectionWindow(0); }));
}

TEST_CASE("alarm examples") {
  CHECK(filled({1, 1, 0, 0}).alarm(1.0));
  CHECK_FALSE(filled({1, 0, 1, 0}).alarm(1.0));
  DetectionWindow partial(4);
  for (int n = 0; n < 3; ++n) partial.push(n == 0);
  CHECK_FALSE(partial.alarm(0.0));
  CHECK_FALSE(partial.alarm(-100.0));
}

TEST_CASE("incremental half sums match a brute-force window") {
  Rng rng = make_rng(5);
  for (std::size_t cap : {2u, 4u, 10u, 200u}) {
    DetectionWindow w(cap);
    std::deque<bool> oracle;
    for (int n = 0; n < 3000; ++n) {
      const bool x = bernoulli(rng, 0.4);
      w.push(x);
      oracle.push_back(x);
      if (oracle.size() > cap) oracle.pop_front();
      if (oracle.size() == cap) {
        const auto half = static_cast<std::ptrdiff_t>(cap / 2);
        const auto a = std::accumulate(oracle.begin(), oracle.begin() + half, std::int64_t{0});
        const auto b = std::accumulate(oracle.begin() + half, oracle.end(), std::int64_t{0});
        REQUIRE(w.older_sum() == a);
        REQUIRE(w.newer_sum() == b);
        CHECK(w.statistic() <= static_cast<std::int64_t>(cap / 2));
      }
      CHECK(w.contents() == std::vector<bool>(oracle.begin(), oracle.end()));
    }
    w.clear();
    CHECK(w.size() == 0);
    CHECK(w.older_sum() == 0);
    CHECK(w.newer_sum() == 0);
  }
}

TEST_CASE("MDB constants") {
  const auto p = derive_mdb_params(5, 1'000'000, 10, 0.6);
  CHECK(p.log_term == doctest::Approx(19.00).epsilon(1e-3));
  CHECK(p.w == 424);
  CHECK(p.b == doctest::Approx(63.5).epsilon(2e-3));
  CHECK(p.c == doctest::Approx(0.299).epsilon(2e-3));
  CHECK(p.gamma == doctest::Approx(0.0921).epsilon(1e-3));
  CHECK(p.warnings.empty());
  CHECK(p.block_length(5) == static_cast<std::int64_t>(std::floor(10.0 / p.gamma)));

  const auto one = derive_mdb_params(5, 1'000'000'000'000, 10, 1.0);
  CHECK(one.w == smallest_even_at_least(8.0 * one.log_term));
  CHECK(one.w % 2 == 0);
  CHECK(one.w >= 8.0 * one.log_term);
  CHECK(one.w - 2 < 8.0 * one.log_term);

  const auto clamped = derive_mdb_params(3, 10, 5, 0.1);
  CHECK(clamped.gamma == 1.0);
  CHECK(clamped.gamma_unclamped > 1.0);
  REQUIRE(clamped.warnings.size() == 1);
  CHECK(clamped.warnings[0].find("clamped") != std::string::npos);

  const auto scaled = derive_mdb_params(5, 1'000'000, 10, 0.6, MdbConstantsVariant::kDeltaScaled);
  CHECK(scaled.log_term == doctest::Approx(p.log_term + std::log(0.6)));

  CHECK(throws_code(ErrorCode::kInvalidArgument, [] { derive_mdb_params(2, 1000, 1, 0.5); }));
  CHECK(throws_code(ErrorCode::kInfeasibleHorizon, [] { derive_mdb_params(50, 1, 1, 0.5); }));
  CHECK(smallest_even_at_least(3.0) == 4);
  CHECK(smallest_even_at_least(4.0) == 4);
  CHECK(smallest_even_at_least(0.1) == 2);
}

TEST_CASE("DETECT constants") {
  const auto p = derive_detect_params(1'000'000, 0.6);
  CHECK(p.w == 1230);
  CHECK(p.b * p.b == doctest::Approx(2.0 * 1230 * std::log(1e6)).epsilon(1e-12));
  CHECK(p.c == doctest::Approx(std::sqrt(8.0 * std::log(1e6) / 1230)));
  CHECK(p.fill_steps(5) == 1230 * 4);
  const auto three = derive_detect_params(3, 1.0);
  CHECK(three.w == smallest_even_at_least(32.0 * std::log(3.0)));
  CHECK(three.w == 36);
  CHECK(throws_code(ErrorCode::kInvalidArgument, [] { derive_detect_params(1, 0.6); }));
}

TEST_CASE("T~ for BtW") {
  const auto t = detect_ttilde_btw(5, 1'000'000, 0.75);
  CHECK(std::abs(t.ttilde - 3002) <= 2);
  CHECK(t.p_bound > 0.0);
  CHECK(t.p_bound < 1.0);

  const double bound = btw_identification_bound(5, 10'000, 0.75);
  CHECK(bound >= 1.0 - 1.71e-10);
  CHECK(bound < 1.0);
  const double oracle = 1.0 - std::exp(-24.0) / (1.0 - std::exp(-0.25));
  CHECK(bound == doctest::Approx(oracle).epsilon(1e-15));

  CHECK(throws_code(ErrorCode::kTooSmallHorizon, [] { btw_identification_bound(5, 24, 0.75); }));
  bool threw = false;
  try {
    detect_ttilde_btw(5, 1'000'000, 0.5 + 1e-12);
  } catch (const Error&) {
    threw = true;
  }
  CHECK(threw);
  CHECK(throws_code(ErrorCode::kInvalidProbability, [] { detect_ttilde_btw(5, 1000, 0.5); }));
}

TEST_CASE("T~ for WS") {
  CHECK(ws_identification_bound(3, 2, 1e4, 0.75) ==
        doctest::Approx(1.0 - 1.0 / 6.0 - 0.0216).epsilon(1e-12));
  CHECK(ws_identification_bound(3, 2, 1e4, 0.75) > 0.8117);
  CHECK(ws_identification_bound(3, 2, 1e4, 1.0) == doctest::Approx(1.0 - 8.0 * 27.0 / 1e4));
  double prev = 0.0;
  for (double tt = 1e3; tt < 1e8; tt *= 3.0) {
    const double v = ws_identification_bound(4, 3, tt, 0.8);
    CHECK(v >= prev);
    CHECK(v <= 1.0);
    CHECK(v >= 0.0);
    prev = v;
  }
  const auto w = detect_ttilde_ws(3, 1'000'000, 0.75);
  CHECK(w.r >= 2);
  CHECK(w.ttilde > 0);
  CHECK(detect_ttilde_ws(3, 1'000'000, 1.0).r == 2);
}

TEST_CASE("MDB schedule: K=3, gamma=0.5 detects on half the steps") {
  MonitoredDuelingBandits mdb(btw(3, 1), 4, 1e9, 0.5);
  CHECK(mdb.block_length() == 6);
  CHECK(mdb.pair_order() == std::vector<ArmPair>{{0, 1}, {0, 2}, {1, 2}});
  Rng rng = make_rng(2);
  int detections = 0;
  for (int t = 1; t <= 60; ++t) {
    const ArmPair p = mdb.select_pair();
    const int offset = (t - 1) % 6;
    if (offset < 3) CHECK(p == mdb.pair_order()[static_cast<std::size_t>(offset)]);
    mdb.observe(p, bernoulli(rng, 0.5));
    CHECK(mdb.last_step_was_detection() == (offset < 3));
    detections += mdb.last_step_was_detection() ? 1 : 0;
  }
  CHECK(detections == 30);
  for (std::size_t i = 0; i < 3; ++i) CHECK(mdb.window(i).size() == 10);
}

TEST_CASE("MDB: flipped pair alarms within two plays after the flip") {
  MonitoredDuelingBandits mdb(btw(3, 3), 4, 1.0, 0.5);
  const int flip = 30;  // windows are full after 4 blocks = 24 steps
  int plays_after_flip = 0;
  std::int64_t second_play = 0;
  for (int t = 1; t <= 60 && mdb.alarms().empty(); ++t) {
    const ArmPair p = mdb.select_pair();
    const bool x = t > flip;
    if (x && p == ArmPair{0, 1} && (t - 1) % 6 == 0) {
      if (++plays_after_flip == 2) second_play = t;
    }
    mdb.observe(p, x);
  }
  REQUIRE_FALSE(mdb.alarms().empty());
  CHECK(second_play > 0);
  CHECK(mdb.alarms().front() <= second_play);
  CHECK(mdb.alarms().front() > flip);
  CHECK(mdb.last_reset() == mdb.alarms().front());
  for (std::size_t i = 0; i < 3; ++i) CHECK(mdb.window(i).size() == 0);
}

TEST_CASE("MDB: unreachable threshold never alarms, reset clears state") {
  MonitoredDuelingBandits mdb(btw(4, 9), 20, 11.0, 0.3);
  Rng rng = make_rng(10);
  for (int t = 0; t < 20000; ++t) {
    const ArmPair p = mdb.select_pair();
    mdb.observe(p, bernoulli(rng, 0.5 + 0.4 * std::sin(t * 0.001)));
  }
  CHECK(mdb.alarms().empty());
  CHECK(mdb.window(0).full());
  mdb.reset();
  CHECK(mdb.steps() == 0);
  CHECK(mdb.last_reset() == 0);
  for (std::size_t i = 0; i < mdb.pair_order().size(); ++i) CHECK(mdb.window(i).size() == 0);
  CHECK(throws_code(ErrorCode::kProtocolViolation, [&] { mdb.observe({0, 1}, true); }));
}

TEST_CASE("DETECT phase boundary") {
  const std::int64_t ttilde = 7;
  DetectChangepoint det(btw(4, 12), 4, 1e9, ttilde);
  BeatTheWinner twin(4, 12);
  Rng rng = make_rng(13);
  for (std::int64_t t = 1; t <= ttilde; ++t) {
    const ArmPair p = det.select_pair();
    CHECK(p == twin.select_pair());
    const bool x = bernoulli(rng, 0.5);
    det.observe(p, x);
    twin.observe(p, x);
    CHECK(det.phase() == DetectChangepoint::Phase::kRunning);
  }
  const ArmPair first = det.select_pair();
  CHECK(det.phase() == DetectChangepoint::Phase::kDetecting);
  CHECK(det.detection_arm() == twin.incumbent());
  std::vector<Arm> expected;
  for (Arm a = 0; a < 4; ++a)
    if (a != twin.incumbent()) expected.push_back(a);
  CHECK(det.opponent_order() == expected);
  CHECK(first == ArmPair{twin.incumbent(), expected[0]});
  det.observe(first, true);
  for (std::size_t n = 1; n < 9; ++n) {
    const ArmPair p = det.select_pair();
    CHECK(p == ArmPair{twin.incumbent(), expected[n % 3]});
    det.observe(p, true);
  }
}

TEST_CASE("DETECT with two arms plays the same pair every detection step") {
  DetectChangepoint det(btw(2, 4), 2, 1e9, 4);
  Rng rng = make_rng(14);
  for (int t = 1; t <= 50; ++t) {
    const ArmPair p = det.select_pair();
    if (t > 4) {
      CHECK(p.first == det.detection_arm());
      CHECK(p.second == 1 - det.detection_arm());
    }
    det.observe(p, bernoulli(rng, 0.5));
  }
  CHECK(det.opponent_order().size() == 1);
}

TEST_CASE("DETECT: frozen winner that is the CW costs no binary weak regret") {
  // Arm 0 beats everyone with probability 1.
  const auto m = PreferenceMatrix::validate({{.5, 1, 1}, {0, .5, .7}, {0, .3, .5}});
  NonStationaryEnvironment env(SegmentSchedule(3000, {}), {m}, 6);
  DetectChangepoint det(btw(3, 15), 6, 5.0, 200);
  for (Step t = 1; t <= 3000; ++t) {
    const ArmPair p = det.select_pair();
    if (det.phase() == DetectChangepoint::Phase::kDetecting) {
      CHECK(det.detection_arm() == 0);
      CHECK(instant_regret(RegretKind{RegretBase::kWeak, true}, m, p.first, p.second) == 0.0);
    }
    det.observe(p, env.sample_duel(t, p.first, p.second).x);
  }
  CHECK(det.alarms().empty());
}

TEST_CASE("DETECT alarm returns to the running phase") {
  DetectChangepoint det(btw(3, 16), 4, 1.0, 10);
  for (int t = 1; t <= 200 && det.alarms().empty(); ++t) {
    const ArmPair p = det.select_pair();
    det.observe(p, t > 40);
  }
  REQUIRE_FALSE(det.alarms().empty());
  CHECK(det.last_reset() == det.alarms().front());
  CHECK(det.phase() == DetectChangepoint::Phase::kRunning);
}

}  // TEST_SUITE
