#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "duelbench/bounds.hpp"
#include "duelbench/detection.hpp"
#include "test_util.hpp"

using namespace duelbench;
using duelbench::test::throws_code;

namespace {

// Absorption probability of the walk on {0..a+b} started at a, found by
// iterating the first-step equations to convergence.
double ruin_oracle(int a, int b, double p) {
  const int n = a + b;
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  v.back() = 1.0;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (int s = 1; s < n; ++s) {
      const auto i = static_cast<std::size_t>(s);
      const double next = p * v[i + 1] + (1.0 - p) * v[i - 1];
      change = std::max(change, std::abs(next - v[i]));
      v[i] = next;
    }
    if (change < 1e-15) break;
  }
  return v[static_cast<std::size_t>(a)];
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("gambler's ruin examples") {
  CHECK(gambler_ruin_win_prob(1, 1, 0.75) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(gambler_ruin_win_prob(2, 1, 2.0 / 3.0) == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
  CHECK(gambler_ruin_win_prob(3, 5, 0.5) == doctest::Approx(3.0 / 8.0).epsilon(1e-12));
  CHECK(throws_code(ErrorCode::kInvalidArgument, [] { gambler_ruin_win_prob(0, 1, 0.6); }));
  CHECK(throws_code(ErrorCode::kInvalidProbability, [] { gambler_ruin_win_prob(1, 1, 1.0); }));
  CHECK(throws_code(ErrorCode::kInvalidProbability, [] { gambler_ruin_win_prob(1, 1, 0.0); }));
}

TEST_CASE("gambler's ruin against the first-step equations") {
  for (int a : {1, 2, 5, 9}) {
    for (int b : {1, 3, 7}) {
      for (double p : {0.2, 0.45, 0.5, 0.5 + 1e-10, 0.55, 0.9}) {
        const double closed = gambler_ruin_win_prob(a, b, p);
        CHECK(closed == doctest::Approx(ruin_oracle(a, b, p)).epsilon(1e-9));
        // Swapping the roles of the two sides gives the complementary event.
        CHECK(closed + gambler_ruin_win_prob(b, a, 1.0 - p) == doctest::Approx(1.0));
      }
    }
  }
  // Continuity across the symmetric branch.
  CHECK(gambler_ruin_win_prob(4, 6, 0.5 + 2e-9) ==
        doctest::Approx(gambler_ruin_win_prob(4, 6, 0.5)).epsilon(1e-6));
  // Large exponents stay finite.
  CHECK(gambler_ruin_win_prob(2000, 2000, 0.9) == doctest::Approx(1.0));
  CHECK(gambler_ruin_win_prob(2000, 2000, 0.1) >= 0.0);
}

TEST_CASE("BtWR bounds") {
  CHECK(btwr_stationary_bound(5, 0.2) == doctest::Approx(4023.6).epsilon(1e-4));
  CHECK(btwr_stationary_bound(3, 0.5) == doctest::Approx(263.7).epsilon(1e-3));
  CHECK(btwr_stationary_bound(2, 0.1) == 0.0);
  CHECK(btwr_nonstationary_bound(10, 10, 1'000'000, 0.1) == doctest::Approx(2.90e6).epsilon(2e-3));
  CHECK(btwr_nonstationary_bound(10, 10, 1'000'000, 0.1) ==
        doctest::Approx(21.0 * 100.0 * std::log(10.0 + 1e6) / 0.01));
  CHECK(throws_code(ErrorCode::kInvalidGap, [] { btwr_stationary_bound(5, 0.0); }));
}

TEST_CASE("false alarm and delay") {
  for (std::int64_t T : {10, 1000, 1'000'000}) {
    const std::int64_t w = 100;
    const double b = std::sqrt(2.0 * w * std::log(static_cast<double>(T)));
    CHECK(false_alarm_bound(T, b, w) ==
          doctest::Approx(2.0 * std::pow(static_cast<double>(T), -3.0)).epsilon(1e-9));
  }
  CHECK(delay_bound(424, 0.0) == 1.0);
  CHECK(false_alarm_bound(1, 20.0, 200) == doctest::Approx(0.0366).epsilon(1e-3));
  CHECK(false_alarm_bound(1'000'000, 20.0, 200) == 1.0);
  CHECK(delay_bound(200, 0.1) == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("weak lower bound and its epsilon") {
  CHECK(weak_lower_bound(5, 10, 1'000'000) == doctest::Approx(131.76).epsilon(1e-4));
  CHECK(weak_lower_bound(2, 1, 2304) == doctest::Approx(1.0));
  CHECK(throws_code(ErrorCode::kConditionViolated, [] { weak_lower_bound(11, 10, 10); }));
  CHECK(lower_bound_epsilon(5, 10, 1'000'000) == doctest::Approx(std::sqrt(40e-6) / 12.0));
}

TEST_CASE("lower-bound matrices") {
  const auto p1 = lower_bound_matrix(3, 0, 0.1);
  const std::vector<std::vector<double>> expected{{.5, .6, .6}, {.4, .5, .5}, {.4, .5, .5}};
  for (Arm i = 0; i < 3; ++i)
    for (Arm j = 0; j < 3; ++j) CHECK(p1(i, j) == doctest::Approx(expected[i][j]));

  const auto p2 = lower_bound_matrix(3, 1, 0.1);
  CHECK(p2.condorcet_winner() == 1);
  CHECK(p2(1, 0) == doctest::Approx(0.6));
  CHECK(p2(0, 2) == doctest::Approx(0.6));

  CHECK(lower_bound_matrix(4, 0, 0.1).condorcet_winner() == 0);
  CHECK(lower_bound_matrix(4, 2, 0.1).condorcet_winner() == 2);
  const auto eps15 = lower_bound_matrix(5, 0, 0.15);
  for (Arm j = 1; j < 5; ++j) CHECK(eps15.gaps()[j] == doctest::Approx(0.15));

  for (std::size_t k = 2; k <= 7; ++k) {
    for (Arm w = 0; w < k; ++w) {
      const auto m = lower_bound_matrix(k, w, 0.2);
      CHECK(m.condorcet_winner() == w);
      for (Arm j = 0; j < k; ++j)
        if (j != w) CHECK(m(w, j) == doctest::Approx(0.7));
    }
  }
  CHECK(throws_code(ErrorCode::kInvalidEpsilon, [] { lower_bound_matrix(3, 0, 0.25); }));
  CHECK(throws_code(ErrorCode::kInvalidEpsilon, [] { lower_bound_matrix(3, 0, 0.0); }));
  CHECK(throws_code(ErrorCode::kArmOutOfRange, [] { lower_bound_matrix(3, 3, 0.1); }));
}

TEST_CASE("MDB and DETECT regret bounds") {
  MdbBoundInputs m;
  m.k = 5;
  m.num_segments = 10;
  m.fill_steps = 5000;
  m.horizon = 1'000'000;
  CHECK(mdb_regret_bound(m) == doctest::Approx(10 * 5000 / 2.0));
  m.black_box_regret = 7.0;
  m.gamma = 0.1;
  m.false_alarm = 1e-3;
  m.delay = 2e-3;
  CHECK(mdb_regret_bound(m) ==
        doctest::Approx(25000.0 + 2e6 * (0.1 * 5.0 / 4.0 + 3e-3) + 7.0));

  DetectBoundInputs d;
  d.num_segments = 10;
  d.fill_steps = 4920;
  d.horizon = 1'000'000;
  d.black_box_regret = 12.0;
  CHECK(detect_regret_bound(d) == doctest::Approx(10 * 4920 / 2.0 + 12.0));
  d.identification = 0.9;
  d.false_alarm = 0.01;
  CHECK(detect_regret_bound(d) ==
        doctest::Approx(24600.0 + (0.1 + 0.009) * 1e7 + 12.0));
}

TEST_CASE("MDB bound grows like sqrt(T log T) per decade") {
  const double delta = 0.6;
  double prev = 0.0;
  double prev_c = 0.0;
  for (std::int64_t T : {10'000'000, 100'000'000, 1'000'000'000}) {
    const double bound = mdb_regret_bound(5, 10, T, delta, 0.0);
    const double c = derive_mdb_params(5, T, 10, delta).log_term;
    if (prev > 0.0) {
      const double predicted = std::sqrt(10.0) * std::sqrt(c / prev_c);
      CHECK(bound / prev == doctest::Approx(predicted).epsilon(0.1));
    }
    prev = bound;
    prev_c = c;
  }
}

TEST_CASE("bound table") {
  std::vector<std::string> skipped;
  const auto rows = bound_table(BoundTableInputs{}, &skipped);
  std::vector<std::string> names;
  for (const auto& r : rows) names.push_back(r.name);
  for (const char* want : {"btwr_stationary", "btwr_nonstationary", "weak_lower_bound",
                           "mdb_false_alarm", "mdb_delay", "mdb_regret", "detect_false_alarm",
                           "detect_delay", "detect_btw_identification"}) {
    CHECK(std::find(names.begin(), names.end(), want) != names.end());
  }
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.value));
    CHECK(r.value >= 0.0);
  }
  const auto lower = std::find_if(rows.begin(), rows.end(),
                                  [](const BoundReport& r) { return r.name == "weak_lower_bound"; });
  REQUIRE(lower != rows.end());
  CHECK(lower->value == doctest::Approx(131.76).epsilon(1e-4));
  CHECK_FALSE(lower->vacuous);

  BoundTableInputs tiny;
  tiny.k = 30;
  tiny.num_segments = 20;
  tiny.horizon = 50;
  skipped.clear();
  const auto few = bound_table(tiny, &skipped);
  CHECK_FALSE(skipped.empty());
  CHECK(few.size() < rows.size());
}

}  // TEST_SUITE
