#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "duelbench/bounds.hpp"
#include "duelbench/env.hpp"
#include "duelbench/env_io.hpp"
#include "duelbench/error.hpp"
#include "test_util.hpp"

using namespace duelbench;
using duelbench::test::throws_code;

TEST_SUITE("env") {

TEST_CASE("validate_matrix accepts a two-arm matrix and finds its winner") {
  const auto m = PreferenceMatrix::validate({{.5, .7}, {.3, .5}});
  CHECK(m.k() == 2);
  CHECK(m.condorcet_winner() == 0);
  CHECK(condorcet_winner(m) == 0);
}

TEST_CASE("validate_matrix rejects ties and broken complementarity") {
  CHECK(throws_code(ErrorCode::kNoCondorcetWinner,
                    [] { PreferenceMatrix::validate({{.5, .5}, {.5, .5}}); }));
  CHECK(throws_code(ErrorCode::kComplementarityViolation,
                    [] { PreferenceMatrix::validate({{.5, .7}, {.4, .5}}); }));
  CHECK(throws_code(ErrorCode::kComplementarityViolation,
                    [] { PreferenceMatrix::validate({{.4, .7}, {.3, .5}}); }));
  CHECK(throws_code(ErrorCode::kInvalidMatrix,
                    [] { PreferenceMatrix::validate({{.5, 1.2}, {-.2, .5}}); }));
  CHECK(throws_code(ErrorCode::kInvalidMatrix, [] { PreferenceMatrix::validate({{.5}}); }));
  CHECK(throws_code(ErrorCode::kInvalidMatrix,
                    [] { PreferenceMatrix::validate({{.5, .7}, {.3}}); }));
}

TEST_CASE("complementarity within 1e-12 is accepted and made exact") {
  const double eps = 5e-13;
  const auto m = PreferenceMatrix::validate({{.5, .7 + eps}, {.3, .5}});
  CHECK(m(0, 1) + m(1, 0) == 1.0);
  CHECK(throws_code(ErrorCode::kComplementarityViolation,
                    [] { PreferenceMatrix::validate({{.5, .7 + 1e-9}, {.3, .5}}); }));
}

TEST_CASE("condorcet_winner scans rows") {
  const auto m = PreferenceMatrix::validate({{.5, .7, .6}, {.3, .5, .8}, {.4, .2, .5}});
  CHECK(m.condorcet_winner() == 0);
  CHECK(condorcet_winner(lower_bound_matrix(4, 0, 0.1)) == 0);
  CHECK(condorcet_winner(lower_bound_matrix(4, 2, 0.1)) == 2);
}

TEST_CASE("gaps are measured against the winner row") {
  const auto g = gaps(PreferenceMatrix::validate({{.5, .7}, {.3, .5}}));
  REQUIRE(g.gaps.size() == 2);
  CHECK(g.gaps[0] == 0.0);
  CHECK(g.gaps[1] == doctest::Approx(0.2));
  CHECK(g.min_gap == doctest::Approx(0.2));

  const auto lb = gaps(lower_bound_matrix(5, 0, 0.15));
  for (std::size_t i = 1; i < 5; ++i) CHECK(lb.gaps[i] == doctest::Approx(0.15));

  CHECK(gaps(PreferenceMatrix::validate({{.5, 1}, {0, .5}})).min_gap == 0.5);
}

TEST_CASE("segment_of follows the half-open segment definition") {
  const SegmentSchedule single(10, {});
  CHECK(single.num_segments() == 1);
  CHECK(single.segment_of(7) == 0);

  const SegmentSchedule two(10, {6});
  CHECK(two.segment_of(6) == 1);
  CHECK(two.segment_of(5) == 0);
  CHECK(two.segment_of(1) == 0);
  CHECK(two.segment_of(10) == 1);
  CHECK(throws_code(ErrorCode::kStepOutOfRange, [&] { two.segment_of(0); }));
  CHECK(throws_code(ErrorCode::kStepOutOfRange, [&] { two.segment_of(11); }));
}

TEST_CASE("schedule validation") {
  CHECK(throws_code(ErrorCode::kInvalidSchedule, [] { SegmentSchedule(10, {1}); }));
  CHECK(throws_code(ErrorCode::kInvalidSchedule, [] { SegmentSchedule(10, {11}); }));
  CHECK(throws_code(ErrorCode::kInvalidSchedule, [] { SegmentSchedule(10, {5, 5}); }));
  CHECK(throws_code(ErrorCode::kInvalidSchedule, [] { SegmentSchedule(10, {6, 4}); }));
  CHECK(throws_code(ErrorCode::kInvalidSchedule, [] { SegmentSchedule(0, {}); }));
  CHECK_NOTHROW(SegmentSchedule(10, {10}));
}

TEST_CASE("evenly spaced changepoints") {
  CHECK(SegmentSchedule::evenly_spaced(100, 4).changepoints() == std::vector<Step>{26, 51, 76});
  CHECK(SegmentSchedule::evenly_spaced(10, 1).changepoints().empty());
  CHECK(SegmentSchedule::evenly_spaced(5, 5).changepoints() == std::vector<Step>{2, 3, 4, 5});
}

TEST_CASE("segment_of is monotone and the segments partition 1..T") {
  for (Step t_max : {1, 7, 100, 1013}) {
    for (std::size_t m : {1u, 2u, 3u, 7u}) {
      if (static_cast<Step>(m) > t_max) continue;
      const auto s = SegmentSchedule::evenly_spaced(t_max, m);
      Step total = 0;
      for (std::size_t i = 0; i < s.num_segments(); ++i) {
        CHECK(s.segment_length(i) >= 1);
        total += s.segment_length(i);
      }
      CHECK(total == t_max);
      std::size_t prev = 0;
      for (Step t = 1; t <= t_max; ++t) {
        const auto seg = s.segment_of(t);
        CHECK(seg >= prev);
        CHECK(seg <= prev + 1);
        CHECK(s.segment_begin(seg) <= t);
        CHECK(t < s.segment_end(seg));
        prev = seg;
      }
    }
  }
}

TEST_CASE("sample_duel: degenerate probabilities and range checks") {
  const auto sure = PreferenceMatrix::validate({{.5, 1}, {0, .5}});
  NonStationaryEnvironment env(SegmentSchedule(100, {}), {sure}, 3);
  for (Step t = 1; t <= 100; ++t) {
    CHECK(env.sample_duel(t, 0, 1).x);
    CHECK_FALSE(env.sample_duel(t, 1, 0).x);
  }
  CHECK(throws_code(ErrorCode::kStepOutOfRange, [&] { env.sample_duel(0, 0, 1); }));
  CHECK(throws_code(ErrorCode::kStepOutOfRange, [&] { env.sample_duel(101, 0, 1); }));
  CHECK(throws_code(ErrorCode::kArmOutOfRange, [&] { env.sample_duel(1, 0, 2); }));
}

TEST_CASE("sample_duel: empirical frequency concentrates") {
  const auto m = PreferenceMatrix::validate({{.5, .7}, {.3, .5}});
  NonStationaryEnvironment env(SegmentSchedule(100000, {}), {m}, 11);
  int wins = 0;
  int self_wins = 0;
  for (Step t = 1; t <= 100000; ++t) wins += env.sample_duel(t, 0, 1).x;
  env.rewind();
  for (Step t = 1; t <= 100000; ++t) self_wins += env.sample_duel(t, 1, 1).x;
  CHECK(std::abs(wins / 1e5 - 0.7) < 0.01);
  CHECK(std::abs(self_wins / 1e5 - 0.5) < 0.01);
}

TEST_CASE("sample_duel uses the matrix of the segment containing t") {
  const auto a = PreferenceMatrix::validate({{.5, 1}, {0, .5}});
  const auto b = PreferenceMatrix::validate({{.5, 0}, {1, .5}});
  NonStationaryEnvironment env(SegmentSchedule(10, {6}), {a, b}, 5);
  for (Step t = 1; t <= 5; ++t) CHECK(env.sample_duel(t, 0, 1).x);
  for (Step t = 6; t <= 10; ++t) CHECK_FALSE(env.sample_duel(t, 0, 1).x);
}

TEST_CASE("(i,j) and 1 - (j,i) are identically distributed under matched seeds") {
  const auto m = PreferenceMatrix::validate({{.5, .7, .6}, {.3, .5, .8}, {.4, .2, .5}});
  NonStationaryEnvironment forward(SegmentSchedule(20000, {}), {m}, 99);
  NonStationaryEnvironment backward(SegmentSchedule(20000, {}), {m}, 99);
  int fwd = 0;
  int bwd = 0;
  for (Step t = 1; t <= 20000; ++t) {
    fwd += forward.sample_duel(t, 1, 2).x;
    bwd += !backward.sample_duel(t, 2, 1).x;
  }
  CHECK(std::abs(fwd / 20000.0 - 0.8) < 0.015);
  CHECK(std::abs(bwd / 20000.0 - 0.8) < 0.015);

  // Shared uniforms: u < p(i,j) and u >= p(j,i) have the same frequency.
  Rng rng = make_rng(5);
  int lhs = 0;
  int rhs = 0;
  for (int n = 0; n < 20000; ++n) {
    const double u = uniform01(rng);
    lhs += u < m(1, 2);
    rhs += u >= m(2, 1);
  }
  CHECK(std::abs(lhs - rhs) < 400);
}

TEST_CASE("reproducibility: same seed and queries give the same outcomes") {
  const auto m = PreferenceMatrix::validate({{.5, .55}, {.45, .5}});
  NonStationaryEnvironment a(SegmentSchedule(1000, {500}), {m, m}, 42);
  NonStationaryEnvironment b(SegmentSchedule(1000, {500}), {m, m}, 42);
  NonStationaryEnvironment c(SegmentSchedule(1000, {500}), {m, m}, 43);
  int differ = 0;
  for (Step t = 1; t <= 1000; ++t) {
    const auto xa = a.sample_duel(t, t % 2, 1 - t % 2).x;
    CHECK(xa == b.sample_duel(t, t % 2, 1 - t % 2).x);
    differ += xa != c.sample_duel(t, t % 2, 1 - t % 2).x;
  }
  CHECK(differ > 0);
}

TEST_CASE("environment rejects mismatched matrices") {
  const auto two = PreferenceMatrix::validate({{.5, .7}, {.3, .5}});
  const auto three = PreferenceMatrix::validate({{.5, .7, .6}, {.3, .5, .8}, {.4, .2, .5}});
  CHECK(throws_code(ErrorCode::kInvalidSchedule,
                    [&] { NonStationaryEnvironment(SegmentSchedule(10, {5}), {two}, 1); }));
  CHECK(throws_code(ErrorCode::kInvalidMatrix, [&] {
    NonStationaryEnvironment(SegmentSchedule(10, {5}), {two, three}, 1);
  }));
}

TEST_CASE("segmental changes") {
  const auto a = PreferenceMatrix::validate({{.5, .7}, {.3, .5}});
  const auto b = PreferenceMatrix::validate({{.5, .2}, {.8, .5}});
  NonStationaryEnvironment same(SegmentSchedule(10, {6}), {a, a}, 1);
  CHECK(segmental_changes(same).min_delta == 0.0);

  NonStationaryEnvironment flip(SegmentSchedule(10, {6}), {a, b}, 1);
  const auto c = segmental_changes(flip);
  REQUIRE(c.delta.size() == 1);
  CHECK(c.delta[0] == doctest::Approx(0.5));
  CHECK(c.delta_star[0] == doctest::Approx(0.5));
  CHECK(c.min_delta == doctest::Approx(0.5));
  CHECK(c.min_delta_star == doctest::Approx(0.5));

  NonStationaryEnvironment one(SegmentSchedule(10, {}), {a}, 1);
  CHECK(throws_code(ErrorCode::kSingleSegment, [&] { segmental_changes(one); }));
}

TEST_CASE("json round trip for matrices and environments") {
  const auto a = PreferenceMatrix::validate({{.5, .7, .6}, {.3, .5, .8}, {.4, .2, .5}});
  CHECK(matrix_from_json(matrix_to_json(a)) == a);

  NonStationaryEnvironment env(SegmentSchedule(20, {8, 15}), {a, a, a}, 77);
  const auto j = environment_to_json(env);
  CHECK(j.at("schedule").at("horizon") == 20);
  NonStationaryEnvironment back = environment_from_json(j);
  CHECK(back.schedule() == env.schedule());
  CHECK(back.seed() == 77);
  for (Step t = 1; t <= 20; ++t) CHECK(back.sample_duel(t, 0, 2).x == env.sample_duel(t, 0, 2).x);

  const auto dir = duelbench::test::scratch_dir("env_io");
  write_json_file(dir / "env.json", j);
  CHECK(read_json_file(dir / "env.json") == j);
  CHECK(throws_code(ErrorCode::kIoError, [&] { read_json_file(dir / "missing.json"); }));

  nlohmann::json bad = matrix_to_json(a);
  bad["k"] = 4;
  CHECK(throws_code(ErrorCode::kInvalidMatrix, [&] { matrix_from_json(bad); }));
  CHECK(throws_code(ErrorCode::kParseError, [&] { matrix_from_json({{"rows", 3}}); }));
}

}  // TEST_SUITE
