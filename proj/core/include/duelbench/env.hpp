#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "duelbench/rng.hpp"

namespace duelbench {

using Arm = std::size_t;
// Time steps are 1-based: t = 1..T.
using Step = std::int64_t;

struct ArmPair {
  Arm first = 0;
  Arm second = 0;

  friend bool operator==(const ArmPair&, const ArmPair&) = default;
};

inline constexpr double kComplementarityTolerance = 1e-12;

// K x K win-probability matrix with p(i,j) + p(j,i) = 1 and a Condorcet winner.
// Instances only come out of validate(), so every PreferenceMatrix is valid.
class PreferenceMatrix {
 public:
  // Checks shape, range, complementarity (tolerance 1e-12) and the existence
  // of a Condorcet winner. The lower triangle is rewritten as 1 - upper so the
  // complementarity invariant holds exactly afterwards.
  static PreferenceMatrix validate(const std::vector<std::vector<double>>& rows);

  std::size_t k() const noexcept { return k_; }
  double operator()(Arm i, Arm j) const noexcept { return p_[i * k_ + j]; }

  Arm condorcet_winner() const noexcept { return winner_; }
  // Delta_i = p(i*, i) - 1/2, zero for the winner.
  std::span<const double> gaps() const noexcept { return gaps_; }
  double min_gap() const noexcept { return min_gap_; }

  std::vector<std::vector<double>> rows() const;

  friend bool operator==(const PreferenceMatrix& a, const PreferenceMatrix& b) {
    return a.k_ == b.k_ && a.p_ == b.p_;
  }

 private:
  PreferenceMatrix() = default;

  std::size_t k_ = 0;
  std::vector<double> p_;
  Arm winner_ = 0;
  std::vector<double> gaps_;
  double min_gap_ = 0.0;
};

inline Arm condorcet_winner(const PreferenceMatrix& m) { return m.condorcet_winner(); }

struct GapReport {
  std::vector<double> gaps;
  double min_gap = 0.0;
};

GapReport gaps(const PreferenceMatrix& m);

// Changepoints nu_1 < ... < nu_{M-1}; segment m (0-based here) covers
// [nu_m, nu_{m+1}) with nu_0 = 1 and nu_M = T + 1.
class SegmentSchedule {
 public:
  SegmentSchedule(Step horizon, std::vector<Step> changepoints);

  // nu_m = 1 + floor(m T / M).
  static SegmentSchedule evenly_spaced(Step horizon, std::size_t num_segments);

  Step horizon() const noexcept { return horizon_; }
  std::size_t num_segments() const noexcept { return changepoints_.size() + 1; }
  const std::vector<Step>& changepoints() const noexcept { return changepoints_; }

  Step segment_begin(std::size_t m) const;
  // One past the last step of segment m.
  Step segment_end(std::size_t m) const;
  Step segment_length(std::size_t m) const { return segment_end(m) - segment_begin(m); }

  // 0-based index of the segment containing t; throws StepOutOfRange.
  std::size_t segment_of(Step t) const;

  friend bool operator==(const SegmentSchedule&, const SegmentSchedule&) = default;

 private:
  Step horizon_;
  std::vector<Step> changepoints_;
};

struct DuelOutcome {
  Step t = 0;
  Arm i = 0;
  Arm j = 0;
  // true when arm i won.
  bool x = false;
};

class NonStationaryEnvironment {
 public:
  NonStationaryEnvironment(SegmentSchedule schedule, std::vector<PreferenceMatrix> matrices,
                           std::uint64_t seed);

  const SegmentSchedule& schedule() const noexcept { return schedule_; }
  const std::vector<PreferenceMatrix>& matrices() const noexcept { return matrices_; }
  std::size_t k() const noexcept { return matrices_.front().k(); }
  Step horizon() const noexcept { return schedule_.horizon(); }
  std::size_t num_segments() const noexcept { return schedule_.num_segments(); }
  std::uint64_t seed() const noexcept { return seed_; }

  const PreferenceMatrix& matrix_at(Step t) const { return matrices_[schedule_.segment_of(t)]; }

  // Bernoulli(p^(m)_{ij}) for the segment m containing t. Consumes exactly one
  // draw from the environment's own stream. i == j resolves with probability 1/2.
  DuelOutcome sample_duel(Step t, Arm i, Arm j);

  // Restarts the outcome stream from the construction seed.
  void rewind() { rng_ = make_rng(seed_); }

  // Minimal Delta over all segments.
  double min_gap() const;

 private:
  SegmentSchedule schedule_;
  std::vector<PreferenceMatrix> matrices_;
  std::uint64_t seed_;
  Rng rng_;
};

struct SegmentalChanges {
  // Indexed by changepoint: entry m compares segment m with segment m + 1.
  std::vector<double> delta;
  std::vector<double> delta_star;
  double min_delta = 0.0;
  double min_delta_star = 0.0;
};

// Throws SingleSegment when M = 1.
SegmentalChanges segmental_changes(const NonStationaryEnvironment& env);

}  // namespace duelbench
