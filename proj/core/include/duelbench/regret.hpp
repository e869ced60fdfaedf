#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "duelbench/env.hpp"

namespace duelbench {

enum class RegretBase { kStrong, kWeak };

struct RegretKind {
  RegretBase base = RegretBase::kWeak;
  bool binary = false;

  // "strong", "weak", "binary_strong", "binary_weak"
  std::string name() const;
  static std::optional<RegretKind> parse(std::string_view name);
  static std::vector<RegretKind> all();

  friend bool operator==(const RegretKind&, const RegretKind&) = default;
};

// Strong: (Delta_i + Delta_j) / 2. Weak: min(Delta_i, Delta_j).
// Binary variants take the ceiling, so an optimal pair still scores 0.
double instant_regret(RegretKind kind, const PreferenceMatrix& m, Arm i, Arm j);

struct Checkpoint {
  Step t = 0;
  double cumulative = 0.0;
};

// `count` points evenly spaced over [1, T]; always ends at T.
std::vector<Step> checkpoint_grid(Step horizon, std::size_t count);

class RegretTracker {
 public:
  RegretTracker(RegretKind kind, std::size_t num_segments, std::size_t k,
                std::vector<Step> checkpoint_grid);

  // Adds `value` at step t in segment m for the pair (i, j). Steps must be
  // strictly increasing (NonMonotoneTime otherwise).
  void record(Step t, std::size_t segment, Arm i, Arm j, double value);

  RegretKind kind() const noexcept { return kind_; }
  double cumulative() const noexcept { return cumulative_; }
  std::uint64_t steps() const noexcept { return steps_; }
  Step last_step() const noexcept { return last_t_; }
  const std::vector<Checkpoint>& checkpoints() const noexcept { return checkpoints_; }

  std::size_t num_segments() const noexcept { return num_segments_; }
  std::size_t k() const noexcept { return k_; }
  // N_{i,j} restricted to segment m, ordered pair as played.
  std::uint64_t count(std::size_t segment, Arm i, Arm j) const {
    return counts_[(segment * k_ + i) * k_ + j];
  }
  std::uint64_t& count_mut(std::size_t segment, Arm i, Arm j) {
    return counts_[(segment * k_ + i) * k_ + j];
  }

 private:
  RegretKind kind_;
  std::size_t num_segments_;
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
  std::vector<Step> grid_;
  std::size_t next_grid_ = 0;
  std::vector<Checkpoint> checkpoints_;
  double cumulative_ = 0.0;
  std::uint64_t steps_ = 0;
  Step last_t_ = 0;
};

// Recomputes the cumulative regret from the per-segment pair counts and
// compares it with the tracked total (relative tolerance 1e-6).
bool decomposition_check(const RegretTracker& tracker, const NonStationaryEnvironment& env);

}  // namespace duelbench
