#include "duelbench/regret.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "duelbench/error.hpp"

namespace duelbench {

std::string RegretKind::name() const {
  std::string base_name = base == RegretBase::kStrong ? "strong" : "weak";
  return binary ? "binary_" + base_name : base_name;
}

std::optional<RegretKind> RegretKind::parse(std::string_view name) {
  for (const auto& kind : all()) {
    if (kind.name() == name) return kind;
  }
  return std::nullopt;
}

std::vector<RegretKind> RegretKind::all() {
  return {{RegretBase::kStrong, false},
          {RegretBase::kWeak, false},
          {RegretBase::kStrong, true},
          {RegretBase::kWeak, true}};
}

double instant_regret(RegretKind kind, const PreferenceMatrix& m, Arm i, Arm j) {
  const double gi = m.gaps()[i];
  const double gj = m.gaps()[j];
  const double value = kind.base == RegretBase::kStrong ? 0.5 * (gi + gj) : std::min(gi, gj);
  return kind.binary ? std::ceil(value) : value;
}

std::vector<Step> checkpoint_grid(Step horizon, std::size_t count) {
  std::vector<Step> grid;
  if (horizon < 1) return grid;
  const auto n = static_cast<Step>(std::max<std::size_t>(count, 1));
  for (Step q = 1; q <= n; ++q) {
    const Step t = (q * horizon) / n;
    if (t >= 1 && (grid.empty() || grid.back() != t)) grid.push_back(t);
  }
  if (grid.empty() || grid.back() != horizon) grid.push_back(horizon);
  return grid;
}

RegretTracker::RegretTracker(RegretKind kind, std::size_t num_segments, std::size_t k,
                             std::vector<Step> grid)
    : kind_(kind),
      num_segments_(num_segments),
      k_(k),
      counts_(num_segments * k * k, 0),
      grid_(std::move(grid)) {
  checkpoints_.reserve(grid_.size());
}

void RegretTracker::record(Step t, std::size_t segment, Arm i, Arm j, double value) {
  if (t <= last_t_) {
    throw Error(ErrorCode::kNonMonotoneTime,
                fmt::format("step {} recorded after step {}", t, last_t_));
  }
  while (next_grid_ < grid_.size() && grid_[next_grid_] < t) {
    checkpoints_.push_back({grid_[next_grid_++], cumulative_});
  }
  cumulative_ += value;
  ++count_mut(segment, i, j);
  ++steps_;
  last_t_ = t;
  if (next_grid_ < grid_.size() && grid_[next_grid_] == t) {
    checkpoints_.push_back({grid_[next_grid_++], cumulative_});
  }
}

bool decomposition_check(const RegretTracker& tracker, const NonStationaryEnvironment& env) {
  if (tracker.num_segments() != env.num_segments() || tracker.k() != env.k()) return false;
  double total = 0.0;
  for (std::size_t m = 0; m < tracker.num_segments(); ++m) {
    const auto& pm = env.matrices()[m];
    for (Arm i = 0; i < tracker.k(); ++i) {
      for (Arm j = 0; j < tracker.k(); ++j) {
        const auto n = tracker.count(m, i, j);
        if (n != 0) total += static_cast<double>(n) * instant_regret(tracker.kind(), pm, i, j);
      }
    }
  }
  const double scale = std::max({1.0, std::abs(total), std::abs(tracker.cumulative())});
  return std::abs(total - tracker.cumulative()) <= 1e-6 * scale;
}

}  // namespace duelbench
