#include "duelbench/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "duelbench/error.hpp"

namespace duelbench {

PreferenceMatrix PreferenceMatrix::validate(const std::vector<std::vector<double>>& rows) {
  const std::size_t k = rows.size();
  if (k < 2) {
    throw Error(ErrorCode::kInvalidMatrix, fmt::format("need at least 2 arms, got {}", k));
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (rows[i].size() != k) {
      throw Error(ErrorCode::kInvalidMatrix,
                  fmt::format("row {} has {} entries, expected {}", i, rows[i].size(), k));
    }
    for (std::size_t j = 0; j < k; ++j) {
      const double v = rows[i][j];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kInvalidMatrix,
                    fmt::format("entry ({}, {}) = {} outside [0, 1]", i, j, v));
      }
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      if (std::abs(rows[i][j] + rows[j][i] - 1.0) > kComplementarityTolerance) {
        throw Error(ErrorCode::kComplementarityViolation,
                    fmt::format("p({0},{1}) + p({1},{0}) = {2}", i, j, rows[i][j] + rows[j][i]));
      }
    }
  }

  PreferenceMatrix m;
  m.k_ = k;
  m.p_.assign(k * k, 0.5);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      m.p_[i * k + j] = rows[i][j];
      m.p_[j * k + i] = 1.0 - rows[i][j];
    }
  }

  bool found = false;
  for (std::size_t i = 0; i < k && !found; ++i) {
    bool dominates = true;
    for (std::size_t j = 0; j < k && dominates; ++j) {
      if (j != i && !(m(i, j) > 0.5)) dominates = false;
    }
    if (dominates) {
      m.winner_ = i;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::kNoCondorcetWinner, "no arm beats every other arm");

  m.gaps_.assign(k, 0.0);
  m.min_gap_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    if (i == m.winner_) continue;
    m.gaps_[i] = m(m.winner_, i) - 0.5;
    m.min_gap_ = std::min(m.min_gap_, m.gaps_[i]);
  }
  return m;
}

std::vector<std::vector<double>> PreferenceMatrix::rows() const {
  std::vector<std::vector<double>> out(k_, std::vector<double>(k_));
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) out[i][j] = (*this)(i, j);
  }
  return out;
}

GapReport gaps(const PreferenceMatrix& m) {
  return {std::vector<double>(m.gaps().begin(), m.gaps().end()), m.min_gap()};
}

SegmentSchedule::SegmentSchedule(Step horizon, std::vector<Step> changepoints)
    : horizon_(horizon), changepoints_(std::move(changepoints)) {
  if (horizon_ < 1) {
    throw Error(ErrorCode::kInvalidSchedule, fmt::format("horizon {} < 1", horizon_));
  }
  Step prev = 1;
  for (Step nu : changepoints_) {
    if (nu <= prev || nu > horizon_) {
      throw Error(ErrorCode::kInvalidSchedule,
                  fmt::format("changepoint {} must be in ({}, {}]", nu, prev, horizon_));
    }
    prev = nu;
  }
}

SegmentSchedule SegmentSchedule::evenly_spaced(Step horizon, std::size_t num_segments) {
  if (num_segments < 1 || static_cast<Step>(num_segments) > horizon) {
    throw Error(ErrorCode::kInvalidSchedule,
                fmt::format("cannot split horizon {} into {} segments", horizon, num_segments));
  }
  std::vector<Step> nus;
  const auto m_total = static_cast<Step>(num_segments);
  for (Step m = 1; m < m_total; ++m) nus.push_back(1 + (m * horizon) / m_total);
  return SegmentSchedule(horizon, std::move(nus));
}

Step SegmentSchedule::segment_begin(std::size_t m) const {
  return m == 0 ? 1 : changepoints_.at(m - 1);
}

Step SegmentSchedule::segment_end(std::size_t m) const {
  return m == changepoints_.size() ? horizon_ + 1 : changepoints_.at(m);
}

std::size_t SegmentSchedule::segment_of(Step t) const {
  if (t < 1 || t > horizon_) {
    throw Error(ErrorCode::kStepOutOfRange, fmt::format("step {} outside [1, {}]", t, horizon_));
  }
  return static_cast<std::size_t>(
      std::upper_bound(changepoints_.begin(), changepoints_.end(), t) - changepoints_.begin());
}

NonStationaryEnvironment::NonStationaryEnvironment(SegmentSchedule schedule,
                                                   std::vector<PreferenceMatrix> matrices,
                                                   std::uint64_t seed)
    : schedule_(std::move(schedule)),
      matrices_(std::move(matrices)),
      seed_(seed),
      rng_(make_rng(seed)) {
  if (matrices_.size() != schedule_.num_segments()) {
    throw Error(ErrorCode::kInvalidSchedule,
                fmt::format("{} matrices for {} segments", matrices_.size(),
                            schedule_.num_segments()));
  }
  for (const auto& m : matrices_) {
    if (m.k() != matrices_.front().k()) {
      throw Error(ErrorCode::kInvalidMatrix, "all segment matrices must share K");
    }
  }
}

DuelOutcome NonStationaryEnvironment::sample_duel(Step t, Arm i, Arm j) {
  const auto& m = matrix_at(t);
  if (i >= m.k() || j >= m.k()) {
    throw Error(ErrorCode::kArmOutOfRange, fmt::format("pair ({}, {}) with K = {}", i, j, m.k()));
  }
  return {t, i, j, bernoulli(rng_, m(i, j))};
}

double NonStationaryEnvironment::min_gap() const {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& m : matrices_) g = std::min(g, m.min_gap());
  return g;
}

SegmentalChanges segmental_changes(const NonStationaryEnvironment& env) {
  const auto& ms = env.matrices();
  if (ms.size() < 2) throw Error(ErrorCode::kSingleSegment, "segmental changes need M >= 2");
  const std::size_t k = env.k();
  SegmentalChanges out;
  for (std::size_t m = 0; m + 1 < ms.size(); ++m) {
    double d = 0.0;
    double d_star = 0.0;
    const Arm w = ms[m].condorcet_winner();
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        d = std::max(d, std::abs(ms[m + 1](i, j) - ms[m](i, j)));
      }
    }
    for (std::size_t j = 0; j < k; ++j) {
      d_star = std::max(d_star, std::abs(ms[m + 1](w, j) - ms[m](w, j)));
    }
    out.delta.push_back(d);
    out.delta_star.push_back(d_star);
  }
  out.min_delta = *std::min_element(out.delta.begin(), out.delta.end());
  out.min_delta_star = *std::min_element(out.delta_star.begin(), out.delta_star.end());
  return out;
}

}  // namespace duelbench
