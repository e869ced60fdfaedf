#include "duelbench/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "duelbench/error.hpp"

namespace duelbench {

void ProtocolGuard::on_select(ArmPair pair) {
  if (pending_) {
    throw Error(ErrorCode::kProtocolViolation, "select_pair called twice without observe");
  }
  pending_ = pair;
}

void ProtocolGuard::on_observe(ArmPair pair) {
  if (!pending_) throw Error(ErrorCode::kProtocolViolation, "observe without select_pair");
  if (!(*pending_ == pair)) {
    throw Error(ErrorCode::kProtocolViolation,
                fmt::format("observed ({}, {}) but selected ({}, {})", pair.first, pair.second,
                            pending_->first, pending_->second));
  }
  pending_.reset();
}

std::int64_t round_length(std::int64_t c, double gap, double confidence) {
  if (!(gap > 0.0 && gap <= 0.5)) {
    throw Error(ErrorCode::kInvalidGap, fmt::format("gap {} outside (0, 1/2]", gap));
  }
  if (c < 1) throw Error(ErrorCode::kInvalidArgument, fmt::format("streak {} < 1", c));
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("confidence {} outside (0, 1)", confidence));
  }
  const double cc = static_cast<double>(c);
  const double value =
      (std::log(cc) + std::log(cc + 1.0) + 1.0 - std::log(confidence)) / (4.0 * gap * gap) - 0.5;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(value)));
}

// ---------------------------------------------------------------------------
// Winner Stays

WinnerStays::WinnerStays(std::size_t k, std::uint64_t seed) : k_(k), rng_(make_rng(seed)) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "Winner Stays needs K >= 2");
  scratch_.reserve(k);
  reset();
}

void WinnerStays::reset() {
  guard_.clear();
  scores_.assign(k_, 0);
  previous_.reset();
  round_ = 1;
  iteration_ = 1;
  iterations_completed_ = 0;
  last_iteration_winner_.reset();
  last_round_winner_.reset();
}

void WinnerStays::reseed(std::uint64_t seed) {
  rng_ = make_rng(seed);
  reset();
}

Arm WinnerStays::draw_argmax(std::optional<Arm> excluded) {
  std::int64_t best = std::numeric_limits<std::int64_t>::min();
  scratch_.clear();
  for (Arm a = 0; a < k_; ++a) {
    if (excluded && a == *excluded) continue;
    if (scores_[a] > best) {
      best = scores_[a];
      scratch_.clear();
    }
    if (scores_[a] == best) scratch_.push_back(a);
  }
  return scratch_.size() == 1 ? scratch_.front() : scratch_[uniform_index(rng_, scratch_.size())];
}

ArmPair WinnerStays::select_pair() {
  const std::int64_t max_all = *std::max_element(scores_.begin(), scores_.end());
  Arm first;
  if (previous_ && scores_[previous_->first] == max_all) {
    first = previous_->first;
  } else if (previous_ && scores_[previous_->second] == max_all) {
    first = previous_->second;
  } else {
    first = draw_argmax(std::nullopt);
  }

  std::int64_t max_rest = std::numeric_limits<std::int64_t>::min();
  for (Arm a = 0; a < k_; ++a) {
    if (a != first) max_rest = std::max(max_rest, scores_[a]);
  }
  Arm second;
  if (previous_ && previous_->first != first && scores_[previous_->first] == max_rest) {
    second = previous_->first;
  } else if (previous_ && previous_->second != first && scores_[previous_->second] == max_rest) {
    second = previous_->second;
  } else {
    second = draw_argmax(first);
  }

  const ArmPair pair{first, second};
  guard_.on_select(pair);
  previous_ = pair;
  return pair;
}

void WinnerStays::observe(ArmPair pair, bool first_won) {
  guard_.on_observe(pair);
  const Arm winner = first_won ? pair.first : pair.second;
  const Arm loser = first_won ? pair.second : pair.first;
  ++scores_[winner];
  --scores_[loser];

  if (scores_[loser] == -round_) {
    ++iterations_completed_;
    last_iteration_winner_ = winner;
    if (++iteration_ > static_cast<std::int64_t>(k_) - 1) {
      last_round_winner_ = winner;
      ++round_;
      iteration_ = 1;
    }
  }
}

Arm WinnerStays::leading_arm() const {
  const std::int64_t max_all = *std::max_element(scores_.begin(), scores_.end());
  if (previous_ && scores_[previous_->first] == max_all) return previous_->first;
  if (previous_ && scores_[previous_->second] == max_all) return previous_->second;
  return static_cast<Arm>(std::max_element(scores_.begin(), scores_.end()) - scores_.begin());
}

// ---------------------------------------------------------------------------
// Queue tournaments (BtW / BtWR)

QueueTournament::QueueTournament(std::size_t k, std::uint64_t seed)
    : k_(k), rng_(make_rng(seed)) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "tournament policies need K >= 2");
}

void QueueTournament::initialize() {
  guard_.clear();
  reset_schedule();
  rounds_completed_ = 0;
  incumbent_ = static_cast<Arm>(uniform_index(rng_, k_));
  std::vector<Arm> others;
  others.reserve(k_ - 1);
  for (Arm a = 0; a < k_; ++a) {
    if (a != incumbent_) others.push_back(a);
  }
  std::shuffle(others.begin(), others.end(), rng_);
  queue_.assign(others.begin(), others.end());
  start_round();
}

void QueueTournament::reset() { initialize(); }

void QueueTournament::reseed(std::uint64_t seed) {
  rng_ = make_rng(seed);
  initialize();
}

void QueueTournament::start_round() {
  challenger_ = queue_.front();
  queue_.pop_front();
  wins_incumbent_ = 0;
  wins_challenger_ = 0;
  target_ = next_target();
}

ArmPair QueueTournament::select_pair() {
  const ArmPair pair{incumbent_, challenger_};
  guard_.on_select(pair);
  return pair;
}

void QueueTournament::observe(ArmPair pair, bool first_won) {
  guard_.on_observe(pair);
  if (first_won) {
    ++wins_incumbent_;
  } else {
    ++wins_challenger_;
  }
  if (wins_incumbent_ < target_ && wins_challenger_ < target_) return;

  const bool incumbent_won = wins_incumbent_ == target_;
  if (incumbent_won) {
    queue_.push_back(challenger_);
  } else {
    queue_.push_back(incumbent_);
    incumbent_ = challenger_;
  }
  ++rounds_completed_;
  on_round_end(incumbent_won);
  start_round();
}

BeatTheWinner::BeatTheWinner(std::size_t k, std::uint64_t seed) : QueueTournament(k, seed) {
  initialize();
}

BeatTheWinnerReset::BeatTheWinnerReset(std::size_t k, double gap, std::uint64_t seed,
                                       double confidence)
    : QueueTournament(k, seed), gap_(gap), confidence_(confidence) {
  round_length(1, gap_, confidence_);  // validates the tuning inputs
  initialize();
}

std::int64_t BeatTheWinnerReset::next_target() {
  while (static_cast<std::int64_t>(lengths_.size()) < c_) {
    lengths_.push_back(
        round_length(static_cast<std::int64_t>(lengths_.size()) + 1, gap_, confidence_));
  }
  return lengths_[static_cast<std::size_t>(c_ - 1)];
}

// ---------------------------------------------------------------------------
// Winner Stays Strong

namespace {

std::int64_t exploit_length(double beta, std::uint64_t completed) {
  constexpr double kCap = 1e15;
  const double v = std::pow(beta, static_cast<double>(completed));
  return static_cast<std::int64_t>(std::ceil(std::min(v, kCap)));
}

}  // namespace

WinnerStaysStrong::WinnerStaysStrong(std::size_t k, std::uint64_t seed, double beta)
    : inner_(k, seed), beta_(beta) {
  if (!(beta > 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("beta {} must exceed 1", beta));
  }
}

ArmPair WinnerStaysStrong::select_pair() {
  const ArmPair pair =
      exploit_remaining_ > 0 ? ArmPair{exploit_arm_, exploit_arm_} : inner_.select_pair();
  guard_.on_select(pair);
  return pair;
}

void WinnerStaysStrong::observe(ArmPair pair, bool first_won) {
  guard_.on_observe(pair);
  if (exploit_remaining_ > 0) {
    --exploit_remaining_;
    return;
  }
  const auto before = inner_.iterations_completed();
  inner_.observe(pair, first_won);
  if (inner_.iterations_completed() != before) {
    exploit_arm_ = *inner_.last_iteration_winner();
    exploit_remaining_ = exploit_length(beta_, inner_.iterations_completed());
  }
}

Arm WinnerStaysStrong::leading_arm() const {
  return exploit_remaining_ > 0 ? exploit_arm_ : inner_.leading_arm();
}

void WinnerStaysStrong::reset() {
  guard_.clear();
  inner_.reset();
  exploit_remaining_ = 0;
  exploit_arm_ = 0;
}

void WinnerStaysStrong::reseed(std::uint64_t seed) {
  guard_.clear();
  inner_.reseed(seed);
  exploit_remaining_ = 0;
  exploit_arm_ = 0;
}

}  // namespace duelbench
