#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "duelbench/policy.hpp"
#include "duelbench/rng.hpp"

namespace duelbench {

// Default confidence for the BtWR round length (delta = 1/e).
inline constexpr double kDefaultConfidence = 0.36787944117144233;
inline constexpr double kDefaultExploitBase = 1.05;

// Round target of BtWR after c consecutive incumbent wins:
//   l_c = ceil( ln(c (c + 1) e / delta) / (4 gap^2) - 1/2 ), at least 1.
// Throws InvalidGap unless gap is in (0, 1/2]; InvalidArgument for c < 1 or
// confidence outside (0, 1).
std::int64_t round_length(std::int64_t c, double gap, double confidence = kDefaultConfidence);

// Winner Stays. Scores move one point per duel from loser to winner; pair
// selection follows the incumbent/challenger preference chain of the original
// algorithm. Also tracks the round/iteration structure: iteration i of round r
// ends when a pair member's score falls to -r, and a round has K - 1 iterations.
class WinnerStays final : public DuelingPolicy {
 public:
  WinnerStays(std::size_t k, std::uint64_t seed);

  ArmPair select_pair() override;
  void observe(ArmPair pair, bool first_won) override;
  // Winner of the last completed round; nullopt before round 1 completes.
  std::optional<Arm> suspected_winner() const override { return last_round_winner_; }
  Arm leading_arm() const override;
  void reset() override;
  void reseed(std::uint64_t seed) override;
  std::size_t num_arms() const override { return k_; }
  std::string name() const override { return "ws"; }

  const std::vector<std::int64_t>& scores() const noexcept { return scores_; }
  // Current (1-based) round and iteration.
  std::int64_t round() const noexcept { return round_; }
  std::int64_t iteration() const noexcept { return iteration_; }
  std::uint64_t iterations_completed() const noexcept { return iterations_completed_; }
  std::optional<Arm> last_iteration_winner() const noexcept { return last_iteration_winner_; }

 private:
  Arm draw_argmax(std::optional<Arm> excluded);

  std::size_t k_;
  Rng rng_;
  ProtocolGuard guard_;
  std::vector<std::int64_t> scores_;
  std::optional<ArmPair> previous_;
  std::int64_t round_ = 1;
  std::int64_t iteration_ = 1;
  std::uint64_t iterations_completed_ = 0;
  std::optional<Arm> last_iteration_winner_;
  std::optional<Arm> last_round_winner_;
  std::vector<Arm> scratch_;
};

// Shared machinery of Beat the Winner and Beat the Winner Reset: an incumbent
// duels the head of a FIFO queue until one side reaches the round target; the
// loser goes to the back of the queue.
class QueueTournament : public DuelingPolicy {
 public:
  ArmPair select_pair() override;
  void observe(ArmPair pair, bool first_won) override;
  std::optional<Arm> suspected_winner() const override { return incumbent_; }
  Arm leading_arm() const override { return incumbent_; }
  void reset() override;
  void reseed(std::uint64_t seed) override;
  std::size_t num_arms() const override { return k_; }

  Arm incumbent() const noexcept { return incumbent_; }
  Arm challenger() const noexcept { return challenger_; }
  const std::deque<Arm>& queue() const noexcept { return queue_; }
  std::int64_t incumbent_wins() const noexcept { return wins_incumbent_; }
  std::int64_t challenger_wins() const noexcept { return wins_challenger_; }
  std::int64_t target() const noexcept { return target_; }
  std::uint64_t rounds_completed() const noexcept { return rounds_completed_; }

 protected:
  QueueTournament(std::size_t k, std::uint64_t seed);

  // Called once at construction/reset and after every completed round.
  virtual std::int64_t next_target() = 0;
  virtual void on_round_end(bool incumbent_won) = 0;
  virtual void reset_schedule() = 0;
  void initialize();

 private:
  void start_round();

  std::size_t k_;
  Rng rng_;
  ProtocolGuard guard_;
  Arm incumbent_ = 0;
  Arm challenger_ = 0;
  std::deque<Arm> queue_;
  std::int64_t wins_incumbent_ = 0;
  std::int64_t wins_challenger_ = 0;
  std::int64_t target_ = 1;
  std::uint64_t rounds_completed_ = 0;
};

// Beat the Winner: round r is first-to-r wins, r grows every round.
class BeatTheWinner final : public QueueTournament {
 public:
  BeatTheWinner(std::size_t k, std::uint64_t seed);
  std::string name() const override { return "btw"; }
  std::int64_t round_index() const noexcept { return r_; }

 private:
  std::int64_t next_target() override { return r_; }
  void on_round_end(bool) override { ++r_; }
  void reset_schedule() override { r_ = 1; }

  std::int64_t r_ = 1;
};

// Beat the Winner Reset: round target l_c where c counts consecutive rounds
// won by the incumbent; c returns to 1 whenever the challenger wins.
class BeatTheWinnerReset final : public QueueTournament {
 public:
  BeatTheWinnerReset(std::size_t k, double gap, std::uint64_t seed,
                     double confidence = kDefaultConfidence);
  std::string name() const override { return "btwr"; }
  std::int64_t streak() const noexcept { return c_; }

 private:
  std::int64_t next_target() override;
  void on_round_end(bool incumbent_won) override { c_ = incumbent_won ? c_ + 1 : 1; }
  void reset_schedule() override { c_ = 1; }

  double gap_;
  double confidence_;
  std::int64_t c_ = 1;
  std::vector<std::int64_t> lengths_;
};

// Winner Stays Strong: Winner Stays, and after the l-th completed iteration
// the iteration winner duels itself for ceil(beta^l) steps.
class WinnerStaysStrong final : public DuelingPolicy {
 public:
  WinnerStaysStrong(std::size_t k, std::uint64_t seed, double beta = kDefaultExploitBase);

  ArmPair select_pair() override;
  void observe(ArmPair pair, bool first_won) override;
  std::optional<Arm> suspected_winner() const override { return leading_arm(); }
  Arm leading_arm() const override;
  void reset() override;
  void reseed(std::uint64_t seed) override;
  std::size_t num_arms() const override { return inner_.num_arms(); }
  std::string name() const override { return "wss"; }

  bool exploiting() const noexcept { return exploit_remaining_ > 0; }
  std::int64_t exploit_remaining() const noexcept { return exploit_remaining_; }
  const WinnerStays& inner() const noexcept { return inner_; }

 private:
  WinnerStays inner_;
  ProtocolGuard guard_;
  double beta_;
  std::int64_t exploit_remaining_ = 0;
  Arm exploit_arm_ = 0;
};

}  // namespace duelbench
