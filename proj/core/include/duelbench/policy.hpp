#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "duelbench/env.hpp"

namespace duelbench {

// Uniform driver interface: select_pair() -> environment duel -> observe().
// Implementations are single-run state machines; they own their randomness.
class DuelingPolicy {
 public:
  virtual ~DuelingPolicy() = default;

  virtual ArmPair select_pair() = 0;
  // `pair` must be the pair returned by the preceding select_pair();
  // `first_won` is true when pair.first beat pair.second.
  virtual void observe(ArmPair pair, bool first_won) = 0;

  virtual std::optional<Arm> suspected_winner() const = 0;
  // The arm the policy currently favours (its incumbent). Always defined.
  virtual Arm leading_arm() const = 0;

  // Back to the freshly constructed state; randomness keeps flowing from the
  // current stream.
  virtual void reset() = 0;
  // Replace the random stream, then reset().
  virtual void reseed(std::uint64_t seed) = 0;

  virtual std::size_t num_arms() const = 0;
  virtual std::string name() const = 0;
};

// Enforces select/observe alternation with matching pairs.
class ProtocolGuard {
 public:
  void on_select(ArmPair pair);
  void on_observe(ArmPair pair);
  void clear() noexcept { pending_.reset(); }

 private:
  std::optional<ArmPair> pending_;
};

}  // namespace duelbench
