#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "duelbench/policy.hpp"

namespace duelbench {

// Last w duel outcomes of one pair, split into an older half A and a newer
// half B. The alarm statistic is |sum(A) - sum(B)|; sums are kept incrementally.
class DetectionWindow {
 public:
  // capacity: even, >= 2.
  explicit DetectionWindow(std::size_t capacity);

  void push(bool x);
  void clear();

  std::size_t capacity() const noexcept { return bits_.size(); }
  // Pushes since construction or the last clear().
  std::uint64_t size() const noexcept { return n_; }
  bool full() const noexcept { return n_ >= bits_.size(); }

  std::int64_t older_sum() const noexcept { return older_; }
  std::int64_t newer_sum() const noexcept { return newer_; }
  std::int64_t statistic() const noexcept {
    return older_ > newer_ ? older_ - newer_ : newer_ - older_;
  }
  // False until the window is full; then |A - B| > threshold.
  bool alarm(double threshold) const noexcept {
    return full() && static_cast<double>(statistic()) > threshold;
  }

  // Retained bits, oldest first (at most capacity of them).
  std::vector<bool> contents() const;

 private:
  std::vector<std::uint8_t> bits_;
  std::uint64_t n_ = 0;
  std::int64_t older_ = 0;
  std::int64_t newer_ = 0;
};

// ---------------------------------------------------------------------------
// Parameter derivations

enum class MdbConstantsVariant {
  // C = ln( sqrt(2T) (2T + 1) / (sqrt(M) K) )
  kPlain,
  // Same with an extra factor delta inside the logarithm.
  kDeltaScaled,
};

struct MDBParams {
  std::int64_t w = 0;
  double b = 0.0;
  double gamma = 1.0;
  double c = 0.0;
  double log_term = 0.0;  // C
  double gamma_unclamped = 1.0;
  std::vector<std::string> warnings;

  // floor(K (K - 1) / (2 gamma)): steps per detection block.
  std::int64_t block_length(std::size_t k) const;
  // L = w * block_length.
  std::int64_t fill_steps(std::size_t k) const { return w * block_length(k); }
  // Assumption delta >= 2b/w + c.
  bool detects_change(double delta) const { return delta >= 2.0 * b / static_cast<double>(w) + c; }
};

struct DETECTParams {
  std::int64_t w = 0;
  double b = 0.0;
  double c = 0.0;
  std::int64_t ttilde = 1;

  // L' = w (K - 1).
  std::int64_t fill_steps(std::size_t k) const {
    return w * static_cast<std::int64_t>(k - 1);
  }
};

// Smallest even integer >= x (x > 0).
std::int64_t smallest_even_at_least(double x);

// w = smallest even >= 8C/delta^2, b = sqrt(wC/2), c = sqrt(2C/w),
// gamma = (K-1) sqrt(M w / (8T)) clamped into [K(K-1)/(2T), (K-1)/2] ∩ (0, 1].
// Clamping is reported through MDBParams::warnings. Throws InfeasibleHorizon
// when C <= 0 or the admissible gamma range is empty.
MDBParams derive_mdb_params(std::size_t k, std::int64_t horizon, std::size_t num_segments,
                            double delta,
                            MdbConstantsVariant variant = MdbConstantsVariant::kPlain);

// w = smallest even >= 32 ln T / delta*^2, b = sqrt(2 w ln T), c = sqrt(8 ln T / w).
// ttilde is left at 1; callers pick it (see detect_ttilde_*).
DETECTParams derive_detect_params(std::int64_t horizon, double delta_star);

struct TtildeBtw {
  std::int64_t ttilde = 0;
  double p_bound = 0.0;
};

struct TtildeWs {
  std::int64_t r = 0;
  std::int64_t ttilde = 0;
  double p_bound = 0.0;
};

// Probability lower bound that BtW names the Condorcet winner after ttilde
// steps: 1 - exp(-(sqrt(ttilde) - K + 1) g) / (1 - exp(-g)), g = (2p - 1)^2.
// Requires ttilde >= K^2 (TooSmallHorizon).
double btw_identification_bound(std::size_t k, std::int64_t ttilde, double p_min);

// T~ = ceil( (ln(T / ((1 - e^-g) ln T)) / g + K - 1)^2 ) with its bound.
TtildeBtw detect_ttilde_btw(std::size_t k, std::int64_t horizon, double p_min);

// Winner Stays counterpart: 1 - (1 + x/(1-x)) x^r - r^3 K^3 / ttilde,
// x = (1-p)/p. Clamped to [0, 1].
double ws_identification_bound(std::size_t k, std::int64_t r, double ttilde, double p_min);

// r = max{2, ceil( ln(2T (1 + x/(1-x)) / ln T) / ln(p/(1-p)) )},
// T~ = r^3 K^3 T / ln T (rounded up).
TtildeWs detect_ttilde_ws(std::size_t k, std::int64_t horizon, double p_min);

// ---------------------------------------------------------------------------
// Wrappers around a stationary black-box policy

// Monitored Dueling Bandits. Within each block of floor(K(K-1)/(2 gamma))
// steps after the last reset, the first K(K-1)/2 steps play the lexicographic
// pairs i < j and feed the outcome into that pair's window; the remaining
// steps delegate to the black-box. An alarm resets windows and black-box.
class MonitoredDuelingBandits final : public DuelingPolicy {
 public:
  MonitoredDuelingBandits(std::unique_ptr<DuelingPolicy> black_box, std::int64_t window,
                          double threshold, double gamma);

  ArmPair select_pair() override;
  void observe(ArmPair pair, bool first_won) override;
  std::optional<Arm> suspected_winner() const override { return black_box_->suspected_winner(); }
  Arm leading_arm() const override { return black_box_->leading_arm(); }
  void reset() override;
  void reseed(std::uint64_t seed) override;
  std::size_t num_arms() const override { return k_; }
  std::string name() const override { return "mdb:" + black_box_->name(); }

  std::int64_t block_length() const noexcept { return block_; }
  std::int64_t last_reset() const noexcept { return tau_; }
  std::int64_t steps() const noexcept { return t_; }
  const std::vector<std::int64_t>& alarms() const noexcept { return alarms_; }
  // Pair order O and the matching windows.
  const std::vector<ArmPair>& pair_order() const noexcept { return order_; }
  const DetectionWindow& window(std::size_t pair_index) const { return windows_.at(pair_index); }
  bool last_step_was_detection() const noexcept { return detection_; }
  const DuelingPolicy& black_box() const noexcept { return *black_box_; }

 private:
  std::unique_ptr<DuelingPolicy> black_box_;
  std::size_t k_;
  double threshold_;
  std::int64_t block_;
  std::vector<ArmPair> order_;
  std::vector<DetectionWindow> windows_;
  ProtocolGuard guard_;
  std::int64_t t_ = 0;
  std::int64_t tau_ = 0;
  bool detection_ = false;
  std::size_t current_pair_ = 0;
  std::vector<std::int64_t> alarms_;
};

// Dueling Explore-Then-Exploit Changepoint Test. Runs the black-box for ttilde
// steps after each reset, then freezes its suspected winner I and cycles
// (I, j) over the other arms in ascending order, one window per j.
class DetectChangepoint final : public DuelingPolicy {
 public:
  enum class Phase { kRunning, kDetecting };

  DetectChangepoint(std::unique_ptr<DuelingPolicy> black_box, std::int64_t window,
                    double threshold, std::int64_t ttilde);

  ArmPair select_pair() override;
  void observe(ArmPair pair, bool first_won) override;
  std::optional<Arm> suspected_winner() const override;
  Arm leading_arm() const override;
  void reset() override;
  void reseed(std::uint64_t seed) override;
  std::size_t num_arms() const override { return k_; }
  std::string name() const override { return "detect:" + black_box_->name(); }

  Phase phase() const noexcept { return phase_; }
  std::int64_t last_reset() const noexcept { return tau_; }
  std::int64_t steps() const noexcept { return t_; }
  std::int64_t ttilde() const noexcept { return ttilde_; }
  const std::vector<std::int64_t>& alarms() const noexcept { return alarms_; }
  // Frozen suspected winner of the current detection phase.
  Arm detection_arm() const noexcept { return detect_arm_; }
  const std::vector<Arm>& opponent_order() const noexcept { return order_; }
  const DetectionWindow& window(std::size_t opponent_index) const {
    return windows_.at(opponent_index);
  }
  const DuelingPolicy& black_box() const noexcept { return *black_box_; }

 private:
  std::unique_ptr<DuelingPolicy> black_box_;
  std::size_t k_;
  double threshold_;
  std::int64_t ttilde_;
  std::vector<DetectionWindow> windows_;
  std::vector<Arm> order_;
  ProtocolGuard guard_;
  std::int64_t t_ = 0;
  std::int64_t tau_ = 0;
  Phase phase_ = Phase::kRunning;
  Arm detect_arm_ = 0;
  std::size_t current_opponent_ = 0;
  bool delegated_ = true;
  std::vector<std::int64_t> alarms_;
};

}  // namespace duelbench
