#include "duelbench/detection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "duelbench/error.hpp"

namespace duelbench {

DetectionWindow::DetectionWindow(std::size_t capacity) : bits_(capacity, 0) {
  if (capacity < 2 || capacity % 2 != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("window length {} must be even and >= 2", capacity));
  }
}

void DetectionWindow::push(bool x) {
  const std::uint64_t w = bits_.size();
  const std::uint64_t half = w / 2;
  if (n_ >= w) older_ -= bits_[n_ % w];
  if (n_ >= half) {
    const auto moving = bits_[(n_ - half) % w];
    newer_ -= moving;
    older_ += moving;
  }
  bits_[n_ % w] = x ? 1 : 0;
  newer_ += x ? 1 : 0;
  ++n_;
}

void DetectionWindow::clear() {
  n_ = 0;
  older_ = 0;
  newer_ = 0;
}

std::vector<bool> DetectionWindow::contents() const {
  const std::uint64_t w = bits_.size();
  const std::uint64_t kept = n_ < w ? n_ : w;
  std::vector<bool> out;
  out.reserve(kept);
  for (std::uint64_t s = n_ - kept; s < n_; ++s) out.push_back(bits_[s % w] != 0);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t pair_block(std::size_t k, double gamma) {
  const double pairs = static_cast<double>(k * (k - 1)) / 2.0;
  // Guard against 6 / 0.2 landing just under 30.
  return static_cast<std::int64_t>(std::floor(pairs / gamma + 1e-9));
}

void check_probability(double p, bool allow_one) {
  if (!(p > 0.5 && (allow_one ? p <= 1.0 : p < 1.0))) {
    throw Error(ErrorCode::kInvalidProbability,
                fmt::format("p_min {} outside (1/2, 1{}", p, allow_one ? "]" : ")"));
  }
}

}  // namespace

std::int64_t MDBParams::block_length(std::size_t k) const { return pair_block(k, gamma); }

std::int64_t smallest_even_at_least(double x) {
  const auto half = static_cast<std::int64_t>(std::ceil(x / 2.0));
  return std::max<std::int64_t>(2, 2 * half);
}

MDBParams derive_mdb_params(std::size_t k, std::int64_t horizon, std::size_t num_segments,
                            double delta, MdbConstantsVariant variant) {
  if (k < 3) throw Error(ErrorCode::kInvalidArgument, "MDB constants need K >= 3");
  if (horizon < 1 || num_segments < 1) {
    throw Error(ErrorCode::kInvalidArgument, "MDB constants need T >= 1 and M >= 1");
  }
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("delta {} outside (0, 1]", delta));
  }
  const double t = static_cast<double>(horizon);
  const double m = static_cast<double>(num_segments);
  const double kk = static_cast<double>(k);

  double arg = std::sqrt(2.0 * t) * (2.0 * t + 1.0) / (std::sqrt(m) * kk);
  if (variant == MdbConstantsVariant::kDeltaScaled) arg *= delta;
  MDBParams p;
  p.log_term = std::log(arg);
  if (!(p.log_term > 0.0)) {
    throw Error(ErrorCode::kInfeasibleHorizon,
                fmt::format("log term {} <= 0 for K={}, T={}, M={}", p.log_term, k, horizon,
                            num_segments));
  }
  p.w = smallest_even_at_least(8.0 * p.log_term / (delta * delta));
  const double w = static_cast<double>(p.w);
  p.b = std::sqrt(w * p.log_term / 2.0);
  p.c = std::sqrt(2.0 * p.log_term / w);

  p.gamma_unclamped = (kk - 1.0) * std::sqrt(m * w / (8.0 * t));
  const double lo = kk * (kk - 1.0) / (2.0 * t);
  const double hi = std::min((kk - 1.0) / 2.0, 1.0);
  if (lo > hi) {
    throw Error(ErrorCode::kInfeasibleHorizon,
                fmt::format("admissible exploration range [{}, {}] is empty", lo, hi));
  }
  p.gamma = p.gamma_unclamped;
  if (p.gamma < lo || p.gamma > hi) {
    p.gamma = std::clamp(p.gamma, lo, hi);
    p.warnings.push_back(fmt::format("gamma {:.6g} clamped to {:.6g} (admissible [{:.6g}, {:.6g}])",
                                     p.gamma_unclamped, p.gamma, lo, hi));
  }
  return p;
}

DETECTParams derive_detect_params(std::int64_t horizon, double delta_star) {
  if (horizon < 2) throw Error(ErrorCode::kInvalidArgument, "DETECT constants need T >= 2");
  if (!(delta_star > 0.0 && delta_star <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("delta* {} outside (0, 1]", delta_star));
  }
  const double log_t = std::log(static_cast<double>(horizon));
  DETECTParams p;
  p.w = smallest_even_at_least(32.0 * log_t / (delta_star * delta_star));
  const double w = static_cast<double>(p.w);
  p.b = std::sqrt(2.0 * w * log_t);
  p.c = std::sqrt(8.0 * log_t / w);
  return p;
}

double btw_identification_bound(std::size_t k, std::int64_t ttilde, double p_min) {
  check_probability(p_min, true);
  const double kk = static_cast<double>(k);
  const double tt = static_cast<double>(ttilde);
  if (tt < kk * kk) {
    throw Error(ErrorCode::kTooSmallHorizon,
                fmt::format("T~ = {} below K^2 = {}", ttilde, k * k));
  }
  const double g = (2.0 * p_min - 1.0) * (2.0 * p_min - 1.0);
  const double bound = 1.0 - std::exp(-(std::sqrt(tt) - kk + 1.0) * g) / (1.0 - std::exp(-g));
  return std::clamp(bound, 0.0, 1.0);
}

TtildeBtw detect_ttilde_btw(std::size_t k, std::int64_t horizon, double p_min) {
  check_probability(p_min, true);
  if (horizon < 3) throw Error(ErrorCode::kInvalidArgument, "T~ derivation needs T >= 3");
  const double kk = static_cast<double>(k);
  const double t = static_cast<double>(horizon);
  const double g = (2.0 * p_min - 1.0) * (2.0 * p_min - 1.0);
  const double inner = std::max(0.0, std::log(t / ((1.0 - std::exp(-g)) * std::log(t))));
  const double root = inner / g + kk - 1.0;
  const double value = std::ceil(root * root);
  if (!std::isfinite(value) || value > 9.0e15) {
    throw Error(ErrorCode::kInvalidProbability,
                fmt::format("T~ overflows for p_min = {} (too close to 1/2)", p_min));
  }
  TtildeBtw out;
  out.ttilde = static_cast<std::int64_t>(value);
  out.p_bound = btw_identification_bound(k, out.ttilde, p_min);
  return out;
}

double ws_identification_bound(std::size_t k, std::int64_t r, double ttilde, double p_min) {
  check_probability(p_min, true);
  const double x = (1.0 - p_min) / p_min;
  const double kk = static_cast<double>(k);
  const double rr = static_cast<double>(r);
  const double lost = (1.0 + x / (1.0 - x)) * std::pow(x, rr);
  const double bound = 1.0 - lost - rr * rr * rr * kk * kk * kk / ttilde;
  return std::clamp(bound, 0.0, 1.0);
}

TtildeWs detect_ttilde_ws(std::size_t k, std::int64_t horizon, double p_min) {
  check_probability(p_min, true);
  if (horizon < 3) throw Error(ErrorCode::kInvalidArgument, "T~ derivation needs T >= 3");
  const double t = static_cast<double>(horizon);
  const double log_t = std::log(t);
  const double x = (1.0 - p_min) / p_min;
  TtildeWs out;
  if (x == 0.0) {
    out.r = 2;
  } else {
    const double numer = std::log(2.0 * t * (1.0 + x / (1.0 - x)) / log_t);
    const double r = std::ceil(numer / std::log(p_min / (1.0 - p_min)));
    if (!std::isfinite(r) || r > 1e6) {
      throw Error(ErrorCode::kInvalidProbability,
                  fmt::format("r overflows for p_min = {} (too close to 1/2)", p_min));
    }
    out.r = std::max<std::int64_t>(2, static_cast<std::int64_t>(r));
  }
  const double kk = static_cast<double>(k);
  const double rr = static_cast<double>(out.r);
  const double ttilde = std::ceil(rr * rr * rr * kk * kk * kk * t / log_t);
  if (ttilde > 9.0e15) {
    throw Error(ErrorCode::kInvalidProbability, "T~ overflows");
  }
  out.ttilde = static_cast<std::int64_t>(ttilde);
  out.p_bound = ws_identification_bound(k, out.r, ttilde, p_min);
  return out;
}

// ---------------------------------------------------------------------------
// MDB

MonitoredDuelingBandits::MonitoredDuelingBandits(std::unique_ptr<DuelingPolicy> black_box,
                                                 std::int64_t window, double threshold,
                                                 double gamma)
    : black_box_(std::move(black_box)), threshold_(threshold) {
  if (!black_box_) throw Error(ErrorCode::kInvalidArgument, "MDB needs a black-box policy");
  k_ = black_box_->num_arms();
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("gamma {} outside (0, 1]", gamma));
  }
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be > 0");
  block_ = pair_block(k_, gamma);
  for (Arm i = 0; i < k_; ++i) {
    for (Arm j = i + 1; j < k_; ++j) order_.push_back({i, j});
  }
  windows_.assign(order_.size(), DetectionWindow(static_cast<std::size_t>(window)));
}

ArmPair MonitoredDuelingBandits::select_pair() {
  const std::int64_t t = t_ + 1;
  const std::int64_t r = (t - tau_ - 1) % block_;
  ArmPair pair;
  if (r < static_cast<std::int64_t>(order_.size())) {
    detection_ = true;
    current_pair_ = static_cast<std::size_t>(r);
    pair = order_[current_pair_];
  } else {
    detection_ = false;
    pair = black_box_->select_pair();
  }
  guard_.on_select(pair);
  t_ = t;
  return pair;
}

void MonitoredDuelingBandits::observe(ArmPair pair, bool first_won) {
  guard_.on_observe(pair);
  if (!detection_) {
    black_box_->observe(pair, first_won);
    return;
  }
  auto& window = windows_[current_pair_];
  window.push(first_won);
  if (window.alarm(threshold_)) {
    tau_ = t_;
    alarms_.push_back(t_);
    for (auto& w : windows_) w.clear();
    black_box_->reset();
  }
}

void MonitoredDuelingBandits::reset() {
  guard_.clear();
  t_ = 0;
  tau_ = 0;
  detection_ = false;
  alarms_.clear();
  for (auto& w : windows_) w.clear();
  black_box_->reset();
}

void MonitoredDuelingBandits::reseed(std::uint64_t seed) {
  black_box_->reseed(seed);
  reset();
}

// ---------------------------------------------------------------------------
// DETECT

DetectChangepoint::DetectChangepoint(std::unique_ptr<DuelingPolicy> black_box,
                                     std::int64_t window, double threshold, std::int64_t ttilde)
    : black_box_(std::move(black_box)), threshold_(threshold), ttilde_(ttilde) {
  if (!black_box_) throw Error(ErrorCode::kInvalidArgument, "DETECT needs a black-box policy");
  k_ = black_box_->num_arms();
  if (ttilde < 1) throw Error(ErrorCode::kInvalidArgument, "T~ must be >= 1");
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be > 0");
  windows_.assign(k_ - 1, DetectionWindow(static_cast<std::size_t>(window)));
  order_.reserve(k_ - 1);
}

ArmPair DetectChangepoint::select_pair() {
  const std::int64_t t = t_ + 1;
  const std::int64_t since = t - tau_;
  ArmPair pair;
  if (since <= ttilde_) {
    phase_ = Phase::kRunning;
    delegated_ = true;
    pair = black_box_->select_pair();
  } else {
    if (since == ttilde_ + 1) {
      detect_arm_ = black_box_->suspected_winner().value_or(black_box_->leading_arm());
      for (auto& w : windows_) w.clear();
      order_.clear();
      for (Arm a = 0; a < k_; ++a) {
        if (a != detect_arm_) order_.push_back(a);
      }
    }
    phase_ = Phase::kDetecting;
    delegated_ = false;
    current_opponent_ =
        static_cast<std::size_t>((since - ttilde_ - 1) % static_cast<std::int64_t>(k_ - 1));
    pair = {detect_arm_, order_[current_opponent_]};
  }
  guard_.on_select(pair);
  t_ = t;
  return pair;
}

void DetectChangepoint::observe(ArmPair pair, bool first_won) {
  guard_.on_observe(pair);
  if (delegated_) {
    black_box_->observe(pair, first_won);
    return;
  }
  auto& window = windows_[current_opponent_];
  window.push(first_won);
  if (window.alarm(threshold_)) {
    tau_ = t_;
    alarms_.push_back(t_);
    phase_ = Phase::kRunning;
    black_box_->reset();
  }
}

std::optional<Arm> DetectChangepoint::suspected_winner() const {
  if (phase_ == Phase::kDetecting && t_ - tau_ > ttilde_) return detect_arm_;
  return black_box_->suspected_winner();
}

Arm DetectChangepoint::leading_arm() const {
  if (phase_ == Phase::kDetecting && t_ - tau_ > ttilde_) return detect_arm_;
  return black_box_->leading_arm();
}

void DetectChangepoint::reset() {
  guard_.clear();
  t_ = 0;
  tau_ = 0;
  phase_ = Phase::kRunning;
  delegated_ = true;
  alarms_.clear();
  order_.clear();
  for (auto& w : windows_) w.clear();
  black_box_->reset();
}

void DetectChangepoint::reseed(std::uint64_t seed) {
  black_box_->reseed(seed);
  reset();
}

}  // namespace duelbench
