#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "duelbench/env.hpp"

namespace duelbench {

// Probability that a walk started a steps above ruin and b steps below the
// target, moving up with probability p, reaches the target first:
// (1 - x^a) / (1 - x^(a+b)), x = (1-p)/p; a/(a+b) when |p - 1/2| < 1e-9.
double gambler_ruin_win_prob(std::int64_t a, std::int64_t b, double p);

// 20 K ln K / gap^2; zero for K < 3.
double btwr_stationary_bound(std::size_t k, double gap);
// 21 K M ln(K + T) / gap^2.
double btwr_nonstationary_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon,
                                double gap);

// min(1, 2T exp(-2 b^2 / w)).
double false_alarm_bound(std::int64_t horizon, double threshold, std::int64_t window);
// exp(-w c^2 / 2).
double delay_bound(std::int64_t window, double c);

// sqrt(T M (K-1)) / 48; ConditionViolated unless M (K-1) <= 9T.
double weak_lower_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon);

// (1/12) sqrt(M (K-1) / T).
double lower_bound_epsilon(std::size_t k, std::size_t num_segments, std::int64_t horizon);

// P_k for 0-based k. Arm k beats everyone with 1/2 + eps; for k != 0, arm 0
// also beats every arm other than k with 1/2 + eps; all other entries 1/2.
// InvalidEpsilon unless eps is in (0, 1/4).
PreferenceMatrix lower_bound_matrix(std::size_t k, Arm winner, double eps);

struct MdbBoundInputs {
  std::size_t k = 0;
  std::size_t num_segments = 1;
  std::int64_t fill_steps = 0;  // L
  double gamma = 0.0;
  double false_alarm = 0.0;     // p
  double delay = 0.0;           // q
  std::int64_t horizon = 0;
  double black_box_regret = 0.0;
};

// M L / 2 + 2T (gamma K/(K-1) + p + q) + R_alg.
double mdb_regret_bound(const MdbBoundInputs& in);

struct DetectBoundInputs {
  std::size_t num_segments = 1;
  std::int64_t fill_steps = 0;  // L'
  double identification = 1.0; // p_T~
  double false_alarm = 0.0;     // p
  double delay = 0.0;           // q
  std::int64_t horizon = 0;
  double black_box_regret = 0.0;
};

// M L' / 2 + (1 - p_T~ + p p_T~ + q) M T + R_alg.
double detect_regret_bound(const DetectBoundInputs& in);

// Convenience wrappers that derive every constant from (K, T, M, delta) the
// same way the policy factory does.
double mdb_regret_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon,
                        double delta, double black_box_regret);
double detect_regret_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon,
                           double delta_star, double identification, double black_box_regret);

struct BoundReport {
  std::string name;
  std::vector<std::pair<std::string, double>> inputs;
  double value = 0.0;
  // Regret bounds at or above T carry no information.
  bool vacuous = false;
};

struct BoundTableInputs {
  std::size_t k = 5;
  std::size_t num_segments = 10;
  std::int64_t horizon = 1'000'000;
  double gap = 0.1;
  double delta = 0.6;
  double delta_star = 0.6;
  double p_min = 0.6;
  double black_box_regret = 0.0;
};

// Every closed form that applies to the inputs. Quantities whose
// preconditions fail are skipped with a note in `skipped`.
std::vector<BoundReport> bound_table(const BoundTableInputs& in,
                                     std::vector<std::string>* skipped = nullptr);

}  // namespace duelbench
