#include "duelbench/bounds.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "duelbench/detection.hpp"
#include "duelbench/error.hpp"

namespace duelbench {

double gambler_ruin_win_prob(std::int64_t a, std::int64_t b, double p) {
  if (a < 1 || b < 1) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("distances ({}, {}) must be >= 1", a, b));
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, fmt::format("p = {} outside (0, 1)", p));
  }
  const double da = static_cast<double>(a);
  const double db = static_cast<double>(b);
  if (std::abs(p - 0.5) < 1e-9) return da / (da + db);
  const double x = (1.0 - p) / p;
  // expm1/log keeps precision when x is close to 1.
  const double lx = std::log(x);
  if (lx < 0.0) return std::clamp(std::expm1(da * lx) / std::expm1((da + db) * lx), 0.0, 1.0);
  // x > 1: divide through by x^(a+b) so nothing overflows.
  const double scaled = std::exp(-db * lx) * std::expm1(-da * lx) / std::expm1(-(da + db) * lx);
  return std::clamp(scaled, 0.0, 1.0);
}

double btwr_stationary_bound(std::size_t k, double gap) {
  if (!(gap > 0.0 && gap <= 0.5)) {
    throw Error(ErrorCode::kInvalidGap, fmt::format("gap {} outside (0, 1/2]", gap));
  }
  if (k < 3) return 0.0;
  const double kk = static_cast<double>(k);
  return 20.0 * kk * std::log(kk) / (gap * gap);
}

double btwr_nonstationary_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon,
                                double gap) {
  if (!(gap > 0.0 && gap <= 0.5)) {
    throw Error(ErrorCode::kInvalidGap, fmt::format("gap {} outside (0, 1/2]", gap));
  }
  const double kk = static_cast<double>(k);
  return 21.0 * kk * static_cast<double>(num_segments) *
         std::log(kk + static_cast<double>(horizon)) / (gap * gap);
}

double false_alarm_bound(std::int64_t horizon, double threshold, std::int64_t window) {
  const double v = 2.0 * static_cast<double>(horizon) *
                   std::exp(-2.0 * threshold * threshold / static_cast<double>(window));
  return std::min(1.0, v);
}

double delay_bound(std::int64_t window, double c) {
  return std::clamp(std::exp(-static_cast<double>(window) * c * c / 2.0), 0.0, 1.0);
}

double weak_lower_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon) {
  const double mk = static_cast<double>(num_segments) * static_cast<double>(k - 1);
  const double t = static_cast<double>(horizon);
  if (k < 2 || num_segments < 1 || horizon < 1 || mk > 9.0 * t) {
    throw Error(ErrorCode::kConditionViolated,
                fmt::format("need M(K-1) <= 9T, got M(K-1) = {} and T = {}", mk, horizon));
  }
  return std::sqrt(t * mk) / 48.0;
}

double lower_bound_epsilon(std::size_t k, std::size_t num_segments, std::int64_t horizon) {
  return std::sqrt(static_cast<double>(num_segments) * static_cast<double>(k - 1) /
                   static_cast<double>(horizon)) /
         12.0;
}

PreferenceMatrix lower_bound_matrix(std::size_t k, Arm winner, double eps) {
  if (!(eps > 0.0 && eps < 0.25)) {
    throw Error(ErrorCode::kInvalidEpsilon, fmt::format("epsilon {} outside (0, 1/4)", eps));
  }
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "lower-bound family needs K >= 2");
  if (winner >= k) {
    throw Error(ErrorCode::kArmOutOfRange, fmt::format("arm {} with K = {}", winner, k));
  }
  std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.5));
  auto beats = [&](Arm i, Arm j) {
    rows[i][j] = 0.5 + eps;
    rows[j][i] = 0.5 - eps;
  };
  for (Arm j = 0; j < k; ++j) {
    if (j != winner) beats(winner, j);
  }
  if (winner != 0) {
    for (Arm j = 1; j < k; ++j) {
      if (j != winner) beats(0, j);
    }
  }
  return PreferenceMatrix::validate(rows);
}

double mdb_regret_bound(const MdbBoundInputs& in) {
  const double kk = static_cast<double>(in.k);
  return static_cast<double>(in.num_segments) * static_cast<double>(in.fill_steps) / 2.0 +
         2.0 * static_cast<double>(in.horizon) *
             (in.gamma * kk / (kk - 1.0) + in.false_alarm + in.delay) +
         in.black_box_regret;
}

double detect_regret_bound(const DetectBoundInputs& in) {
  const double m = static_cast<double>(in.num_segments);
  return m * static_cast<double>(in.fill_steps) / 2.0 +
         (1.0 - in.identification + in.false_alarm * in.identification + in.delay) * m *
             static_cast<double>(in.horizon) +
         in.black_box_regret;
}

double mdb_regret_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon,
                        double delta, double black_box_regret) {
  const MDBParams p = derive_mdb_params(k, horizon, num_segments, delta);
  MdbBoundInputs in;
  in.k = k;
  in.num_segments = num_segments;
  in.fill_steps = p.fill_steps(k);
  in.gamma = p.gamma;
  in.false_alarm = false_alarm_bound(horizon, p.b, p.w);
  in.delay = delay_bound(p.w, p.c);
  in.horizon = horizon;
  in.black_box_regret = black_box_regret;
  return mdb_regret_bound(in);
}

double detect_regret_bound(std::size_t k, std::size_t num_segments, std::int64_t horizon,
                           double delta_star, double identification, double black_box_regret) {
  const DETECTParams p = derive_detect_params(horizon, delta_star);
  DetectBoundInputs in;
  in.num_segments = num_segments;
  in.fill_steps = p.fill_steps(k);
  in.identification = identification;
  in.false_alarm = false_alarm_bound(horizon, p.b, p.w);
  in.delay = delay_bound(p.w, p.c);
  in.horizon = horizon;
  in.black_box_regret = black_box_regret;
  return detect_regret_bound(in);
}

std::vector<BoundReport> bound_table(const BoundTableInputs& in,
                                     std::vector<std::string>* skipped) {
  std::vector<BoundReport> out;
  const double t = static_cast<double>(in.horizon);
  const double kk = static_cast<double>(in.k);
  const double mm = static_cast<double>(in.num_segments);

  auto attempt = [&](const char* name, auto&& fn) {
    try {
      BoundReport r = fn();
      r.name = name;
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (skipped) skipped->push_back(fmt::format("{}: {}", name, e.what()));
    }
  };
  auto regret = [&](std::vector<std::pair<std::string, double>> inputs, double value) {
    return BoundReport{"", std::move(inputs), value, value >= t};
  };
  auto probability = [](std::vector<std::pair<std::string, double>> inputs, double value) {
    return BoundReport{"", std::move(inputs), value, false};
  };

  attempt("btwr_stationary", [&] {
    return regret({{"K", kk}, {"gap", in.gap}}, btwr_stationary_bound(in.k, in.gap));
  });
  attempt("btwr_nonstationary", [&] {
    return regret({{"K", kk}, {"M", mm}, {"T", t}, {"gap", in.gap}},
                  btwr_nonstationary_bound(in.k, in.num_segments, in.horizon, in.gap));
  });
  attempt("weak_lower_bound", [&] {
    return regret({{"K", kk}, {"M", mm}, {"T", t}},
                  weak_lower_bound(in.k, in.num_segments, in.horizon));
  });
  attempt("mdb_false_alarm", [&] {
    const auto p = derive_mdb_params(in.k, in.horizon, in.num_segments, in.delta);
    return probability({{"T", t}, {"b", p.b}, {"w", static_cast<double>(p.w)}},
                       false_alarm_bound(in.horizon, p.b, p.w));
  });
  attempt("mdb_delay", [&] {
    const auto p = derive_mdb_params(in.k, in.horizon, in.num_segments, in.delta);
    return probability({{"w", static_cast<double>(p.w)}, {"c", p.c}}, delay_bound(p.w, p.c));
  });
  attempt("mdb_regret", [&] {
    return regret({{"K", kk}, {"M", mm}, {"T", t}, {"delta", in.delta},
                   {"R_alg", in.black_box_regret}},
                  mdb_regret_bound(in.k, in.num_segments, in.horizon, in.delta,
                                   in.black_box_regret));
  });
  attempt("detect_false_alarm", [&] {
    const auto p = derive_detect_params(in.horizon, in.delta_star);
    return probability({{"T", t}, {"b", p.b}, {"w", static_cast<double>(p.w)}},
                       false_alarm_bound(in.horizon, p.b, p.w));
  });
  attempt("detect_delay", [&] {
    const auto p = derive_detect_params(in.horizon, in.delta_star);
    return probability({{"w", static_cast<double>(p.w)}, {"c", p.c}}, delay_bound(p.w, p.c));
  });
  attempt("detect_btw_identification", [&] {
    const auto tt = detect_ttilde_btw(in.k, in.horizon, in.p_min);
    return probability({{"K", kk}, {"T~", static_cast<double>(tt.ttilde)}, {"p_min", in.p_min}},
                       tt.p_bound);
  });
  attempt("detect_ws_identification", [&] {
    const auto tt = detect_ttilde_ws(in.k, in.horizon, in.p_min);
    return probability({{"K", kk},
                        {"r", static_cast<double>(tt.r)},
                        {"T~", static_cast<double>(tt.ttilde)},
                        {"p_min", in.p_min}},
                       tt.p_bound);
  });
  attempt("detect_btw_regret", [&] {
    const auto tt = detect_ttilde_btw(in.k, in.horizon, in.p_min);
    return regret({{"K", kk}, {"M", mm}, {"T", t}, {"delta*", in.delta_star},
                   {"p_T~", tt.p_bound}, {"R_alg", in.black_box_regret}},
                  detect_regret_bound(in.k, in.num_segments, in.horizon, in.delta_star,
                                      tt.p_bound, in.black_box_regret));
  });
  return out;
}

}  // namespace duelbench
