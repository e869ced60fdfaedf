#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "duelbench/policy.hpp"

namespace duelbench {

// What a policy may know about the problem it is deployed on.
struct PolicyContext {
  std::size_t k = 0;
  Step horizon = 0;
  std::size_t num_segments = 1;
  double gap = 0.1;           // Delta, used by btwr
  double change = 0.6;        // delta / delta*, used by mdb and detect
  std::uint64_t seed = 0;
};

// Running-phase length used by detect:<bb> when `ttilde` is not given.
// The closed-form T~ exceeds T at every horizon of interest, so the default is
// a tenth of the mean segment length, at least K^2.
std::int64_t default_detect_ttilde(std::size_t k, Step horizon, std::size_t num_segments);

// Names: btw | btwr | ws | wss | mdb:<inner> | detect:<inner>, where <inner>
// is one of the four stationary names. Recognised parameters:
//   btwr:    gap (default ctx.gap), confidence (default 1/e)
//   wss:     beta (default 1.05)
//   mdb:     delta (default ctx.change), w, b, gamma, variant ("plain"|"delta_scaled")
//   detect:  delta_star (default ctx.change), w, b, ttilde
// Explicit w/b/gamma override the derived constants. Inner policies read the
// same bag. Throws UnknownAlgorithm for anything else.
std::unique_ptr<DuelingPolicy> make_policy(std::string_view name, const nlohmann::json& params,
                                           const PolicyContext& ctx,
                                           std::vector<std::string>* warnings = nullptr);

bool is_known_algorithm(std::string_view name);

}  // namespace duelbench
