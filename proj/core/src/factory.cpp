#include "duelbench/factory.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "duelbench/detection.hpp"
#include "duelbench/error.hpp"
#include "duelbench/policies.hpp"

namespace duelbench {

namespace {

template <typename T>
T param_or(const nlohmann::json& params, const char* key, T fallback) {
  if (!params.is_object() || !params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("parameter '{}': {}", key, e.what()));
  }
}

std::unique_ptr<DuelingPolicy> make_stationary(std::string_view name,
                                               const nlohmann::json& params,
                                               const PolicyContext& ctx) {
  if (name == "btw") return std::make_unique<BeatTheWinner>(ctx.k, ctx.seed);
  if (name == "ws") return std::make_unique<WinnerStays>(ctx.k, ctx.seed);
  if (name == "btwr") {
    return std::make_unique<BeatTheWinnerReset>(
        ctx.k, param_or(params, "gap", ctx.gap), ctx.seed,
        param_or(params, "confidence", kDefaultConfidence));
  }
  if (name == "wss") {
    return std::make_unique<WinnerStaysStrong>(ctx.k, ctx.seed,
                                               param_or(params, "beta", kDefaultExploitBase));
  }
  return nullptr;
}

std::pair<std::string_view, std::string_view> split_wrapper(std::string_view name) {
  const auto colon = name.find(':');
  if (colon == std::string_view::npos) return {std::string_view{}, name};
  return {name.substr(0, colon), name.substr(colon + 1)};
}

}  // namespace

std::int64_t default_detect_ttilde(std::size_t k, Step horizon, std::size_t num_segments) {
  const Step segment = horizon / static_cast<Step>(std::max<std::size_t>(1, num_segments));
  return std::max<Step>(static_cast<Step>(k * k), segment / 10);
}

bool is_known_algorithm(std::string_view name) {
  const auto [wrapper, inner] = split_wrapper(name);
  const bool stationary = inner == "btw" || inner == "btwr" || inner == "ws" || inner == "wss";
  return stationary && (wrapper.empty() || wrapper == "mdb" || wrapper == "detect");
}

std::unique_ptr<DuelingPolicy> make_policy(std::string_view name, const nlohmann::json& params,
                                           const PolicyContext& ctx,
                                           std::vector<std::string>* warnings) {
  if (!is_known_algorithm(name)) {
    throw Error(ErrorCode::kUnknownAlgorithm, fmt::format("'{}'", name));
  }
  const auto [wrapper, inner_name] = split_wrapper(name);
  auto inner = make_stationary(inner_name, params, ctx);
  if (wrapper.empty()) return inner;

  if (wrapper == "mdb") {
    const std::string variant = param_or<std::string>(params, "variant", "plain");
    if (variant != "plain" && variant != "delta_scaled") {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("unknown MDB variant '{}'", variant));
    }
    const bool overridden =
        params.is_object() && params.contains("w") && params.contains("b") &&
        params.contains("gamma");
    MDBParams p;
    if (!overridden) {
      p = derive_mdb_params(ctx.k, ctx.horizon, ctx.num_segments,
                            param_or(params, "delta", ctx.change),
                            variant == "delta_scaled" ? MdbConstantsVariant::kDeltaScaled
                                                  : MdbConstantsVariant::kPlain);
      if (warnings) {
        for (const auto& w : p.warnings) warnings->push_back(fmt::format("{}: {}", name, w));
      }
    }
    return std::make_unique<MonitoredDuelingBandits>(
        std::move(inner), param_or(params, "w", p.w), param_or(params, "b", p.b),
        param_or(params, "gamma", p.gamma));
  }

  DETECTParams p;
  if (!(params.is_object() && params.contains("w") && params.contains("b"))) {
    p = derive_detect_params(ctx.horizon, param_or(params, "delta_star", ctx.change));
  }
  return std::make_unique<DetectChangepoint>(
      std::move(inner), param_or(params, "w", p.w), param_or(params, "b", p.b),
      param_or(params, "ttilde", default_detect_ttilde(ctx.k, ctx.horizon, ctx.num_segments)));
}

}  // namespace duelbench
