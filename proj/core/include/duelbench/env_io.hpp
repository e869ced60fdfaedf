#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "duelbench/env.hpp"

namespace duelbench {

// {"k": K, "rows": [[...], ...]}
nlohmann::json matrix_to_json(const PreferenceMatrix& m);
PreferenceMatrix matrix_from_json(const nlohmann::json& j);

// {"schedule": {"horizon": T, "changepoints": [...]}, "matrices": [...], "seed": s}
nlohmann::json environment_to_json(const NonStationaryEnvironment& env);
NonStationaryEnvironment environment_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace duelbench
