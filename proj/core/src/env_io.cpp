#include "duelbench/env_io.hpp"

#include <fstream>

#include <fmt/format.h>

#include "duelbench/error.hpp"

namespace duelbench {

nlohmann::json matrix_to_json(const PreferenceMatrix& m) {
  return {{"k", m.k()}, {"rows", m.rows()}};
}

PreferenceMatrix matrix_from_json(const nlohmann::json& j) {
  try {
    const auto k = j.at("k").get<std::size_t>();
    auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    if (rows.size() != k) {
      throw Error(ErrorCode::kInvalidMatrix,
                  fmt::format("k = {} but {} rows given", k, rows.size()));
    }
    return PreferenceMatrix::validate(rows);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

nlohmann::json environment_to_json(const NonStationaryEnvironment& env) {
  nlohmann::json matrices = nlohmann::json::array();
  for (const auto& m : env.matrices()) matrices.push_back(matrix_to_json(m));
  return {{"schedule",
           {{"horizon", env.horizon()}, {"changepoints", env.schedule().changepoints()}}},
          {"matrices", std::move(matrices)},
          {"seed", env.seed()}};
}

NonStationaryEnvironment environment_from_json(const nlohmann::json& j) {
  try {
    SegmentSchedule schedule(j.at("schedule").at("horizon").get<Step>(),
                             j.at("schedule").at("changepoints").get<std::vector<Step>>());
    std::vector<PreferenceMatrix> matrices;
    for (const auto& mj : j.at("matrices")) matrices.push_back(matrix_from_json(mj));
    return NonStationaryEnvironment(std::move(schedule), std::move(matrices),
                                    j.at("seed").get<std::uint64_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

}  // namespace duelbench
