#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "duelbench/env.hpp"
#include "duelbench/policy.hpp"
#include "duelbench/regret.hpp"

namespace duelbench {

struct AlgorithmSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

enum class GeneratorKind { kProtocol, kLowerBound };

struct ExperimentConfig {
  std::size_t k = 5;
  Step horizon = 100'000;
  std::size_t num_segments = 1;
  double delta_cap = 0.1;     // Delta: minimal gap of every segment
  double delta_change = 0.6;  // delta: size of the forced change at a changepoint
  std::vector<RegretKind> regret_kinds{RegretKind{RegretBase::kWeak, true}};
  std::vector<AlgorithmSpec> algorithms;
  std::size_t num_instances = 500;
  std::size_t num_groups = 10;
  std::uint64_t seed = 0;
  std::size_t checkpoints = 200;
  std::string output = "results";
  GeneratorKind generator = GeneratorKind::kProtocol;
  // Lower-bound generator only; (1/12) sqrt(M(K-1)/T) when absent.
  std::optional<double> epsilon;
  // Every instance replays instance 0 exactly: same matrices, same outcome
  // stream, same policy seeds.
  bool fixed_instance = false;
};

// Flat keys: K, T, M, delta_cap, delta_change, regret_kind (string or array),
// algorithms [{name, params}], num_instances, num_groups, seed, checkpoints,
// output, generator ("protocol" | "lower_bound"), epsilon, fixed_instance.
// Unknown keys are rejected (ParseError).
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

// Throws InfeasibleConfig / InvalidArgument / UnknownAlgorithm. A single
// instance forces a single group (the config is adjusted, not rejected).
void validate_config(ExperimentConfig& cfg);

// Random changing-winner instance: M evenly spaced segments; each winner row
// has one entry at exactly 1/2 + Delta and the rest uniform on [1/2 + Delta, 1];
// other pairs uniform on [0, 1]. At each changepoint a new winner k != old
// winner w takes p(k, w) := previous p(k, w) + delta.
NonStationaryEnvironment generate_instance(const ExperimentConfig& cfg, std::uint64_t seed);

// Segments of equal length T/M, segment m uses P_{k_m} with k_m uniform over
// arms 1..K-1 (0-based). IndivisibleHorizon unless M divides T.
NonStationaryEnvironment generate_lower_bound_instance(std::size_t k, std::size_t num_segments,
                                                       Step horizon, std::optional<double> eps,
                                                       std::uint64_t seed);

struct InstanceRun {
  // One tracker per requested regret kind, same order.
  std::vector<RegretTracker> trackers;
  std::vector<bool> decomposition_ok;
};

// Drives select -> sample -> record -> observe for t = 1..T. The environment
// is rewound first so every policy sees the same outcome stream.
InstanceRun run_instance(NonStationaryEnvironment& env, DuelingPolicy& policy,
                         const std::vector<RegretKind>& kinds, std::size_t checkpoints);

// Seeds used for instance `index`: the generator, the environment's outcome
// stream, and each algorithm's policy stream (keyed by name).
std::uint64_t instance_seed(const ExperimentConfig& cfg, std::size_t index);
std::uint64_t policy_seed(std::uint64_t instance_seed, const std::string& algorithm);

struct AggregateResult {
  std::string algorithm;
  RegretKind kind;
  std::vector<Step> t;
  std::vector<double> mean;
  std::vector<double> std;
  // Final cumulative regret of every group, for summaries.
  std::vector<double> final_group_means;
  std::size_t decomposition_failures = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<AggregateResult> aggregates;
  std::vector<std::string> warnings;
};

struct RunOptions {
  std::size_t parallelism = 0;  // 0 = hardware concurrency
  // Called once per completed group (group index, groups done so far).
  std::function<void(std::size_t, std::size_t)> on_group_done;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

// File name of the CSV holding (algorithm, kind): ':' becomes '_'.
std::string csv_file_name(const std::string& algorithm, RegretKind kind);

inline constexpr const char* kCsvHeader =
    "t,mean,std,algorithm,regret_kind,K,T,M,delta_cap,delta_change,instances,groups,seed";

// One CSV per (algorithm, kind) plus summary.json. Returns the written paths.
std::vector<std::filesystem::path> write_csv(const ExperimentResult& result,
                                             const std::filesystem::path& dir);

}  // namespace duelbench
