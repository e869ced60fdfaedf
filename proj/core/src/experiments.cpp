#include "duelbench/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "duelbench/bounds.hpp"
#include "duelbench/env_io.hpp"
#include "duelbench/error.hpp"
#include "duelbench/factory.hpp"

namespace duelbench {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "K",           "T",       "M",           "delta_cap", "delta_change",
      "regret_kind", "algorithms", "num_instances", "num_groups", "seed",
      "checkpoints", "output",  "generator",   "epsilon",   "fixed_instance"};
  return keys;
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, fmt::format("config key '{}': {}", key, e.what()));
  }
}

// Accepts integers written as 1e5 in JSON (parsed as floating point).
template <typename Int>
void read_count(const json& j, const char* key, Int& into) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (v.is_number_integer() || v.is_number_unsigned()) {
    into = v.get<Int>();
    return;
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 9.0e18) {
      into = static_cast<Int>(d);
      return;
    }
  }
  throw Error(ErrorCode::kParseError, fmt::format("config key '{}' must be a non-negative integer", key));
}

RegretKind parse_kind(const std::string& s) {
  auto kind = RegretKind::parse(s);
  if (!kind) throw Error(ErrorCode::kParseError, fmt::format("unknown regret kind '{}'", s));
  return *kind;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().count(key)) {
      throw Error(ErrorCode::kParseError, fmt::format("unknown config key '{}'", key));
    }
  }
  ExperimentConfig cfg;
  read_count(j, "K", cfg.k);
  read_count(j, "T", cfg.horizon);
  read_count(j, "M", cfg.num_segments);
  read(j, "delta_cap", cfg.delta_cap);
  read(j, "delta_change", cfg.delta_change);
  if (j.contains("regret_kind")) {
    const json& rk = j.at("regret_kind");
    cfg.regret_kinds.clear();
    if (rk.is_string()) {
      cfg.regret_kinds.push_back(parse_kind(rk.get<std::string>()));
    } else if (rk.is_array()) {
      for (const auto& e : rk) {
        if (!e.is_string()) throw Error(ErrorCode::kParseError, "regret_kind entries must be strings");
        cfg.regret_kinds.push_back(parse_kind(e.get<std::string>()));
      }
    } else {
      throw Error(ErrorCode::kParseError, "regret_kind must be a string or an array");
    }
  }
  if (j.contains("algorithms")) {
    const json& algs = j.at("algorithms");
    if (!algs.is_array()) throw Error(ErrorCode::kParseError, "algorithms must be an array");
    for (const auto& a : algs) {
      AlgorithmSpec spec;
      if (a.is_string()) {
        spec.name = a.get<std::string>();
      } else if (a.is_object() && a.contains("name") && a.at("name").is_string()) {
        spec.name = a.at("name").get<std::string>();
        if (a.contains("params")) {
          if (!a.at("params").is_object()) {
            throw Error(ErrorCode::kParseError, fmt::format("params of '{}' must be an object", spec.name));
          }
          spec.params = a.at("params");
        }
      } else {
        throw Error(ErrorCode::kParseError, "algorithm entries need a string 'name'");
      }
      cfg.algorithms.push_back(std::move(spec));
    }
  }
  read_count(j, "num_instances", cfg.num_instances);
  read_count(j, "num_groups", cfg.num_groups);
  read_count(j, "seed", cfg.seed);
  read_count(j, "checkpoints", cfg.checkpoints);
  read(j, "output", cfg.output);
  if (j.contains("generator")) {
    std::string g;
    read(j, "generator", g);
    if (g == "protocol") {
      cfg.generator = GeneratorKind::kProtocol;
    } else if (g == "lower_bound") {
      cfg.generator = GeneratorKind::kLowerBound;
    } else {
      throw Error(ErrorCode::kParseError, fmt::format("unknown generator '{}'", g));
    }
  }
  if (j.contains("epsilon") && !j.at("epsilon").is_null()) {
    double eps = 0.0;
    read(j, "epsilon", eps);
    cfg.epsilon = eps;
  }
  read(j, "fixed_instance", cfg.fixed_instance);
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["K"] = cfg.k;
  j["T"] = cfg.horizon;
  j["M"] = cfg.num_segments;
  j["delta_cap"] = cfg.delta_cap;
  j["delta_change"] = cfg.delta_change;
  json kinds = json::array();
  for (const auto& k : cfg.regret_kinds) kinds.push_back(k.name());
  j["regret_kind"] = kinds;
  json algs = json::array();
  for (const auto& a : cfg.algorithms) algs.push_back({{"name", a.name}, {"params", a.params}});
  j["algorithms"] = algs;
  j["num_instances"] = cfg.num_instances;
  j["num_groups"] = cfg.num_groups;
  j["seed"] = cfg.seed;
  j["checkpoints"] = cfg.checkpoints;
  j["output"] = cfg.output;
  j["generator"] = cfg.generator == GeneratorKind::kProtocol ? "protocol" : "lower_bound";
  j["epsilon"] = cfg.epsilon ? json(*cfg.epsilon) : json(nullptr);
  j["fixed_instance"] = cfg.fixed_instance;
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path));
}

void validate_config(ExperimentConfig& cfg) {
  auto fail = [](ErrorCode code, std::string msg) { throw Error(code, std::move(msg)); };
  if (cfg.k < 2) fail(ErrorCode::kInvalidArgument, fmt::format("K = {} < 2", cfg.k));
  if (cfg.horizon < 1) fail(ErrorCode::kInvalidArgument, "T must be >= 1");
  if (cfg.num_segments < 1) fail(ErrorCode::kInvalidArgument, "M must be >= 1");
  if (static_cast<Step>(cfg.num_segments) > cfg.horizon) {
    fail(ErrorCode::kInfeasibleConfig,
         fmt::format("M = {} segments cannot fit in T = {} steps", cfg.num_segments, cfg.horizon));
  }
  if (cfg.num_instances < 1) fail(ErrorCode::kInvalidArgument, "num_instances must be >= 1");
  if (cfg.num_instances == 1) cfg.num_groups = 1;
  if (cfg.num_groups < 1 || cfg.num_instances % cfg.num_groups != 0) {
    fail(ErrorCode::kInfeasibleConfig,
         fmt::format("num_groups = {} must divide num_instances = {}", cfg.num_groups,
                     cfg.num_instances));
  }
  if (cfg.checkpoints < 1) fail(ErrorCode::kInvalidArgument, "checkpoints must be >= 1");
  if (cfg.regret_kinds.empty()) fail(ErrorCode::kInvalidArgument, "no regret kind requested");
  if (cfg.algorithms.empty()) fail(ErrorCode::kInvalidArgument, "no algorithms listed");
  std::set<std::string> seen;
  for (const auto& a : cfg.algorithms) {
    if (!is_known_algorithm(a.name)) {
      fail(ErrorCode::kUnknownAlgorithm, fmt::format("'{}'", a.name));
    }
    if (!seen.insert(a.name).second) {
      fail(ErrorCode::kInvalidArgument, fmt::format("algorithm '{}' listed twice", a.name));
    }
  }

  if (cfg.generator == GeneratorKind::kLowerBound) {
    if (cfg.horizon % static_cast<Step>(cfg.num_segments) != 0) {
      fail(ErrorCode::kIndivisibleHorizon,
           fmt::format("T = {} is not divisible by M = {}", cfg.horizon, cfg.num_segments));
    }
    const double eps = cfg.epsilon.value_or(lower_bound_epsilon(cfg.k, cfg.num_segments, cfg.horizon));
    if (!(eps > 0.0 && eps < 0.25)) {
      fail(ErrorCode::kInvalidEpsilon, fmt::format("epsilon {} outside (0, 1/4)", eps));
    }
    return;
  }

  if (!(cfg.delta_cap > 0.0 && cfg.delta_cap <= 0.5)) {
    fail(ErrorCode::kInvalidGap, fmt::format("delta_cap {} outside (0, 1/2]", cfg.delta_cap));
  }
  if (cfg.num_segments >= 2) {
    const double floor = 0.5 + cfg.delta_cap;
    if (!(cfg.delta_change >= floor - 1e-12 && cfg.delta_change <= 1.0)) {
      fail(ErrorCode::kInfeasibleConfig,
           fmt::format("generator feasibility: delta_change = {} must lie in [1/2 + delta_cap, 1] "
                       "= [{}, 1] so the new winner's entry against the old winner stays >= "
                       "1/2 + delta_cap",
                       cfg.delta_change, floor));
    }
    if (cfg.k < 3) {
      fail(ErrorCode::kInfeasibleConfig,
           "generator feasibility: K >= 3 is needed when M >= 2 (the 1/2 + delta_cap opponent "
           "must differ from the previous winner)");
    }
    if (cfg.delta_change > floor + 1e-12 && cfg.num_segments >= 3 && cfg.k < 4) {
      fail(ErrorCode::kInfeasibleConfig,
           "generator feasibility: K >= 4 is needed when delta_change > 1/2 + delta_cap and "
           "M >= 3");
    }
  }
}

// ---------------------------------------------------------------------------
// Generators

NonStationaryEnvironment generate_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  const std::size_t k = cfg.k;
  const std::size_t m_count = cfg.num_segments;
  const double low = 0.5 + cfg.delta_cap;
  const double delta = cfg.delta_change;
  const bool reserve_next = m_count >= 2 && delta > low + 1e-12;
  Rng rng = make_rng(derive_seed(seed, 0));

  std::vector<Arm> winners(m_count);
  winners[0] = static_cast<Arm>(uniform_index(rng, k));
  for (std::size_t m = 1; m < m_count; ++m) {
    const auto draw = static_cast<Arm>(uniform_index(rng, k - 1));
    winners[m] = draw >= winners[m - 1] ? draw + 1 : draw;
  }

  std::vector<PreferenceMatrix> matrices;
  matrices.reserve(m_count);
  std::vector<Arm> candidates;
  for (std::size_t m = 0; m < m_count; ++m) {
    const Arm w = winners[m];
    const std::optional<Arm> prev = m > 0 ? std::optional<Arm>(winners[m - 1]) : std::nullopt;
    const std::optional<Arm> next =
        reserve_next && m + 1 < m_count ? std::optional<Arm>(winners[m + 1]) : std::nullopt;

    std::vector<std::vector<double>> rows(k, std::vector<double>(k, 0.5));
    for (Arm i = 0; i < k; ++i) {
      for (Arm j = i + 1; j < k; ++j) {
        if (i == w || j == w) continue;
        rows[i][j] = uniform01(rng);
        rows[j][i] = 1.0 - rows[i][j];
      }
    }

    candidates.clear();
    for (Arm a = 0; a < k; ++a) {
      if (a != w && a != prev && a != next) candidates.push_back(a);
    }
    if (candidates.empty()) {
      throw Error(ErrorCode::kInfeasibleConfig,
                  fmt::format("no admissible 1/2 + delta_cap opponent in segment {}", m + 1));
    }
    const Arm exact = candidates[uniform_index(rng, candidates.size())];

    for (Arm j = 0; j < k; ++j) {
      if (j == w) continue;
      double v;
      if (j == exact) {
        v = low;
      } else if (j == prev) {
        v = std::clamp(matrices.back()(w, j) + delta, 0.0, 1.0);
      } else if (j == next) {
        v = uniform_real(rng, delta, 1.0);
      } else {
        v = uniform_real(rng, low, 1.0);
      }
      rows[w][j] = v;
      rows[j][w] = 1.0 - v;
    }
    matrices.push_back(PreferenceMatrix::validate(rows));
  }
  return NonStationaryEnvironment(SegmentSchedule::evenly_spaced(cfg.horizon, m_count),
                                  std::move(matrices), derive_seed(seed, 1));
}

NonStationaryEnvironment generate_lower_bound_instance(std::size_t k, std::size_t num_segments,
                                                       Step horizon, std::optional<double> eps,
                                                       std::uint64_t seed) {
  if (k < 2 || num_segments < 1 || horizon < 1) {
    throw Error(ErrorCode::kInvalidArgument, "lower-bound instance needs K >= 2, M >= 1, T >= 1");
  }
  if (horizon % static_cast<Step>(num_segments) != 0) {
    throw Error(ErrorCode::kIndivisibleHorizon,
                fmt::format("T = {} is not divisible by M = {}", horizon, num_segments));
  }
  const double e = eps.value_or(lower_bound_epsilon(k, num_segments, horizon));
  Rng rng = make_rng(derive_seed(seed, 0));
  std::vector<PreferenceMatrix> matrices;
  std::vector<Step> changepoints;
  const Step length = horizon / static_cast<Step>(num_segments);
  for (std::size_t m = 0; m < num_segments; ++m) {
    const Arm winner = 1 + static_cast<Arm>(uniform_index(rng, k - 1));
    matrices.push_back(lower_bound_matrix(k, winner, e));
    if (m > 0) changepoints.push_back(1 + static_cast<Step>(m) * length);
  }
  return NonStationaryEnvironment(SegmentSchedule(horizon, std::move(changepoints)),
                                  std::move(matrices), derive_seed(seed, 1));
}

// ---------------------------------------------------------------------------
// Runs

InstanceRun run_instance(NonStationaryEnvironment& env, DuelingPolicy& policy,
                         const std::vector<RegretKind>& kinds, std::size_t checkpoints) {
  env.rewind();
  const Step horizon = env.horizon();
  const auto grid = checkpoint_grid(horizon, checkpoints);
  InstanceRun run;
  run.trackers.reserve(kinds.size());
  for (const auto& kind : kinds) {
    run.trackers.emplace_back(kind, env.num_segments(), env.k(), grid);
  }

  const auto& schedule = env.schedule();
  std::size_t segment = 0;
  for (Step t = 1; t <= horizon; ++t) {
    while (t >= schedule.segment_end(segment)) ++segment;
    const PreferenceMatrix& m = env.matrices()[segment];
    const ArmPair pair = policy.select_pair();
    const DuelOutcome outcome = env.sample_duel(t, pair.first, pair.second);
    for (auto& tracker : run.trackers) {
      tracker.record(t, segment, pair.first, pair.second,
                     instant_regret(tracker.kind(), m, pair.first, pair.second));
    }
    policy.observe(pair, outcome.x);
  }
  run.decomposition_ok.reserve(kinds.size());
  for (const auto& tracker : run.trackers) {
    run.decomposition_ok.push_back(decomposition_check(tracker, env));
  }
  return run;
}

std::uint64_t instance_seed(const ExperimentConfig& cfg, std::size_t index) {
  return derive_seed(cfg.seed, cfg.fixed_instance ? 0 : index);
}

std::uint64_t policy_seed(std::uint64_t inst_seed, const std::string& algorithm) {
  return derive_seed(derive_seed(inst_seed, 2), fnv1a(algorithm));
}

namespace {

NonStationaryEnvironment make_environment(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.generator == GeneratorKind::kLowerBound) {
    return generate_lower_bound_instance(cfg.k, cfg.num_segments, cfg.horizon, cfg.epsilon, seed);
  }
  return generate_instance(cfg, seed);
}

PolicyContext context_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  PolicyContext ctx;
  ctx.k = cfg.k;
  ctx.horizon = cfg.horizon;
  ctx.num_segments = cfg.num_segments;
  ctx.gap = cfg.delta_cap;
  ctx.change = cfg.delta_change;
  ctx.seed = seed;
  return ctx;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& input, const RunOptions& options) {
  ExperimentConfig cfg = input;
  validate_config(cfg);

  ExperimentResult result;
  result.config = cfg;
  // Construct every policy once up front: surfaces parameter errors before
  // any thread starts and collects derivation warnings once.
  for (const auto& alg : cfg.algorithms) {
    make_policy(alg.name, alg.params, context_for(cfg, 0), &result.warnings);
  }

  const std::size_t n = cfg.num_instances;
  const std::size_t algs = cfg.algorithms.size();
  const std::size_t kinds = cfg.regret_kinds.size();
  const std::size_t points = checkpoint_grid(cfg.horizon, cfg.checkpoints).size();
  const std::size_t group_size = n / cfg.num_groups;

  // curves[(instance * algs + a) * kinds + r] holds the checkpoint values.
  std::vector<std::vector<double>> curves(n * algs * kinds);
  std::vector<std::uint8_t> decomposition(n * algs * kinds, 0);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::vector<std::atomic<std::size_t>> group_done(cfg.num_groups);
  std::atomic<std::size_t> groups_finished{0};
  std::mutex report_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const std::uint64_t seed = instance_seed(cfg, i);
        NonStationaryEnvironment env = make_environment(cfg, seed);
        for (std::size_t a = 0; a < algs; ++a) {
          const auto& alg = cfg.algorithms[a];
          auto policy =
              make_policy(alg.name, alg.params, context_for(cfg, policy_seed(seed, alg.name)));
          InstanceRun run = run_instance(env, *policy, cfg.regret_kinds, cfg.checkpoints);
          for (std::size_t r = 0; r < kinds; ++r) {
            const std::size_t slot = (i * algs + a) * kinds + r;
            auto& curve = curves[slot];
            curve.reserve(points);
            for (const auto& cp : run.trackers[r].checkpoints()) curve.push_back(cp.cumulative);
            decomposition[slot] = run.decomposition_ok[r] ? 1 : 0;
          }
        }
        const std::size_t g = i / group_size;
        if (group_done[g].fetch_add(1) + 1 == group_size) {
          const std::size_t finished = groups_finished.fetch_add(1) + 1;
          if (options.on_group_done) {
            std::lock_guard<std::mutex> lock(report_mutex);
            options.on_group_done(g, finished);
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(report_mutex);
        if (!failure) failure = std::current_exception();
        abort.store(true);
      }
    }
  };

  std::size_t threads = options.parallelism;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Reduction in instance order, independent of scheduling.
  const auto grid = checkpoint_grid(cfg.horizon, cfg.checkpoints);
  for (std::size_t a = 0; a < algs; ++a) {
    for (std::size_t r = 0; r < kinds; ++r) {
      AggregateResult agg;
      agg.algorithm = cfg.algorithms[a].name;
      agg.kind = cfg.regret_kinds[r];
      agg.t = grid;
      agg.mean.assign(points, 0.0);
      agg.std.assign(points, 0.0);
      std::vector<double> group_mean(cfg.num_groups * points, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t slot = (i * algs + a) * kinds + r;
        const auto& curve = curves[slot];
        const std::size_t g = i / group_size;
        for (std::size_t p = 0; p < points; ++p) {
          agg.mean[p] += curve[p];
          group_mean[g * points + p] += curve[p];
        }
        if (!decomposition[slot]) ++agg.decomposition_failures;
      }
      for (std::size_t p = 0; p < points; ++p) {
        agg.mean[p] /= static_cast<double>(n);
        // Welford over the group means: identical groups give exactly 0.
        double centre = 0.0;
        double sq = 0.0;
        for (std::size_t g = 0; g < cfg.num_groups; ++g) {
          const double gm = group_mean[g * points + p] / static_cast<double>(group_size);
          group_mean[g * points + p] = gm;
          const double step = gm - centre;
          centre += step / static_cast<double>(g + 1);
          sq += step * (gm - centre);
        }
        agg.std[p] = std::sqrt(std::max(0.0, sq) / static_cast<double>(cfg.num_groups));
      }
      for (std::size_t g = 0; g < cfg.num_groups; ++g) {
        agg.final_group_means.push_back(group_mean[g * points + points - 1]);
      }
      result.aggregates.push_back(std::move(agg));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Output

std::string csv_file_name(const std::string& algorithm, RegretKind kind) {
  std::string base = algorithm;
  std::replace(base.begin(), base.end(), ':', '_');
  return fmt::format("{}_{}.csv", base, kind.name());
}

std::vector<std::filesystem::path> write_csv(const ExperimentResult& result,
                                             const std::filesystem::path& dir) {
  if (result.aggregates.empty()) throw Error(ErrorCode::kInvalidArgument, "no results to write");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  }
  const auto& cfg = result.config;
  std::vector<std::filesystem::path> written;
  json summary;
  summary["config"] = config_to_json(cfg);
  summary["config"].erase("output");
  summary["warnings"] = result.warnings;
  summary["results"] = json::array();

  for (const auto& agg : result.aggregates) {
    const auto path = dir / csv_file_name(agg.algorithm, agg.kind);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, fmt::format("cannot open '{}'", path.string()));
    std::string body = std::string(kCsvHeader) + "\n";
    const std::string tail = fmt::format(
        "{},{},{},{},{},{:.17g},{:.17g},{},{},{}", agg.algorithm, agg.kind.name(), cfg.k,
        cfg.horizon, cfg.num_segments, cfg.delta_cap, cfg.delta_change, cfg.num_instances,
        cfg.num_groups, cfg.seed);
    for (std::size_t p = 0; p < agg.t.size(); ++p) {
      body += fmt::format("{},{:.17g},{:.17g},{}\n", agg.t[p], agg.mean[p], agg.std[p], tail);
    }
    out << body;
    if (!out.good()) throw Error(ErrorCode::kIoError, fmt::format("write failed: '{}'", path.string()));
    written.push_back(path);

    summary["results"].push_back({{"algorithm", agg.algorithm},
                                  {"regret_kind", agg.kind.name()},
                                  {"file", path.filename().string()},
                                  {"final_mean", agg.mean.back()},
                                  {"final_std", agg.std.back()},
                                  {"final_group_means", agg.final_group_means},
                                  {"decomposition_failures", agg.decomposition_failures}});
  }
  const auto summary_path = dir / "summary.json";
  write_json_file(summary_path, summary);
  written.push_back(summary_path);
  return written;
}

}  // namespace duelbench
