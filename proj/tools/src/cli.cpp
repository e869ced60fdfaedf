#include "duelbench_cli/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "duelbench/bounds.hpp"
#include "duelbench/detection.hpp"
#include "duelbench/env_io.hpp"
#include "duelbench/error.hpp"
#include "duelbench/experiments.hpp"

namespace duelbench::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t parallelism = 0;
  bool quiet = false;
};

// --seed beats DUELBENCH_SEED, which beats the config file.
void apply_seed(ExperimentConfig& cfg, const Globals& g) {
  if (const char* env = std::getenv("DUELBENCH_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used, 0);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      cfg.seed = v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParseError, fmt::format("DUELBENCH_SEED='{}' is not a u64", env));
    }
  }
  if (g.seed) cfg.seed = *g.seed;
}

ExperimentConfig load_checked(const Globals& g) {
  if (g.config.empty()) throw Error(ErrorCode::kInvalidArgument, "--config is required");
  ExperimentConfig cfg = load_config(g.config);
  apply_seed(cfg, g);
  if (!g.out.empty()) cfg.output = g.out;
  validate_config(cfg);
  return cfg;
}

void execute(const ExperimentConfig& cfg, const Globals& g, std::ostream& out,
             std::ostream& err) {
  RunOptions options;
  options.parallelism = g.parallelism;
  const std::size_t groups = cfg.num_groups;
  const std::size_t per_group = cfg.num_instances / groups;
  if (!g.quiet) {
    options.on_group_done = [&err, groups, per_group](std::size_t group, std::size_t done) {
      fmt::print(err, "[{}/{}] group {} done (instances {}-{})\n", done, groups, group + 1,
                 group * per_group, (group + 1) * per_group - 1);
      err.flush();
    };
  }
  const ExperimentResult result = run_experiment(cfg, options);
  for (const auto& w : result.warnings) fmt::print(err, "warning: {}\n", w);
  for (const auto& agg : result.aggregates) {
    if (agg.decomposition_failures > 0) {
      fmt::print(err, "warning: {} runs of {} ({}) failed the decomposition check\n",
                 agg.decomposition_failures, agg.algorithm, agg.kind.name());
    }
  }
  const auto files = write_csv(result, cfg.output);
  if (!g.quiet) {
    for (const auto& f : files) fmt::print(out, "{}\n", f.string());
  }
}

// "1e5" -> integer JSON value when integral, else a double.
json parse_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw Error(ErrorCode::kParseError, fmt::format("'{}' is not a number", text));
  }
  if (v == std::floor(v) && std::abs(v) < 9.0e15) return json(static_cast<std::int64_t>(v));
  return json(v);
}

int sweep(const Globals& g, const std::string& vary, std::ostream& out, std::ostream& err) {
  const auto eq = vary.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == vary.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("--vary expects KEY=v1,v2,..., got '{}'", vary));
  }
  const std::string key = vary.substr(0, eq);
  std::vector<std::string> values;
  for (std::size_t pos = eq + 1; pos <= vary.size();) {
    const auto comma = std::min(vary.find(',', pos), vary.size());
    values.push_back(vary.substr(pos, comma - pos));
    pos = comma + 1;
  }
  if (g.config.empty()) throw Error(ErrorCode::kInvalidArgument, "--config is required");
  json base = read_json_file(g.config);
  const std::string root =
      !g.out.empty() ? g.out : base.value("output", std::string("results"));

  // Expand and validate everything before the first run starts.
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) {
    json j = base;
    j[key] = parse_number(v);
    ExperimentConfig cfg = config_from_json(j);
    apply_seed(cfg, g);
    cfg.output = (fs::path(root) / fmt::format("{}_{}", key, v)).string();
    validate_config(cfg);
    configs.push_back(std::move(cfg));
  }
  for (const auto& cfg : configs) {
    if (!g.quiet) fmt::print(err, "sweep: {}\n", cfg.output);
    execute(cfg, g, out, err);
  }
  return 0;
}

void print_params(std::ostream& out, std::ostream& err, std::size_t k, std::int64_t t,
                  std::size_t m, double delta, double delta_star, double p_min,
                  const std::string& variant) {
  try {
    const auto p = derive_mdb_params(k, t, m, delta,
                                     variant == "delta_scaled" ? MdbConstantsVariant::kDeltaScaled
                                                           : MdbConstantsVariant::kPlain);
    fmt::print(out, "MDB constants (K={}, T={}, M={}, delta={}, variant={})\n", k, t, m, delta,
               variant);
    fmt::print(out, "  C     = {:.6g}\n", p.log_term);
    fmt::print(out, "  w     = {}\n", p.w);
    fmt::print(out, "  b     = {:.6g}\n", p.b);
    fmt::print(out, "  c     = {:.6g}\n", p.c);
    fmt::print(out, "  gamma = {:.6g}\n", p.gamma);
    fmt::print(out, "  block = {}\n", p.block_length(k));
    fmt::print(out, "  L     = {}\n", p.fill_steps(k));
    fmt::print(out, "  delta >= 2b/w + c: {}\n", p.detects_change(delta) ? "yes" : "no");
    for (const auto& w : p.warnings) fmt::print(out, "  warning: {}\n", w);
  } catch (const Error& e) {
    fmt::print(err, "MDB constants unavailable: {}\n", e.what());
  }
  try {
    const auto p = derive_detect_params(t, delta_star);
    fmt::print(out, "DETECT constants (T={}, delta*={})\n", t, delta_star);
    fmt::print(out, "  w     = {}\n", p.w);
    fmt::print(out, "  b     = {:.6g}\n", p.b);
    fmt::print(out, "  c     = {:.6g}\n", p.c);
    fmt::print(out, "  L'    = {}\n", p.fill_steps(k));
  } catch (const Error& e) {
    fmt::print(err, "DETECT constants unavailable: {}\n", e.what());
  }
  try {
    const auto p = detect_ttilde_btw(k, t, p_min);
    fmt::print(out, "T~ for BtW (K={}, T={}, p_min={})\n", k, t, p_min);
    fmt::print(out, "  T~    = {}\n", p.ttilde);
    fmt::print(out, "  p_T~ >= {:.10g}\n", p.p_bound);
  } catch (const Error& e) {
    fmt::print(err, "T~ for BtW unavailable: {}\n", e.what());
  }
  try {
    const auto p = detect_ttilde_ws(k, t, p_min);
    fmt::print(out, "T~ for WS (K={}, T={}, p_min={})\n", k, t, p_min);
    fmt::print(out, "  r     = {}\n", p.r);
    fmt::print(out, "  T~    = {}\n", p.ttilde);
    fmt::print(out, "  p_T~ >= {:.10g}\n", p.p_bound);
  } catch (const Error& e) {
    fmt::print(err, "T~ for WS unavailable: {}\n", e.what());
  }
}

void print_bounds(std::ostream& out, std::ostream& err, const BoundTableInputs& in) {
  std::vector<std::string> skipped;
  const auto rows = bound_table(in, &skipped);
  fmt::print(out, "{:<28} {:>16}  {:<8} inputs\n", "bound", "value", "vacuous");
  for (const auto& r : rows) {
    std::string inputs;
    for (const auto& [name, v] : r.inputs) {
      if (!inputs.empty()) inputs += ", ";
      inputs += fmt::format("{}={:.6g}", name, v);
    }
    fmt::print(out, "{:<28} {:>16.8g}  {:<8} {}\n", r.name, r.value, r.vacuous ? "yes" : "no",
               inputs);
  }
  for (const auto& s : skipped) fmt::print(err, "skipped {}\n", s);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-stationary dueling bandits simulation laboratory", "duelbench"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out", g.out, "Output directory (overrides the config's output)");
  app.add_option("--seed", g.seed, "Master seed (overrides config and DUELBENCH_SEED)");
  app.add_option("--parallelism", g.parallelism, "Concurrent instance runs (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet,-q", g.quiet, "Suppress progress output");

  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write CSVs");
  auto* validate_cmd = app.add_subcommand("validate", "Check a config; exit 0 if valid, 1 if not");

  auto* params_cmd = app.add_subcommand("params", "Print derived MDB / DETECT constants");
  std::size_t k = 5;
  double t_value = 1e6;
  std::size_t m = 10;
  double delta = 0.6;
  std::optional<double> delta_star;
  double p_min = 0.6;
  std::string variant = "plain";
  params_cmd->add_option("--K", k, "Number of arms")->check(CLI::PositiveNumber);
  params_cmd->add_option("--T", t_value, "Horizon")->check(CLI::PositiveNumber);
  params_cmd->add_option("--M", m, "Number of segments")->check(CLI::PositiveNumber);
  params_cmd->add_option("--delta", delta, "Segmental change delta");
  params_cmd->add_option("--delta-star", delta_star, "Winner-row change delta* (default: delta)");
  params_cmd->add_option("--p-min", p_min, "Smallest winning probability of the winner");
  params_cmd->add_option("--variant", variant, "MDB constant variant")
      ->check(CLI::IsMember({"plain", "delta_scaled"}));

  auto* bounds_cmd = app.add_subcommand("bounds", "Print closed-form bounds");
  double gap = 0.1;
  double r_alg = 0.0;
  bounds_cmd->add_option("--K", k, "Number of arms")->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--T", t_value, "Horizon")->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--M", m, "Number of segments")->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--gap", gap, "Minimal gap Delta");
  bounds_cmd->add_option("--delta", delta, "Segmental change delta");
  bounds_cmd->add_option("--delta-star", delta_star, "Winner-row change delta*");
  bounds_cmd->add_option("--p-min", p_min, "Smallest winning probability of the winner");
  bounds_cmd->add_option("--r-alg", r_alg, "Black-box regret term R_alg");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one config over several values of a key");
  std::string vary;
  sweep_cmd->add_option("--vary", vary, "KEY=v1,v2,... (e.g. T=1e5,2e5,4e5)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) {
      execute(load_checked(g), g, out, err);
      return 0;
    }
    if (*validate_cmd) {
      const ExperimentConfig cfg = load_checked(g);
      if (!g.quiet) {
        fmt::print(out, "valid: K={} T={} M={} instances={} groups={} algorithms={}\n", cfg.k,
                   cfg.horizon, cfg.num_segments, cfg.num_instances, cfg.num_groups,
                   cfg.algorithms.size());
      }
      return 0;
    }
    if (*sweep_cmd) return sweep(g, vary, out, err);

    const auto horizon = static_cast<std::int64_t>(std::llround(t_value));
    if (*params_cmd) {
      print_params(out, err, k, horizon, m, delta, delta_star.value_or(delta), p_min, variant);
      return 0;
    }
    if (*bounds_cmd) {
      BoundTableInputs in;
      in.k = k;
      in.num_segments = m;
      in.horizon = horizon;
      in.gap = gap;
      in.delta = delta;
      in.delta_star = delta_star.value_or(delta);
      in.p_min = p_min;
      in.black_box_regret = r_alg;
      if (!g.config.empty()) {
        const ExperimentConfig cfg = load_checked(g);
        in.k = cfg.k;
        in.num_segments = cfg.num_segments;
        in.horizon = cfg.horizon;
        in.gap = cfg.delta_cap;
        in.delta = cfg.delta_change;
        in.delta_star = delta_star.value_or(cfg.delta_change);
        in.p_min = 0.5 + cfg.delta_cap;
      }
      print_bounds(out, err, in);
      return 0;
    }
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace duelbench::cli
