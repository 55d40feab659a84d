#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "storesched/engine.hpp"
#include "storesched/error.hpp"
#include "storesched/sizing.hpp"

namespace storesched::cli {
namespace {

using nlohmann::json;

struct ConfigFailure {
  std::string message;
};

// Loading and validating inputs: any Error here is a configuration problem.
template <typename F>
auto configure(F&& load) {
  try {
    return load();
  } catch (const Error& e) {
    throw ConfigFailure{e.what()};
  } catch (const json::exception& e) {
    throw ConfigFailure{e.what()};
  }
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigFailure& f) {
    err << "config error: " << f.message << '\n';
    return kExitConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntimeError;
  }
}

void write_file(const std::filesystem::path& path, std::ostream& out,
                const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  body(file);
  file.flush();
  if (!file) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
  out << path.string() << '\n';
}

void write_json(const std::filesystem::path& path, const json& doc, std::ostream& out) {
  write_file(path, out, [&](std::ostream& file) { file << doc.dump(2) << '\n'; });
}

ScenarioConfig load_scenario(const CommonOptions& options) {
  return configure([&] {
    if (options.config.empty()) throw Error(ErrorCode::kInvalidArgument, "--config is required");
    ScenarioConfig config = load_config(options.config);
    if (options.seed && config.trace) {
      if (auto* params = std::get_if<SynthParams>(&config.trace->source)) params->seed = *options.seed;
    }
    return config;
  });
}

LoadedTrace require_trace(const ScenarioConfig& config) {
  return configure([&] {
    if (!config.trace) throw Error(ErrorCode::kSchemaError, "config has no 'trace'");
    return load_trace(*config.trace);
  });
}

void require_fleet(const ScenarioConfig& config) {
  configure([&] {
    if (config.fleet.empty()) throw Error(ErrorCode::kSchemaError, "config has no 'fleet'");
    return 0;
  });
}

json trace_json(const ResidualTrace& trace) {
  json j{{"origin", describe_origin(trace.origin)},
         {"synthetic", trace.synthetic()},
         {"hours", trace.size()},
         {"years", trace.years()}};
  if (trace.overcapacity) j["overcapacity"] = *trace.overcapacity;
  return j;
}

std::string store_label(const StoreSpec& spec, std::size_t i) {
  return spec.name.empty() ? "store" + std::to_string(i) : spec.name;
}

std::vector<FixedStore> to_reporting(const SecondaryCandidate& candidate, LossConvention convention) {
  std::vector<FixedStore> out = candidate;
  for (auto& fixed : out) {
    fixed.dims.capacity_mwh = convert_energy(fixed.dims.capacity_mwh, fixed.technology.efficiency,
                                             LossConvention::kInputSide, convention);
  }
  return out;
}

}  // namespace

int cmd_simulate(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig config = load_scenario(options);
    require_fleet(config);
    const LoadedTrace loaded = require_trace(config);
    const ResidualTrace& trace = loaded.trace;

    const SimResult result = simulate(config.fleet, config.initial, trace, *config.policy);
    double total_output = 0.0;
    for (const auto& spec : config.fleet) total_output += spec.output_mw;
    const double bound = lower_bound_unserved(trace.values_mw, total_output).back();

    json stores = json::array();
    for (std::size_t i = 0; i < config.fleet.size(); ++i) {
      const StoreSpec& spec = config.fleet[i];
      stores.push_back({{"name", store_label(spec, i)},
                        {"served_external_mwh", result.served_external_mwh[i]},
                        {"final_level_mwh",
                         convert_energy(result.final_state.levels_mwh[i], spec.efficiency,
                                        LossConvention::kInputSide, options.convention)}});
    }
    json summary{{"policy", policy_name(*config.policy)},
                 {"convention", std::string(to_string(options.convention))},
                 {"trace", trace_json(trace)},
                 {"total_unserved_mwh", result.total_unserved_mwh},
                 {"total_spill_mwh", result.total_spill_mwh},
                 {"unserved_gwh_per_year", result.total_unserved_mwh / trace.years() / 1e3},
                 {"meets_standard", check_reliability(result, trace.years(), config.standard)},
                 {"cross_charged_mwh", result.cross_charged_mwh},
                 {"lower_bound_unserved_mwh", bound},
                 {"stores", stores}};
    if (const auto* params = std::get_if<ValueParams>(&*config.policy)) {
      summary["lambdas_per_hour"] = params->lambdas_per_hour;
    }
    write_file(options.out_dir / "sim.csv", out, [&](std::ostream& file) {
      write_sim_csv(file, config.fleet, trace.values_mw, result, options.convention);
    });
    write_json(options.out_dir / "summary.json", summary, out);
    return kExitOk;
  });
}

int cmd_size(const CommonOptions& options, std::optional<SizeMode> mode, bool no_optimize,
             std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig config = load_scenario(options);
    json report;
    if (no_optimize) {
      require_fleet(config);
      configure([&] {
        for (std::size_t i = 0; i < config.prices.size(); ++i) {
          if (!config.prices[i]) {
            throw Error(ErrorCode::kSchemaError, "fleet[" + std::to_string(i) + "] has no prices");
          }
        }
        return 0;
      });
      SizingResult fixed;
      fixed.reporting = options.convention;
      for (std::size_t i = 0; i < config.fleet.size(); ++i) {
        const StoreSpec& spec = config.fleet[i];
        SizedStore store{store_label(spec, i), spec.efficiency,
                         StoreDims{convert_energy(spec.capacity_mwh, spec.efficiency,
                                                  LossConvention::kInputSide, options.convention),
                                   spec.output_mw, spec.input_mw},
                         {}, 0.0};
        store.cost = store_cost(store.dims, *config.prices[i]);
        fixed.total_cost_usd += store.cost.total_usd();
        fixed.stores.push_back(store);
      }
      if (const auto* params = std::get_if<ValueParams>(&*config.policy)) {
        fixed.lambdas_per_hour = params->lambdas_per_hour;
      }
      std::optional<ResidualTrace> trace;
      if (config.trace) trace = require_trace(config).trace;
      if (trace) {
        const SimResult sim =
            simulate(config.fleet, config.initial, *trace, *config.policy, SimOptions{false});
        fixed.unserved_gwh_per_year = sim.total_unserved_mwh / trace->years() / 1e3;
        for (std::size_t i = 0; i < fixed.stores.size(); ++i) {
          fixed.stores[i].served_mwh = sim.served_external_mwh[i];
        }
      }
      report = to_json(fixed);
      if (trace) {
        report["trace"] = trace_json(*trace);
      } else {
        report["unserved_gwh_per_year"] = nullptr;
      }
    } else {
      const Technology primary = configure([&] {
        if (!config.sizing.primary) throw Error(ErrorCode::kSchemaError, "sizing.primary is required");
        return *config.sizing.primary;
      });
      const LoadedTrace loaded = require_trace(config);
      SizingOptions sizing = config.sizing.options;
      sizing.reporting = options.convention;
      sizing.threads = options.threads;
      const SizeMode chosen = mode.value_or(config.sizing.mode);
      SizingResult result;
      if (chosen == SizeMode::kSingle) {
        result = optimize_single_store(loaded.trace.values_mw, primary, config.standard, sizing);
      } else {
        std::vector<SecondaryCandidate> candidates;
        for (const auto& c : config.sizing.secondary_candidates) {
          candidates.push_back(to_reporting(c, options.convention));
        }
        if (candidates.empty()) candidates.emplace_back();
        result = optimize_fleet(loaded.trace.values_mw, primary, candidates, config.standard, sizing);
      }
      report = to_json(result);
      report["mode"] = chosen == SizeMode::kSingle ? "single" : "fleet";
      report["trace"] = trace_json(loaded.trace);
    }
    report["reliability_gwh_per_year"] = config.standard.max_unserved_gwh_per_year;
    write_json(options.out_dir / "sizing.json", report, out);
    return kExitOk;
  });
}

int cmd_min_store_curve(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig config = load_scenario(options);
    const CurveConfig curve = configure([&] {
      if (!config.curve) throw Error(ErrorCode::kSchemaError, "config has no 'min_store_curve'");
      return *config.curve;
    });
    const LoadedTrace loaded = require_trace(config);

    std::vector<std::optional<double>> ocs;
    if (curve.overcapacities.empty()) {
      ocs.push_back(loaded.trace.overcapacity);
    } else {
      for (double oc : curve.overcapacities) ocs.emplace_back(oc);
    }
    std::vector<ResidualTrace> traces;
    for (const auto& oc : ocs) {
      traces.push_back(curve.overcapacities.empty() ? loaded.trace
                                                    : configure([&] { return trace_at_overcapacity(loaded, *oc); }));
    }

    std::vector<double> etas = curve.efficiencies;
    std::sort(etas.begin(), etas.end());
    std::vector<MinStore> points(traces.size() * etas.size());
    parallel_for(points.size(), options.threads, [&](std::size_t k) {
      points[k] = min_single_store_capacity(traces[k / etas.size()].values_mw, etas[k % etas.size()],
                                            curve.tolerance_mwh);
    });

    for (std::size_t o = 0; o < traces.size(); ++o) {
      for (std::size_t e = 1; e < etas.size(); ++e) {
        const double prev = points[o * etas.size() + e - 1].capacity_mwh;
        if (points[o * etas.size() + e].capacity_mwh > prev + curve.tolerance_mwh) {
          err << "warning: minimal capacity increases with efficiency at eta=" << etas[e] << '\n';
        }
      }
    }
    write_file(options.out_dir / "min_store_curve.csv", out, [&](std::ostream& file) {
      file << "overcapacity,efficiency,capacity_mwh,initial_level_mwh\n";
      for (std::size_t o = 0; o < traces.size(); ++o) {
        for (std::size_t e = 0; e < etas.size(); ++e) {
          const MinStore& p = points[o * etas.size() + e];
          const auto report = [&](double energy) {
            return format_number(
                convert_energy(energy, etas[e], LossConvention::kInputSide, options.convention));
          };
          file << (ocs[o] ? format_number(*ocs[o]) : "") << ',' << format_number(etas[e]) << ','
               << report(p.capacity_mwh) << ',' << report(p.initial_level_mwh) << '\n';
        }
      }
    });
    return kExitOk;
  });
}

int cmd_tune(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig config = load_scenario(options);
    require_fleet(config);
    const LoadedTrace loaded = require_trace(config);
    std::vector<std::vector<double>> candidates = config.lambda_candidates;
    if (candidates.empty()) candidates = lambda_product_grid(default_lambda_grid(), config.fleet.size());
    configure([&] {
      for (const auto& l : candidates) validate_params(ValueParams{l}, config.fleet);
      return 0;
    });
    const ValueParams best = tune_lambdas(config.fleet, loaded.trace.values_mw, candidates, options.threads);
    const SimResult sim = simulate(config.fleet, full_state(config.fleet), loaded.trace, best,
                                   SimOptions{false});
    json report{{"lambdas_per_hour", best.lambdas_per_hour},
                {"total_unserved_mwh", sim.total_unserved_mwh},
                {"unserved_gwh_per_year", sim.total_unserved_mwh / loaded.trace.years() / 1e3},
                {"candidates", candidates.size()},
                {"trace", trace_json(loaded.trace)}};
    write_json(options.out_dir / "tune.json", report, out);
    return kExitOk;
  });
}

int cmd_synth(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    TraceConfig trace_config{SynthParams{}, std::nullopt};
    if (!options.config.empty()) {
      const ScenarioConfig config = load_scenario(options);
      if (config.trace) trace_config = *config.trace;
      configure([&] {
        if (!std::holds_alternative<SynthParams>(trace_config.source)) {
          throw Error(ErrorCode::kSchemaError, "synth needs a 'synthetic' trace source");
        }
        return 0;
      });
    }
    auto& params = std::get<SynthParams>(trace_config.source);
    if (options.seed) params.seed = *options.seed;
    const LoadedTrace loaded = configure([&] { return load_trace(trace_config); });
    DemandGeneration scaled = *loaded.series;
    for (auto& w : scaled.wind_mw) w *= loaded.generation_scale;
    for (auto& s : scaled.solar_mw) s *= loaded.generation_scale;
    write_file(options.out_dir / "trace.csv", out, [&](std::ostream& file) {
      write_demand_generation_csv(file, scaled, loaded.trace.values_mw);
    });
    return kExitOk;
  });
}

int cmd_stats(const CommonOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScenarioConfig config = load_scenario(options);
    const LoadedTrace loaded = require_trace(config);
    const TraceStats stats = trace_stats(loaded.trace.values_mw, config.stats_bins, config.stats_max_lag);
    write_file(options.out_dir / "stats_histogram.csv", out,
               [&](std::ostream& file) { write_histogram_csv(file, stats); });
    write_file(options.out_dir / "stats_acf.csv", out,
               [&](std::ostream& file) { write_acf_csv(file, stats); });
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Scheduling and dimensioning of energy-storage fleets", "storesched"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string convention = "split";
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* config = sub->add_option("--config", common.config, "Scenario config (JSON)");
    if (config_required) config->required();
    sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", seed, "Override the synthetic trace seed");
    sub->add_option("--threads", common.threads, "Worker threads (0 = all cores)");
    sub->add_option("--convention", convention, "Energy convention of outputs")
        ->check(CLI::IsMember({"input", "split"}))
        ->capture_default_str();
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a fleet over a trace");
  add_common(simulate_cmd, true);
  auto* size_cmd = app.add_subcommand("size", "Cost-optimal dimensioning");
  add_common(size_cmd, true);
  std::string mode;
  bool no_optimize = false;
  size_cmd->add_option("--mode", mode, "single or fleet (default from config)")
      ->check(CLI::IsMember({"single", "fleet"}));
  size_cmd->add_flag("--no-optimize", no_optimize, "Price the configured fleet as given");
  auto* curve_cmd = app.add_subcommand("min-store-curve", "Minimal single-store sizes");
  add_common(curve_cmd, true);
  auto* tune_cmd = app.add_subcommand("tune", "Grid search of value-function lambdas");
  add_common(tune_cmd, true);
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic demand/generation trace");
  add_common(synth_cmd, false);
  auto* stats_cmd = app.add_subcommand("stats", "Histogram and autocorrelation of a trace");
  add_common(stats_cmd, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  common.convention = convention == "input" ? LossConvention::kInputSide : LossConvention::kSplitSqrt;
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) common.seed = seed;
  }

  if (simulate_cmd->parsed()) return cmd_simulate(common, out, err);
  if (size_cmd->parsed()) {
    std::optional<SizeMode> chosen;
    if (mode == "single") chosen = SizeMode::kSingle;
    if (mode == "fleet") chosen = SizeMode::kFleet;
    return cmd_size(common, chosen, no_optimize, out, err);
  }
  if (curve_cmd->parsed()) return cmd_min_store_curve(common, out, err);
  if (tune_cmd->parsed()) return cmd_tune(common, out, err);
  if (synth_cmd->parsed()) return cmd_synth(common, out, err);
  return cmd_stats(common, out, err);
}

}  // namespace storesched::cli
