#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "storesched/fleet.hpp"
#include "storesched/policies.hpp"
#include "storesched/sizing.hpp"
#include "storesched/traces.hpp"

namespace storesched::cli {

struct CsvSource {
  std::filesystem::path path;
  CsvSchema schema = CsvSchema::kAuto;
};
struct InlineSource {
  std::vector<double> values_mw;
};
using TraceSource = std::variant<CsvSource, SynthParams, InlineSource>;

struct TraceConfig {
  TraceSource source;
  // Rescales generation to this mean overcapacity; needs a demand/generation
  // source (synthetic, or a CSV with demand_mw,wind_mw,solar_mw).
  std::optional<double> overcapacity;
};

enum class SizeMode { kSingle, kFleet };

struct SizingConfig {
  SizeMode mode = SizeMode::kSingle;
  std::optional<Technology> primary;
  std::vector<SecondaryCandidate> secondary_candidates;
  SizingOptions options;
};

struct CurveConfig {
  std::vector<double> efficiencies;
  std::vector<double> overcapacities;
  double tolerance_mwh = 1.0;
};

struct ScenarioConfig {
  std::optional<TraceConfig> trace;
  // Convention of the capacities and levels written in the config file.
  LossConvention convention = LossConvention::kSplitSqrt;
  Fleet fleet;  // InputSide
  std::vector<std::optional<StorePrices>> prices;
  FleetState initial;
  std::optional<PolicyKind> policy;
  ReliabilityStandard standard;
  SizingConfig sizing;
  std::optional<CurveConfig> curve;
  std::vector<std::vector<double>> lambda_candidates;
  std::size_t stats_bins = 100;
  std::size_t stats_max_lag = 500;
};

// Throws Error (kParseError, kSchemaError or a validation code) on any
// problem. Relative paths resolve against `base_dir`.
ScenarioConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ScenarioConfig load_config(const std::filesystem::path& path);

struct LoadedTrace {
  ResidualTrace trace;
  // Present for demand/generation sources.
  std::optional<DemandGeneration> series;
  double generation_scale = 1.0;
};

// Resolves the source into residual values. Throws kIoError for a missing
// file.
LoadedTrace load_trace(const TraceConfig& config);
// Same source rescaled to a different overcapacity.
ResidualTrace trace_at_overcapacity(const LoadedTrace& loaded, double overcapacity);

std::string describe_origin(const TraceOrigin& origin);

}  // namespace storesched::cli
