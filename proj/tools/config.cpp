#include "config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "storesched/error.hpp"

namespace storesched::cli {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kSchemaError, where + ": " + what);
}

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require_object(j, where);
  const std::set<std::string> known(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) schema_error(where, "unknown field '" + key + "'");
  }
}

double number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  // Unconstrained powers are written as "inf".
  if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  schema_error(where, "expected a number");
}

double field(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) schema_error(where, std::string("missing field '") + key + "'");
  return number(obj.at(key), where + "." + key);
}

double field_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj.at(key), where + "." + key) : fallback;
}

std::size_t count_field_or(const json& obj, const char* key, std::size_t fallback,
                           const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    schema_error(where + "." + key, "expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

std::string string_field_or(const json& obj, const char* key, const std::string& fallback,
                            const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) schema_error(where + "." + key, "expected a string");
  return obj.at(key).get<std::string>();
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<std::vector<double>> number_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of arrays");
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number_list(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

LossConvention parse_convention(const std::string& text, const std::string& where) {
  if (text == "split") return LossConvention::kSplitSqrt;
  if (text == "input") return LossConvention::kInputSide;
  schema_error(where, "convention must be 'input' or 'split'");
}

std::optional<StorePrices> parse_prices(const json& obj, const std::string& where) {
  const bool explicit_prices = obj.contains("capacity_usd_per_kwh") ||
                               obj.contains("output_usd_per_kw") || obj.contains("input_usd_per_kw");
  if (obj.contains("technology")) {
    if (explicit_prices) schema_error(where, "give either 'technology' or explicit prices");
    const std::string tech = string_field_or(obj, "technology", "", where);
    if (tech == "hydrogen") return kHydrogenPrices;
    if (tech == "acaes") return kAcaesPrices;
    if (tech == "li_ion") return kLiIonPrices;
    schema_error(where + ".technology", "expected hydrogen, acaes or li_ion");
  }
  if (!explicit_prices) return std::nullopt;
  StorePrices prices{field(obj, "capacity_usd_per_kwh", where), field(obj, "output_usd_per_kw", where),
                     field(obj, "input_usd_per_kw", where)};
  if (prices.capacity_usd_per_kwh < 0.0 || prices.output_usd_per_kw < 0.0 || prices.input_usd_per_kw < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, where + ": prices must be nonnegative");
  }
  return prices;
}

// Store dimensions as written (config convention) converted to InputSide.
StoreSpec parse_store(const json& obj, LossConvention convention, const std::string& where) {
  StoreSpec spec;
  spec.name = string_field_or(obj, "name", "", where);
  spec.efficiency = field(obj, "efficiency", where);
  spec.capacity_mwh = field(obj, "capacity_mwh", where);
  spec.output_mw = field(obj, "output_mw", where);
  spec.input_mw = field(obj, "input_mw", where);
  try {
    validate_spec(spec);
  } catch (const Error& e) {
    throw Error(e.code(), where + ": " + e.message());
  }
  spec.capacity_mwh =
      convert_energy(spec.capacity_mwh, spec.efficiency, convention, LossConvention::kInputSide);
  return spec;
}

Technology parse_technology(const json& obj, const std::string& where) {
  check_keys(obj, {"name", "efficiency", "technology", "capacity_usd_per_kwh", "output_usd_per_kw",
                   "input_usd_per_kw"},
             where);
  Technology tech;
  tech.name = string_field_or(obj, "name", "", where);
  tech.efficiency = field(obj, "efficiency", where);
  validate_spec(StoreSpec{tech.name, 1.0, 1.0, 1.0, tech.efficiency});
  const auto prices = parse_prices(obj, where);
  if (!prices) schema_error(where, "prices required ('technology' or explicit prices)");
  tech.prices = *prices;
  return tech;
}

SynthParams parse_synth(const json& obj, const std::string& where) {
  check_keys(obj, {"years", "seed", "base_demand_mw", "diurnal_amp", "seasonal_amp", "weekly_amp",
                   "ar_coeff", "noise_sd", "solar_share", "wind_mean_capacity_factor"},
             where);
  SynthParams p;
  p.years = field_or(obj, "years", p.years, where);
  p.seed = count_field_or(obj, "seed", p.seed, where);
  p.base_demand_mw = field_or(obj, "base_demand_mw", p.base_demand_mw, where);
  p.diurnal_amp = field_or(obj, "diurnal_amp", p.diurnal_amp, where);
  p.seasonal_amp = field_or(obj, "seasonal_amp", p.seasonal_amp, where);
  p.weekly_amp = field_or(obj, "weekly_amp", p.weekly_amp, where);
  p.ar_coeff = field_or(obj, "ar_coeff", p.ar_coeff, where);
  p.noise_sd = field_or(obj, "noise_sd", p.noise_sd, where);
  p.solar_share = field_or(obj, "solar_share", p.solar_share, where);
  p.wind_mean_capacity_factor = field_or(obj, "wind_mean_capacity_factor", p.wind_mean_capacity_factor, where);
  return p;
}

TraceConfig parse_trace(const json& obj, const std::filesystem::path& base_dir) {
  const std::string where = "trace";
  check_keys(obj, {"csv", "schema", "synthetic", "values_mw", "overcapacity"}, where);
  const int sources = static_cast<int>(obj.contains("csv")) + static_cast<int>(obj.contains("synthetic")) +
                      static_cast<int>(obj.contains("values_mw"));
  if (sources != 1) schema_error(where, "give exactly one of 'csv', 'synthetic', 'values_mw'");
  TraceConfig config;
  if (obj.contains("overcapacity")) config.overcapacity = field(obj, "overcapacity", where);
  if (obj.contains("csv")) {
    CsvSource csv;
    const std::filesystem::path path = string_field_or(obj, "csv", "", where);
    csv.path = path.is_absolute() ? path : base_dir / path;
    const std::string schema = string_field_or(obj, "schema", "auto", where);
    if (schema == "auto") {
      csv.schema = CsvSchema::kAuto;
    } else if (schema == "residual") {
      csv.schema = CsvSchema::kResidual;
    } else if (schema == "demand_wind_solar") {
      csv.schema = CsvSchema::kDemandWindSolar;
    } else {
      schema_error(where + ".schema", "expected auto, residual or demand_wind_solar");
    }
    config.source = csv;
  } else if (obj.contains("synthetic")) {
    config.source = parse_synth(obj.at("synthetic"), where + ".synthetic");
  } else {
    if (config.overcapacity) schema_error(where, "overcapacity needs a demand/generation source");
    config.source = InlineSource{number_list(obj.at("values_mw"), where + ".values_mw")};
  }
  return config;
}

PolicyKind parse_policy(const json& obj, std::size_t store_count) {
  const std::string where = "policy";
  check_keys(obj, {"kind", "lambdas_per_hour"}, where);
  const std::string kind = string_field_or(obj, "kind", "value", where);
  if (kind == "ggddf") return Ggddf{};
  if (kind == "grtef") return Grtef{};
  if (kind != "value") schema_error(where + ".kind", "expected value, ggddf or grtef");
  ValueParams params;
  params.lambdas_per_hour = obj.contains("lambdas_per_hour")
                                ? number_list(obj.at("lambdas_per_hour"), where + ".lambdas_per_hour")
                                : std::vector<double>(store_count, 0.0);
  return params;
}

SizingConfig parse_sizing(const json& obj, LossConvention convention) {
  const std::string where = "sizing";
  check_keys(obj, {"mode", "primary", "secondary_candidates", "q_grid_points", "q_grid_low_fraction",
                   "capacity_rel_tol", "power_tolerance_mw", "lambda_candidates"},
             where);
  SizingConfig config;
  const std::string mode = string_field_or(obj, "mode", "single", where);
  if (mode == "single") {
    config.mode = SizeMode::kSingle;
  } else if (mode == "fleet") {
    config.mode = SizeMode::kFleet;
  } else {
    schema_error(where + ".mode", "expected single or fleet");
  }
  if (obj.contains("primary")) config.primary = parse_technology(obj.at("primary"), where + ".primary");
  if (obj.contains("secondary_candidates")) {
    const json& list = obj.at("secondary_candidates");
    if (!list.is_array()) schema_error(where + ".secondary_candidates", "expected an array of arrays");
    for (std::size_t c = 0; c < list.size(); ++c) {
      const std::string cw = where + ".secondary_candidates[" + std::to_string(c) + "]";
      if (!list[c].is_array()) schema_error(cw, "expected an array of stores");
      SecondaryCandidate candidate;
      for (std::size_t k = 0; k < list[c].size(); ++k) {
        const std::string sw = cw + "[" + std::to_string(k) + "]";
        const json& entry = list[c][k];
        check_keys(entry, {"name", "efficiency", "capacity_mwh", "output_mw", "input_mw", "technology",
                           "capacity_usd_per_kwh", "output_usd_per_kw", "input_usd_per_kw"},
                   sw);
        const StoreSpec spec = parse_store(entry, convention, sw);
        const auto prices = parse_prices(entry, sw);
        if (!prices) schema_error(sw, "prices required");
        // Kept InputSide here; converted to the reporting convention on use.
        candidate.push_back(FixedStore{Technology{spec.name, spec.efficiency, *prices},
                                       StoreDims{spec.capacity_mwh, spec.output_mw, spec.input_mw}});
      }
      config.secondary_candidates.push_back(std::move(candidate));
    }
  }
  SizingOptions& o = config.options;
  o.q_grid_points = count_field_or(obj, "q_grid_points", o.q_grid_points, where);
  o.q_grid_low_fraction = field_or(obj, "q_grid_low_fraction", o.q_grid_low_fraction, where);
  o.capacity_rel_tol = field_or(obj, "capacity_rel_tol", o.capacity_rel_tol, where);
  o.power_tolerance_mw = field_or(obj, "power_tolerance_mw", o.power_tolerance_mw, where);
  if (o.q_grid_points == 0 || !(o.q_grid_low_fraction > 0.0) || !(o.capacity_rel_tol > 0.0) ||
      !(o.power_tolerance_mw > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, where + ": grid sizes and tolerances must be positive");
  }
  if (obj.contains("lambda_candidates")) {
    o.lambda_candidates = number_matrix(obj.at("lambda_candidates"), where + ".lambda_candidates");
  }
  return config;
}

CurveConfig parse_curve(const json& obj) {
  const std::string where = "min_store_curve";
  check_keys(obj, {"efficiencies", "overcapacities", "tolerance_mwh"}, where);
  CurveConfig curve;
  if (!obj.contains("efficiencies")) schema_error(where, "missing field 'efficiencies'");
  curve.efficiencies = number_list(obj.at("efficiencies"), where + ".efficiencies");
  if (curve.efficiencies.empty()) throw Error(ErrorCode::kInvalidArgument, where + ": no efficiencies");
  for (double eta : curve.efficiencies) {
    if (!(eta > 0.0 && eta <= 1.0)) {
      throw Error(ErrorCode::kEfficiencyOutOfRange, where + ": efficiency must lie in (0, 1]");
    }
  }
  if (obj.contains("overcapacities")) {
    curve.overcapacities = number_list(obj.at("overcapacities"), where + ".overcapacities");
  }
  curve.tolerance_mwh = field_or(obj, "tolerance_mwh", curve.tolerance_mwh, where);
  if (!(curve.tolerance_mwh > 0.0)) throw Error(ErrorCode::kInvalidArgument, where + ": tolerance must be positive");
  return curve;
}

}  // namespace

ScenarioConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, {"description", "trace", "convention", "fleet", "policy", "reliability", "sizing",
                   "min_store_curve", "tune", "stats"},
             "config");
  ScenarioConfig config;
  config.convention = parse_convention(string_field_or(doc, "convention", "split", "config"), "convention");
  if (doc.contains("trace")) config.trace = parse_trace(doc.at("trace"), base_dir);

  if (doc.contains("fleet")) {
    const json& list = doc.at("fleet");
    if (!list.is_array()) schema_error("fleet", "expected an array of stores");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "fleet[" + std::to_string(i) + "]";
      const json& entry = list[i];
      check_keys(entry, {"name", "efficiency", "capacity_mwh", "output_mw", "input_mw", "initial_level_mwh",
                         "technology", "capacity_usd_per_kwh", "output_usd_per_kw", "input_usd_per_kw"},
                 where);
      const StoreSpec spec = parse_store(entry, config.convention, where);
      double level = spec.capacity_mwh;
      if (entry.contains("initial_level_mwh")) {
        level = convert_energy(field(entry, "initial_level_mwh", where), spec.efficiency,
                               config.convention, LossConvention::kInputSide);
      }
      config.fleet.push_back(spec);
      config.prices.push_back(parse_prices(entry, where));
      config.initial.levels_mwh.push_back(level);
    }
    validate_state(config.initial, config.fleet);
  }
  if (doc.contains("policy")) {
    config.policy = parse_policy(doc.at("policy"), config.fleet.size());
    validate_policy(*config.policy, config.fleet);
  } else if (!config.fleet.empty()) {
    config.policy = ValueParams{std::vector<double>(config.fleet.size(), 0.0)};
  }
  if (doc.contains("reliability")) {
    const json& r = doc.at("reliability");
    check_keys(r, {"max_unserved_gwh_per_year"}, "reliability");
    config.standard.max_unserved_gwh_per_year = field(r, "max_unserved_gwh_per_year", "reliability");
    if (!(config.standard.max_unserved_gwh_per_year >= 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "reliability: standard must be nonnegative");
    }
  }
  if (doc.contains("sizing")) config.sizing = parse_sizing(doc.at("sizing"), config.convention);
  if (doc.contains("min_store_curve")) config.curve = parse_curve(doc.at("min_store_curve"));
  if (doc.contains("tune")) {
    const json& t = doc.at("tune");
    check_keys(t, {"lambda_grid", "lambda_candidates"}, "tune");
    if (t.contains("lambda_candidates")) {
      config.lambda_candidates = number_matrix(t.at("lambda_candidates"), "tune.lambda_candidates");
    } else if (t.contains("lambda_grid")) {
      const auto grid = number_list(t.at("lambda_grid"), "tune.lambda_grid");
      config.lambda_candidates = lambda_product_grid(grid, config.fleet.size());
    }
  }
  if (doc.contains("stats")) {
    const json& s = doc.at("stats");
    check_keys(s, {"bins", "max_lag"}, "stats");
    config.stats_bins = count_field_or(s, "bins", config.stats_bins, "stats");
    config.stats_max_lag = count_field_or(s, "max_lag", config.stats_max_lag, "stats");
  }
  return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

LoadedTrace load_trace(const TraceConfig& config) {
  LoadedTrace loaded{make_trace({0.0}), std::nullopt, 1.0};
  if (const auto* csv = std::get_if<CsvSource>(&config.source)) {
    if (!std::filesystem::exists(csv->path)) {
      throw Error(ErrorCode::kIoError, "trace file not found: " + csv->path.string());
    }
    if (config.overcapacity) {
      loaded.series = load_demand_generation_csv(csv->path.string());
    } else {
      loaded.trace = load_csv(csv->path.string(), csv->schema);
      return loaded;
    }
  } else if (const auto* params = std::get_if<SynthParams>(&config.source)) {
    loaded.series = synthesize(*params);
  } else {
    loaded.trace = make_trace(std::get<InlineSource>(config.source).values_mw);
    return loaded;
  }

  const DemandGeneration& series = *loaded.series;
  const std::vector<double> generation = series.generation_mw();
  if (config.overcapacity) {
    loaded.generation_scale = overcapacity_scale(series.demand_mw, generation, *config.overcapacity);
    loaded.trace = scale_to_overcapacity(series.demand_mw, generation, *config.overcapacity);
  } else {
    std::vector<double> residual(generation.size());
    for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = generation[i] - series.demand_mw[i];
    loaded.trace = make_trace(std::move(residual));
  }
  if (const auto* csv = std::get_if<CsvSource>(&config.source)) {
    loaded.trace.origin = CsvOrigin{csv->path.string()};
  } else {
    loaded.trace.origin = SyntheticOrigin{std::get<SynthParams>(config.source)};
  }
  return loaded;
}

ResidualTrace trace_at_overcapacity(const LoadedTrace& loaded, double overcapacity) {
  if (!loaded.series) {
    throw Error(ErrorCode::kSchemaError, "overcapacity sweeps need a demand/generation trace source");
  }
  ResidualTrace trace =
      scale_to_overcapacity(loaded.series->demand_mw, loaded.series->generation_mw(), overcapacity);
  trace.origin = loaded.trace.origin;
  return trace;
}

std::string describe_origin(const TraceOrigin& origin) {
  if (const auto* csv = std::get_if<CsvOrigin>(&origin)) return "csv:" + csv->path;
  if (const auto* synth = std::get_if<SyntheticOrigin>(&origin)) {
    return "synthetic(seed=" + std::to_string(synth->params.seed) + ")";
  }
  return "inline";
}

}  // namespace storesched::cli
