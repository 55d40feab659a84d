#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace storesched {

inline constexpr double kHoursPerYear = 8760.0;

// Structural parameters of the synthetic demand/generation generator. All
// amplitudes are fractions of the respective mean.
struct SynthParams {
  double years = 1.0;
  std::uint64_t seed = 1;
  double base_demand_mw = 68'600.0;
  double diurnal_amp = 0.15;
  double seasonal_amp = 0.20;
  double weekly_amp = 0.05;
  // Hourly persistence of the weather (wind) anomaly.
  double ar_coeff = 0.995;
  // Innovation standard deviation of the anomaly, in capacity-factor units.
  double noise_sd = 0.025;
  double solar_share = 0.2;
  double wind_mean_capacity_factor = 0.35;
};

struct InlineOrigin {};
struct CsvOrigin {
  std::string path;
};
struct SyntheticOrigin {
  SynthParams params;
};
using TraceOrigin = std::variant<InlineOrigin, CsvOrigin, SyntheticOrigin>;

// Hourly generation-minus-demand series (MW, equivalently MWh per step).
struct ResidualTrace {
  std::vector<double> values_mw;
  TraceOrigin origin;
  std::optional<double> overcapacity;

  std::size_t size() const { return values_mw.size(); }
  double years() const { return static_cast<double>(values_mw.size()) / kHoursPerYear; }
  bool synthetic() const { return std::holds_alternative<SyntheticOrigin>(origin); }
};

// Throws kInsufficientData when empty and kNonFiniteValue on NaN/inf.
ResidualTrace make_trace(std::vector<double> values_mw, TraceOrigin origin = InlineOrigin{});

struct DemandGeneration {
  std::vector<double> demand_mw;
  std::vector<double> wind_mw;
  std::vector<double> solar_mw;

  // wind + solar, element-wise.
  std::vector<double> generation_mw() const;
};

enum class CsvSchema {
  // residual_mw if present, otherwise demand_mw,wind_mw,solar_mw.
  kAuto,
  kResidual,
  kDemandWindSolar,
};

// Headered, comma-separated numeric table. Unknown columns are kept.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

// Throws kParseError(line), kNonFiniteValue(line) or kSchemaError.
CsvTable read_csv_table(std::istream& in);

ResidualTrace load_csv(const std::string& path, CsvSchema schema = CsvSchema::kAuto);
ResidualTrace parse_csv(std::istream& in, CsvSchema schema = CsvSchema::kAuto);
// Requires demand_mw,wind_mw,solar_mw columns.
DemandGeneration load_demand_generation_csv(const std::string& path);

// Scales generation by k = (1 + oc) * mean(demand) / mean(generation) so the
// residual k*generation - demand has mean oc * mean(demand).
// Throws kDegenerateInput if either mean is nonpositive.
ResidualTrace scale_to_overcapacity(std::span<const double> demand_mw,
                                    std::span<const double> generation_mw, double overcapacity);
double overcapacity_scale(std::span<const double> demand_mw, std::span<const double> generation_mw,
                          double overcapacity);

// Deterministic in `params.seed`. Output length is round(years * 8760).
// Throws kInvalidParams.
DemandGeneration synthesize(const SynthParams& params);

struct HistogramBin {
  double left = 0.0;
  double right = 0.0;
  std::size_t count = 0;
};

struct TraceStats {
  std::vector<HistogramBin> histogram;
  // acf[k] is the sample autocorrelation at lag k, k = 0..max_lag.
  std::vector<double> acf;
  double mean = 0.0;
  double stddev = 0.0;
};

// Throws kInsufficientData if the series is no longer than max_lag or has
// zero variance.
TraceStats trace_stats(std::span<const double> values, std::size_t bins = 100,
                       std::size_t max_lag = 500);

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

void write_trace_csv(std::ostream& out, std::span<const double> residual_mw);
void write_demand_generation_csv(std::ostream& out, const DemandGeneration& series,
                                 std::span<const double> residual_mw);
void write_histogram_csv(std::ostream& out, const TraceStats& stats);
void write_acf_csv(std::ostream& out, const TraceStats& stats);

}  // namespace storesched
