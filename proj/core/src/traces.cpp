#include "storesched/traces.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include "storesched/error.hpp"

namespace storesched {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Standard normal draws from raw mt19937_64 output via Box-Muller, so the
// sequence for a given seed does not depend on the standard library vendor.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

void require_finite_params(const SynthParams& p) {
  const double fields[] = {p.years,         p.base_demand_mw, p.diurnal_amp,
                           p.seasonal_amp,  p.weekly_amp,     p.ar_coeff,
                           p.noise_sd,      p.solar_share,    p.wind_mean_capacity_factor};
  for (double f : fields) {
    if (!std::isfinite(f)) throw Error(ErrorCode::kInvalidParams, "synthetic parameters must be finite");
  }
}

}  // namespace

ResidualTrace make_trace(std::vector<double> values_mw, TraceOrigin origin) {
  if (values_mw.empty()) throw Error(ErrorCode::kInsufficientData, "residual trace is empty");
  for (std::size_t i = 0; i < values_mw.size(); ++i) {
    if (!std::isfinite(values_mw[i])) {
      throw Error(ErrorCode::kNonFiniteValue, "residual value at hour " + std::to_string(i + 1));
    }
  }
  return ResidualTrace{std::move(values_mw), std::move(origin), std::nullopt};
}

std::vector<double> DemandGeneration::generation_mw() const {
  std::vector<double> out(wind_mw.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = wind_mw[i] + solar_mw[i];
  return out;
}

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

CsvTable read_csv_table(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (!have_header) {
      for (auto f : fields) table.header.emplace_back(f);
      table.columns.resize(table.header.size());
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::kParseError, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(table.header.size()) + " fields, got " +
                                              std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string_view field = fields[c];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
        throw Error(ErrorCode::kParseError,
                    "line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
      }
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::kNonFiniteValue, "line " + std::to_string(line_no) + ": column " +
                                                    table.header[c] + " is not finite");
      }
      table.columns[c].push_back(value);
    }
  }
  if (!have_header) throw Error(ErrorCode::kSchemaError, "missing header row");
  return table;
}

ResidualTrace parse_csv(std::istream& in, CsvSchema schema) {
  const CsvTable table = read_csv_table(in);
  const auto residual = table.find("residual_mw");
  const auto demand = table.find("demand_mw");
  const auto wind = table.find("wind_mw");
  const auto solar = table.find("solar_mw");
  const bool has_dws = demand && wind && solar;

  bool use_residual = false;
  switch (schema) {
    case CsvSchema::kResidual:
      if (!residual) throw Error(ErrorCode::kSchemaError, "missing column residual_mw");
      use_residual = true;
      break;
    case CsvSchema::kDemandWindSolar:
      if (!has_dws) throw Error(ErrorCode::kSchemaError, "need columns demand_mw,wind_mw,solar_mw");
      break;
    case CsvSchema::kAuto:
      if (!residual && !has_dws) {
        throw Error(ErrorCode::kSchemaError,
                    "need column residual_mw or columns demand_mw,wind_mw,solar_mw");
      }
      use_residual = residual.has_value();
      break;
  }
  if (table.rows() == 0) throw Error(ErrorCode::kSchemaError, "no data rows");

  std::vector<double> values;
  if (use_residual) {
    values = table.columns[*residual];
  } else {
    const auto& d = table.columns[*demand];
    const auto& w = table.columns[*wind];
    const auto& s = table.columns[*solar];
    values.resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) values[i] = w[i] + s[i] - d[i];
  }
  return make_trace(std::move(values));
}

ResidualTrace load_csv(const std::string& path, CsvSchema schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  ResidualTrace trace = parse_csv(in, schema);
  trace.origin = CsvOrigin{path};
  return trace;
}

DemandGeneration load_demand_generation_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  const CsvTable table = read_csv_table(in);
  const auto demand = table.find("demand_mw");
  const auto wind = table.find("wind_mw");
  const auto solar = table.find("solar_mw");
  if (!demand || !wind || !solar) {
    throw Error(ErrorCode::kSchemaError, path + ": need columns demand_mw,wind_mw,solar_mw");
  }
  if (table.rows() == 0) throw Error(ErrorCode::kSchemaError, path + ": no data rows");
  return DemandGeneration{table.columns[*demand], table.columns[*wind], table.columns[*solar]};
}

double overcapacity_scale(std::span<const double> demand_mw, std::span<const double> generation_mw,
                          double overcapacity) {
  if (demand_mw.size() != generation_mw.size() || demand_mw.empty()) {
    throw Error(ErrorCode::kDegenerateInput, "demand and generation must be nonempty and equally long");
  }
  const double mean_demand = mean_of(demand_mw);
  const double mean_generation = mean_of(generation_mw);
  if (!(mean_demand > 0.0) || !(mean_generation > 0.0)) {
    throw Error(ErrorCode::kDegenerateInput, "mean demand and mean generation must be positive");
  }
  if (!std::isfinite(overcapacity) || overcapacity <= -1.0) {
    throw Error(ErrorCode::kDegenerateInput, "overcapacity must be finite and above -1");
  }
  return (1.0 + overcapacity) * mean_demand / mean_generation;
}

ResidualTrace scale_to_overcapacity(std::span<const double> demand_mw,
                                    std::span<const double> generation_mw, double overcapacity) {
  const double k = overcapacity_scale(demand_mw, generation_mw, overcapacity);
  std::vector<double> residual(demand_mw.size());
  for (std::size_t i = 0; i < residual.size(); ++i) residual[i] = k * generation_mw[i] - demand_mw[i];
  ResidualTrace trace = make_trace(std::move(residual));
  trace.overcapacity = overcapacity;
  return trace;
}

DemandGeneration synthesize(const SynthParams& p) {
  require_finite_params(p);
  if (!(p.years * kHoursPerYear >= 1.0)) {
    throw Error(ErrorCode::kInvalidParams, "years must cover at least one hour");
  }
  if (p.solar_share < 0.0 || p.solar_share > 1.0) {
    throw Error(ErrorCode::kInvalidParams, "solar_share must lie in [0, 1]");
  }
  if (!(std::abs(p.ar_coeff) < 1.0)) throw Error(ErrorCode::kInvalidParams, "|ar_coeff| must be < 1");
  if (p.noise_sd < 0.0) throw Error(ErrorCode::kInvalidParams, "noise_sd must be nonnegative");
  if (!(p.base_demand_mw > 0.0)) throw Error(ErrorCode::kInvalidParams, "base demand must be positive");
  if (!(p.wind_mean_capacity_factor > 0.0)) {
    throw Error(ErrorCode::kInvalidParams, "wind capacity factor must be positive");
  }

  const auto hours = static_cast<std::size_t>(std::llround(p.years * kHoursPerYear));
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  NormalSource normal(p.seed);

  DemandGeneration out;
  out.demand_mw.resize(hours);
  std::vector<double> wind(hours);
  std::vector<double> solar(hours);

  double anomaly = p.noise_sd / std::sqrt(1.0 - p.ar_coeff * p.ar_coeff) * normal.next();
  for (std::size_t h = 0; h < hours; ++h) {
    const double hour_of_day = static_cast<double>(h % 24);
    const double season = std::cos(kTwoPi * static_cast<double>(h) / kHoursPerYear);
    const double diurnal = -std::cos(kTwoPi * (hour_of_day - 4.0) / 24.0);
    const double weekly = std::cos(kTwoPi * static_cast<double>(h) / 168.0);
    out.demand_mw[h] = p.base_demand_mw *
                       (1.0 + p.diurnal_amp * diurnal + p.seasonal_amp * season + p.weekly_amp * weekly);

    if (h > 0) anomaly = p.ar_coeff * anomaly + p.noise_sd * normal.next();
    wind[h] = std::clamp(p.wind_mean_capacity_factor * (1.0 + p.seasonal_amp * season) + anomaly, 0.0, 1.0);
    solar[h] = std::max(0.0, std::sin(std::numbers::pi * (hour_of_day - 6.0) / 12.0)) *
               std::max(0.0, 1.0 - p.seasonal_amp * season);
  }

  const double mean_demand = mean_of(out.demand_mw);
  const double mean_wind = mean_of(wind);
  const double mean_solar = mean_of(solar);
  if (!(mean_wind > 0.0) || (p.solar_share > 0.0 && !(mean_solar > 0.0))) {
    throw Error(ErrorCode::kInvalidParams, "generation profile is identically zero");
  }
  // Each source is normalised to unit mean before mixing, so solar_share is
  // the solar share of energy and mean generation equals mean demand.
  out.wind_mw.resize(hours);
  out.solar_mw.resize(hours);
  for (std::size_t h = 0; h < hours; ++h) {
    out.wind_mw[h] = (1.0 - p.solar_share) * mean_demand * wind[h] / mean_wind;
    out.solar_mw[h] = p.solar_share > 0.0 ? p.solar_share * mean_demand * solar[h] / mean_solar : 0.0;
  }
  return out;
}

TraceStats trace_stats(std::span<const double> values, std::size_t bins, std::size_t max_lag) {
  if (values.size() <= max_lag || values.size() < 2) {
    throw Error(ErrorCode::kInsufficientData, "need more than " + std::to_string(max_lag) + " samples");
  }
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "bins must be positive");

  TraceStats stats;
  stats.mean = mean_of(values);
  double sum_sq = 0.0;
  for (double x : values) sum_sq += (x - stats.mean) * (x - stats.mean);
  if (!(sum_sq > 0.0)) throw Error(ErrorCode::kInsufficientData, "series has zero variance");
  stats.stddev = std::sqrt(sum_sq / static_cast<double>(values.size()));

  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double width = (*hi_it - lo) / static_cast<double>(bins);
  stats.histogram.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    stats.histogram[b].left = lo + width * static_cast<double>(b);
    stats.histogram[b].right = b + 1 == bins ? *hi_it : lo + width * static_cast<double>(b + 1);
  }
  for (double x : values) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    stats.histogram[std::min(b, bins - 1)].count += 1;
  }

  stats.acf.resize(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + k < values.size(); ++t) {
      acc += (values[t] - stats.mean) * (values[t + k] - stats.mean);
    }
    stats.acf[k] = acc / sum_sq;
  }
  return stats;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_trace_csv(std::ostream& out, std::span<const double> residual_mw) {
  out << "hour,residual_mw\n";
  for (std::size_t i = 0; i < residual_mw.size(); ++i) {
    out << i + 1 << ',' << format_number(residual_mw[i]) << '\n';
  }
}

void write_demand_generation_csv(std::ostream& out, const DemandGeneration& series,
                                 std::span<const double> residual_mw) {
  out << "hour,demand_mw,wind_mw,solar_mw,residual_mw\n";
  for (std::size_t i = 0; i < residual_mw.size(); ++i) {
    out << i + 1 << ',' << format_number(series.demand_mw[i]) << ','
        << format_number(series.wind_mw[i]) << ',' << format_number(series.solar_mw[i]) << ','
        << format_number(residual_mw[i]) << '\n';
  }
}

void write_histogram_csv(std::ostream& out, const TraceStats& stats) {
  out << "bin_left,bin_right,count\n";
  for (const auto& bin : stats.histogram) {
    out << format_number(bin.left) << ',' << format_number(bin.right) << ',' << bin.count << '\n';
  }
}

void write_acf_csv(std::ostream& out, const TraceStats& stats) {
  out << "lag,acf\n";
  for (std::size_t k = 0; k < stats.acf.size(); ++k) {
    out << k << ',' << format_number(stats.acf[k]) << '\n';
  }
}

}  // namespace storesched
