#include "storesched/sizing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "storesched/error.hpp"

namespace storesched {
namespace {

constexpr double kUsdPerMwhPerUsdPerKwh = 1e3;
constexpr double kUsdPerMwPerUsdPerKw = 1e3;

double total_demand_mwh(std::span<const double> re_mw) {
  double total = 0.0;
  for (double re : re_mw) total += std::max(0.0, -re);
  return total;
}

double years_of(std::span<const double> re_mw) {
  return static_cast<double>(re_mw.size()) / kHoursPerYear;
}

double total_unserved(const Fleet& fleet, std::span<const double> re_mw, const PolicyKind& policy) {
  return simulate(fleet, full_state(fleet), re_mw, policy, SimOptions{false}).total_unserved_mwh;
}

std::vector<double> q_grid(std::span<const double> re_mw, const SizingOptions& options) {
  double sum = 0.0;
  double peak = 0.0;
  std::size_t count = 0;
  for (double re : re_mw) {
    if (re <= 0.0) continue;
    sum += re;
    peak = std::max(peak, re);
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kInfeasible, "trace has no surplus to recharge from");
  const std::size_t points = std::max<std::size_t>(options.q_grid_points, 1);
  const double low = std::min(peak, options.q_grid_low_fraction * sum / static_cast<double>(count));
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = points == 1 ? peak
                          : low * std::pow(peak / low, static_cast<double>(k) /
                                                           static_cast<double>(points - 1));
  }
  grid.back() = peak;
  return grid;
}

StoreDims to_input_side(const StoreDims& dims, double efficiency, LossConvention from) {
  StoreDims out = dims;
  out.capacity_mwh = convert_energy(dims.capacity_mwh, efficiency, from, LossConvention::kInputSide);
  return out;
}

StoreDims to_reporting(const StoreDims& dims, double efficiency, LossConvention to) {
  StoreDims out = dims;
  out.capacity_mwh = convert_energy(dims.capacity_mwh, efficiency, LossConvention::kInputSide, to);
  return out;
}

// The primary store of `fleet` (index 0) is sized; the rest stay fixed.
struct Configuration {
  Fleet fleet;
  std::vector<FixedStore> secondaries;
  std::vector<double> lambdas;
};

struct Evaluated {
  bool feasible = false;
  StoreDims primary;  // InputSide
  std::vector<GridPoint> grid;
  double cost_usd = std::numeric_limits<double>::infinity();
};

double configuration_cost(const StoreDims& primary_input_side, const Technology& technology,
                          const std::vector<FixedStore>& secondaries, LossConvention reporting) {
  double cost = store_cost(to_reporting(primary_input_side, technology.efficiency, reporting),
                           technology.prices)
                    .total_usd();
  for (const auto& fixed : secondaries) cost += store_cost(fixed.dims, fixed.technology.prices).total_usd();
  return cost;
}

Evaluated size_primary(std::span<const double> re_mw, const Technology& technology,
                       Configuration config, const ReliabilityStandard& standard,
                       const SizingOptions& options) {
  const double allowance = unserved_allowance_mwh(years_of(re_mw), standard);
  const double demand = total_demand_mwh(re_mw);
  const PolicyKind policy = ValueParams{config.lambdas};
  Fleet& fleet = config.fleet;
  StoreSpec& primary = fleet[0];

  const std::vector<double> qs = q_grid(re_mw, options);
  primary.capacity_mwh = demand;
  primary.input_mw = qs.back();
  primary.output_mw = demand;
  const double p_star =
      min_required_output_power(re_mw, fleet, standard, policy, options.power_tolerance_mw);
  primary.output_mw = p_star;

  auto meets = [&](double capacity, double input) {
    primary.capacity_mwh = capacity;
    primary.input_mw = input;
    return total_unserved(fleet, re_mw, policy) <= allowance;
  };

  Evaluated best;
  double warm_hi = demand;
  for (double q : qs) {
    double hi = demand;
    if (warm_hi < demand && meets(warm_hi, q)) {
      hi = warm_hi;
    } else if (!meets(demand, q)) {
      continue;
    }
    double lo = 0.0;
    while (hi - lo > options.capacity_rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      (meets(mid, q) ? hi : lo) = mid;
    }
    warm_hi = hi;
    const StoreDims dims{hi, p_star, q};
    const double cost = configuration_cost(dims, technology, config.secondaries, options.reporting);
    best.grid.push_back(GridPoint{q, convert_energy(hi, technology.efficiency,
                                                    LossConvention::kInputSide, options.reporting),
                                  cost});
    const StoreDims reported = to_reporting(dims, technology.efficiency, options.reporting);
    if (!best.feasible || cost < best.cost_usd ||
        (cost == best.cost_usd &&
         reported < to_reporting(best.primary, technology.efficiency, options.reporting))) {
      best.feasible = true;
      best.cost_usd = cost;
      best.primary = dims;
    }
  }
  return best;
}

SizingResult report(std::span<const double> re_mw, const Technology& technology,
                    const Configuration& config, const Evaluated& evaluated,
                    const SizingOptions& options) {
  SizingResult result;
  result.reporting = options.reporting;
  result.lambdas_per_hour = config.lambdas;
  result.grid = evaluated.grid;

  const double years = years_of(re_mw);
  Fleet fleet = config.fleet;
  fleet[0].capacity_mwh = evaluated.primary.capacity_mwh;
  fleet[0].output_mw = evaluated.primary.output_mw;
  fleet[0].input_mw = evaluated.primary.input_mw;
  const SimResult sim = simulate(fleet, full_state(fleet), re_mw,
                                 PolicyKind{ValueParams{config.lambdas}}, SimOptions{false});
  const std::vector<double>& served = sim.served_external_mwh;
  const double unserved = sim.total_unserved_mwh;
  result.unserved_gwh_per_year = years > 0.0 ? unserved / years / 1e3 : 0.0;

  SizedStore primary{technology.name, technology.efficiency,
                     to_reporting(evaluated.primary, technology.efficiency, options.reporting),
                     {}, served[0]};
  primary.cost = store_cost(primary.dims, technology.prices);
  result.stores.push_back(primary);
  for (std::size_t k = 0; k < config.secondaries.size(); ++k) {
    const FixedStore& fixed = config.secondaries[k];
    SizedStore store{fixed.technology.name, fixed.technology.efficiency, fixed.dims,
                     store_cost(fixed.dims, fixed.technology.prices), served[k + 1]};
    result.stores.push_back(store);
  }
  for (const auto& store : result.stores) result.total_cost_usd += store.cost.total_usd();
  return result;
}

Configuration make_configuration(const Technology& primary, const SecondaryCandidate& candidate,
                                 std::vector<double> lambdas, LossConvention reporting) {
  Configuration config;
  config.fleet.push_back(StoreSpec{primary.name, 1.0, 1.0, 1.0, primary.efficiency});
  for (const auto& fixed : candidate) {
    if (fixed.dims.capacity_mwh == 0.0 && fixed.dims.output_mw == 0.0 && fixed.dims.input_mw == 0.0) {
      continue;
    }
    const StoreDims input_side = to_input_side(fixed.dims, fixed.technology.efficiency, reporting);
    config.fleet.push_back(StoreSpec{fixed.technology.name, input_side.capacity_mwh,
                                     input_side.output_mw, input_side.input_mw,
                                     fixed.technology.efficiency});
    config.secondaries.push_back(fixed);
  }
  config.lambdas = std::move(lambdas);
  return config;
}

SizingResult zero_result(const Technology& technology, const SizingOptions& options) {
  SizingResult result;
  result.reporting = options.reporting;
  result.lambdas_per_hour = {0.0};
  result.stores.push_back(SizedStore{technology.name, technology.efficiency, {}, {}, 0.0});
  return result;
}

}  // namespace

StoreCost store_cost(const StoreDims& dims, const StorePrices& prices) {
  if (prices.capacity_usd_per_kwh < 0.0 || prices.output_usd_per_kw < 0.0 ||
      prices.input_usd_per_kw < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "prices must be nonnegative");
  }
  return StoreCost{dims.capacity_mwh * prices.capacity_usd_per_kwh * kUsdPerMwhPerUsdPerKwh,
                   dims.output_mw * prices.output_usd_per_kw * kUsdPerMwPerUsdPerKw,
                   dims.input_mw * prices.input_usd_per_kw * kUsdPerMwPerUsdPerKw};
}

CostBreakdown fleet_cost(std::span<const StoreDims> dims, std::span<const StorePrices> prices) {
  if (dims.size() != prices.size()) {
    throw Error(ErrorCode::kInvalidArgument, "cost table and dimensions differ in length");
  }
  CostBreakdown breakdown;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    breakdown.stores.push_back(store_cost(dims[i], prices[i]));
    breakdown.total_usd += breakdown.stores.back().total_usd();
  }
  return breakdown;
}

double unserved_allowance_mwh(double years, const ReliabilityStandard& standard) {
  return standard.max_unserved_gwh_per_year * 1e3 * years;
}

bool check_reliability(double total_unserved_mwh, double years, const ReliabilityStandard& standard) {
  if (!(years > 0.0)) throw Error(ErrorCode::kInvalidArgument, "years must be positive");
  return total_unserved_mwh / years <= standard.max_unserved_gwh_per_year * 1e3;
}

bool check_reliability(const SimResult& result, double years, const ReliabilityStandard& standard) {
  return check_reliability(result.total_unserved_mwh, years, standard);
}

bool single_store_serves_all(std::span<const double> re_mw, double efficiency, double capacity_mwh,
                             double initial_level_mwh) {
  double s = std::min(initial_level_mwh, capacity_mwh);
  for (double re : re_mw) {
    if (re >= 0.0) {
      s = std::min(capacity_mwh, s + efficiency * re);
    } else {
      if (s < -re) return false;
      s += re;
    }
  }
  return true;
}

MinStore min_single_store_capacity(std::span<const double> re_mw, double efficiency,
                                   double tolerance_mwh) {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw Error(ErrorCode::kEfficiencyOutOfRange, "efficiency must lie in (0, 1]");
  }
  if (!(tolerance_mwh > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  const double demand = total_demand_mwh(re_mw);
  if (demand == 0.0) return {};
  if (!single_store_serves_all(re_mw, efficiency, demand, demand)) {
    throw Error(ErrorCode::kInfeasible, "no store size serves the trace");
  }
  double lo = 0.0;
  double hi = demand;
  while (hi - lo > tolerance_mwh) {
    const double mid = 0.5 * (lo + hi);
    (single_store_serves_all(re_mw, efficiency, mid, mid) ? hi : lo) = mid;
  }
  const double capacity = hi;
  lo = 0.0;
  while (hi - lo > tolerance_mwh) {
    const double mid = 0.5 * (lo + hi);
    (single_store_serves_all(re_mw, efficiency, capacity, mid) ? hi : lo) = mid;
  }
  return MinStore{capacity, hi};
}

double min_required_output_power(std::span<const double> re_mw, const Fleet& fleet,
                                 const ReliabilityStandard& standard, const PolicyKind& policy,
                                 double tolerance_mw) {
  if (fleet.empty()) throw Error(ErrorCode::kInvalidArgument, "fleet is empty");
  if (!(tolerance_mw > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  double peak = 0.0;
  for (double re : re_mw) peak = std::max(peak, -re);
  if (peak == 0.0) return 0.0;

  const double allowance = unserved_allowance_mwh(years_of(re_mw), standard);
  Fleet trial = fleet;
  auto meets = [&](double power) {
    trial[0].output_mw = power;
    return total_unserved(trial, re_mw, policy) <= allowance;
  };
  if (!meets(peak)) {
    throw Error(ErrorCode::kInfeasible, "standard not met even with output power at peak demand");
  }
  double lo = 0.0;
  double hi = peak;
  while (hi - lo > tolerance_mw) {
    const double mid = 0.5 * (lo + hi);
    (meets(mid) ? hi : lo) = mid;
  }
  return hi;
}

Fleet SizingResult::fleet() const {
  Fleet out;
  for (const auto& store : stores) {
    if (store.dims.capacity_mwh == 0.0) continue;
    const StoreDims dims = to_input_side(store.dims, store.efficiency, reporting);
    out.push_back(StoreSpec{store.name, dims.capacity_mwh, dims.output_mw, dims.input_mw,
                            store.efficiency});
  }
  return out;
}

SizingResult optimize_single_store(std::span<const double> re_mw, const Technology& technology,
                                   const ReliabilityStandard& standard, const SizingOptions& options) {
  const SecondaryCandidate none;
  return optimize_fleet(re_mw, technology, std::span<const SecondaryCandidate>(&none, 1), standard,
                        options);
}

SizingResult optimize_fleet(std::span<const double> re_mw, const Technology& primary,
                            std::span<const SecondaryCandidate> candidates,
                            const ReliabilityStandard& standard, const SizingOptions& options) {
  validate_spec(StoreSpec{primary.name, 1.0, 1.0, 1.0, primary.efficiency});
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "no secondary candidates");
  if (total_demand_mwh(re_mw) == 0.0) return zero_result(primary, options);

  std::vector<Configuration> configs;
  for (const auto& candidate : candidates) {
    const Configuration base = make_configuration(primary, candidate, {}, options.reporting);
    validate_fleet(Fleet(base.fleet.begin() + 1, base.fleet.end()));
    const std::size_t n = base.fleet.size();
    if (n == 1) {
      // One store: every lambda gives the same schedule.
      configs.push_back(make_configuration(primary, candidate, {0.0}, options.reporting));
      continue;
    }
    std::vector<std::vector<double>> lambdas = options.lambda_candidates;
    if (lambdas.empty()) lambdas = lambda_product_grid(default_lambda_grid(), n);
    for (auto& l : lambdas) {
      validate_params(ValueParams{l}, base.fleet);
      configs.push_back(make_configuration(primary, candidate, l, options.reporting));
    }
  }

  std::vector<Evaluated> evaluated(configs.size());
  parallel_for(configs.size(), options.threads, [&](std::size_t k) {
    evaluated[k] = size_primary(re_mw, primary, configs[k], standard, options);
  });

  std::size_t best = configs.size();
  std::vector<StoreDims> best_dims;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    if (!evaluated[k].feasible) continue;
    std::vector<StoreDims> dims{to_reporting(evaluated[k].primary, primary.efficiency, options.reporting)};
    for (const auto& fixed : configs[k].secondaries) dims.push_back(fixed.dims);
    if (best == configs.size() || evaluated[k].cost_usd < evaluated[best].cost_usd ||
        (evaluated[k].cost_usd == evaluated[best].cost_usd &&
         (dims < best_dims || (dims == best_dims && configs[k].lambdas < configs[best].lambdas)))) {
      best = k;
      best_dims = std::move(dims);
    }
  }
  if (best == configs.size()) throw Error(ErrorCode::kInfeasible, "no configuration meets the standard");
  return report(re_mw, primary, configs[best], evaluated[best], options);
}

std::vector<double> default_lambda_grid() { return {0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1}; }

std::vector<std::vector<double>> lambda_product_grid(std::span<const double> values,
                                                     std::size_t store_count) {
  std::vector<std::vector<double>> grid{{}};
  for (std::size_t s = 0; s < store_count; ++s) {
    std::vector<std::vector<double>> next;
    next.reserve(grid.size() * values.size());
    for (const auto& prefix : grid) {
      for (double v : values) {
        next.push_back(prefix);
        next.back().push_back(v);
      }
    }
    grid = std::move(next);
  }
  return grid;
}

ValueParams tune_lambdas(const Fleet& fleet, std::span<const double> re_mw,
                         std::span<const std::vector<double>> candidates, unsigned threads) {
  if (candidates.empty()) throw Error(ErrorCode::kInvalidArgument, "lambda grid is empty");
  validate_fleet(fleet);
  for (const auto& l : candidates) validate_params(ValueParams{l}, fleet);
  std::vector<double> unserved(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t k) {
    unserved[k] = total_unserved(fleet, re_mw, ValueParams{candidates[k]});
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < candidates.size(); ++k) {
    if (unserved[k] < unserved[best] ||
        (unserved[k] == unserved[best] && candidates[k] < candidates[best])) {
      best = k;
    }
  }
  return ValueParams{candidates[best]};
}

nlohmann::json to_json(const SizingResult& result) {
  nlohmann::json stores = nlohmann::json::array();
  for (const auto& store : result.stores) {
    stores.push_back({
        {"name", store.name},
        {"efficiency", store.efficiency},
        {"capacity_mwh", store.dims.capacity_mwh},
        {"output_mw", store.dims.output_mw},
        {"input_mw", store.dims.input_mw},
        {"capacity_cost_usd", store.cost.capacity_usd},
        {"output_cost_usd", store.cost.output_usd},
        {"input_cost_usd", store.cost.input_usd},
        {"total_cost_usd", store.cost.total_usd()},
        {"served_mwh", store.served_mwh},
    });
  }
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& point : result.grid) {
    grid.push_back({{"input_mw", point.input_mw},
                    {"capacity_mwh", point.capacity_mwh},
                    {"total_cost_usd", point.cost_usd}});
  }
  return {
      {"convention", std::string(to_string(result.reporting))},
      {"stores", stores},
      {"total_cost_usd", result.total_cost_usd},
      {"total_cost_usd_bn", result.total_cost_usd / 1e9},
      {"unserved_gwh_per_year", result.unserved_gwh_per_year},
      {"lambdas_per_hour", result.lambdas_per_hour},
      {"grid", grid},
  };
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        // Keep the failure of the lowest index so the error is reproducible.
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace storesched
