#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "storesched/engine.hpp"
#include "storesched/fleet.hpp"
#include "storesched/policies.hpp"

namespace storesched {

// Unit prices in US dollars. They apply to dimensions in the split-sqrt
// convention, the one used when reporting store sizes.
struct StorePrices {
  double capacity_usd_per_kwh = 0.0;
  double output_usd_per_kw = 0.0;
  double input_usd_per_kw = 0.0;
};

inline constexpr StorePrices kHydrogenPrices{0.8, 429.0, 858.0};
inline constexpr StorePrices kAcaesPrices{9.0, 200.0, 200.0};
inline constexpr StorePrices kLiIonPrices{100.0, 0.0, 180.0};

// One entry per store, aligned with the dimensions being priced.
using CostTable = std::vector<StorePrices>;

struct StoreDims {
  double capacity_mwh = 0.0;
  double output_mw = 0.0;
  double input_mw = 0.0;

  auto operator<=>(const StoreDims&) const = default;
};

struct StoreCost {
  double capacity_usd = 0.0;
  double output_usd = 0.0;
  double input_usd = 0.0;

  double total_usd() const { return capacity_usd + output_usd + input_usd; }
};

struct CostBreakdown {
  std::vector<StoreCost> stores;
  double total_usd = 0.0;
};

// Throws kInvalidArgument on a size mismatch or a negative price.
CostBreakdown fleet_cost(std::span<const StoreDims> dims, std::span<const StorePrices> prices);
StoreCost store_cost(const StoreDims& dims, const StorePrices& prices);

struct ReliabilityStandard {
  double max_unserved_gwh_per_year = 24.0;
};

bool check_reliability(double total_unserved_mwh, double years, const ReliabilityStandard& standard);
bool check_reliability(const SimResult& result, double years, const ReliabilityStandard& standard);
// Largest cumulative unserved energy (MWh) the standard allows over `years`.
double unserved_allowance_mwh(double years, const ReliabilityStandard& standard);

struct MinStore {
  double capacity_mwh = 0.0;
  double initial_level_mwh = 0.0;
};

// True if a single store with unconstrained power, capacity E and initial
// level s0 serves every demand of the trace in full.
bool single_store_serves_all(std::span<const double> re_mw, double efficiency, double capacity_mwh,
                             double initial_level_mwh);

// Smallest E (starting full) that serves all demand with unconstrained input
// and output power, then the smallest initial level that still does at that
// E. Both are bisected to `tolerance_mwh`. InputSide convention. Throws
// kInfeasible when even E = total demand fails.
MinStore min_single_store_capacity(std::span<const double> re_mw, double efficiency,
                                   double tolerance_mwh = 1.0);

// Smallest output power of store 0 (bisected to `tolerance_mw`) for which the
// fleet, starting full and run under `policy`, meets the standard. The other
// dimensions are taken from `fleet` as given. Returns 0 when the trace has
// no demand. Throws kInfeasible if P = peak demand does not suffice.
double min_required_output_power(std::span<const double> re_mw, const Fleet& fleet,
                                 const ReliabilityStandard& standard, const PolicyKind& policy,
                                 double tolerance_mw = 100.0);

struct Technology {
  std::string name;
  double efficiency = 1.0;
  StorePrices prices;
};

// A store of fixed size taking part in a fleet optimisation. Dimensions are
// in the reporting convention of the run.
struct FixedStore {
  Technology technology;
  StoreDims dims;
};
using SecondaryCandidate = std::vector<FixedStore>;

struct SizingOptions {
  // Input-power grid for the optimised store: geometric from
  // q_grid_low_fraction * mean(positive re) to max(positive re).
  std::size_t q_grid_points = 32;
  double q_grid_low_fraction = 0.1;
  // Capacity bisection stops once hi - lo <= capacity_rel_tol * hi.
  double capacity_rel_tol = 1e-4;
  double power_tolerance_mw = 100.0;
  LossConvention reporting = LossConvention::kSplitSqrt;
  // Lambda vectors tried for fleets of two or more stores, each with one
  // entry per store (optimised store first). Empty means the product of
  // default_lambda_grid() over the stores.
  std::vector<std::vector<double>> lambda_candidates;
  // 0 uses the hardware concurrency.
  unsigned threads = 0;
};

struct GridPoint {
  double input_mw = 0.0;
  double capacity_mwh = 0.0;
  double cost_usd = 0.0;
};

struct SizedStore {
  std::string name;
  double efficiency = 1.0;
  // Reporting convention.
  StoreDims dims;
  StoreCost cost;
  double served_mwh = 0.0;
};

struct SizingResult {
  // Optimised store first, then the secondary stores.
  std::vector<SizedStore> stores;
  double total_cost_usd = 0.0;
  double unserved_gwh_per_year = 0.0;
  std::vector<double> lambdas_per_hour;
  LossConvention reporting = LossConvention::kSplitSqrt;
  // Evaluated (Q, E_min(Q)) points of the winning configuration.
  std::vector<GridPoint> grid;

  // The fleet in InputSide convention, ready to simulate.
  Fleet fleet() const;
};

// Fixes P by min_required_output_power, then for each Q on the grid bisects
// the least E meeting the standard and keeps the cheapest (E, P, Q). Ties go
// to the lexicographically smallest dimensions.
SizingResult optimize_single_store(std::span<const double> re_mw, const Technology& technology,
                                   const ReliabilityStandard& standard,
                                   const SizingOptions& options = {});

// For every secondary candidate and every lambda candidate, optimises the
// primary store as above with the candidate stores alongside it and returns
// the cheapest configuration overall. An empty candidate is the single-store
// problem.
SizingResult optimize_fleet(std::span<const double> re_mw, const Technology& primary,
                            std::span<const SecondaryCandidate> candidates,
                            const ReliabilityStandard& standard, const SizingOptions& options = {});

// {0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1} per hour.
std::vector<double> default_lambda_grid();
// All store_count-tuples over `values`, in lexicographic order.
std::vector<std::vector<double>> lambda_product_grid(std::span<const double> values,
                                                     std::size_t store_count);

// Lambda vector minimising total unserved energy with the fleet starting
// full. Ties go to the lexicographically smallest vector. Throws
// kInvalidArgument on an empty grid.
ValueParams tune_lambdas(const Fleet& fleet, std::span<const double> re_mw,
                         std::span<const std::vector<double>> candidates, unsigned threads = 0);

nlohmann::json to_json(const SizingResult& result);

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace storesched
