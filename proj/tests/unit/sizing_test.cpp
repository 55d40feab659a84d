#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <vector>

#include "../oracles/min_store_oracle.hpp"
#include "../oracles/random_instances.hpp"
#include "helpers.hpp"
#include "storesched/error.hpp"
#include "storesched/sizing.hpp"
#include "storesched/traces.hpp"

namespace {

using namespace storesched;
using testutil::kInf;
using testutil::state;
using testutil::store;

constexpr double kBn = 1e9;

TEST(FleetCost, SingleHydrogenStore) {
  const std::vector<StoreDims> dims{{120.4e6, 115.9e3, 80.0e3}};
  const std::vector<StorePrices> prices{kHydrogenPrices};
  const CostBreakdown c = fleet_cost(dims, prices);
  EXPECT_NEAR(c.stores[0].capacity_usd / kBn, 96.3, 0.05);
  EXPECT_NEAR(c.stores[0].output_usd / kBn, 49.7, 0.05);
  EXPECT_NEAR(c.stores[0].input_usd / kBn, 68.6, 0.05);
  EXPECT_NEAR(c.total_usd / kBn, 214.7, 0.05);
}

TEST(FleetCost, MediumAcaesStore) {
  const StoreCost c = store_cost({2.5e6, 21.0e3, 21.1e3}, kAcaesPrices);
  EXPECT_NEAR(c.capacity_usd / kBn, 22.5, 0.05);
  EXPECT_NEAR(c.output_usd / kBn, 4.2, 0.05);
  EXPECT_NEAR(c.input_usd / kBn, 4.2, 0.05);
  EXPECT_NEAR(c.total_usd() / kBn, 30.9, 0.05);
}

TEST(FleetCost, ZeroDims) {
  const std::vector<StoreDims> dims{{}, {}};
  const std::vector<StorePrices> prices{kHydrogenPrices, kLiIonPrices};
  EXPECT_EQ(fleet_cost(dims, prices).total_usd, 0.0);
}

TEST(FleetCost, LinearAndNonnegative) {
  oracle::Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    const StoreDims d{rng.uniform(0, 1e6), rng.uniform(0, 1e4), rng.uniform(0, 1e4)};
    const StorePrices p{rng.uniform(0, 10), rng.uniform(0, 500), rng.uniform(0, 500)};
    const double scale = rng.uniform(0, 5);
    const double base = store_cost(d, p).total_usd();
    EXPECT_GE(base, 0.0);
    const StoreDims scaled{scale * d.capacity_mwh, scale * d.output_mw, scale * d.input_mw};
    EXPECT_NEAR(store_cost(scaled, p).total_usd(), scale * base, 1e-9 * std::max(1.0, scale * base));
  }
}

TEST(FleetCost, RejectsBadInput) {
  const std::vector<StoreDims> dims{{1, 1, 1}};
  const std::vector<StorePrices> none;
  EXPECT_THROW(fleet_cost(dims, none), Error);
  const std::vector<StorePrices> negative{{-1, 0, 0}};
  EXPECT_THROW(fleet_cost(dims, negative), Error);
}

TEST(CheckReliability, Examples) {
  const ReliabilityStandard standard;
  EXPECT_TRUE(check_reliability(0.0, 1.0, standard));
  EXPECT_TRUE(check_reliability(0.888e6, 37.0, standard));
  EXPECT_FALSE(check_reliability(25e3, 1.0, standard));
  EXPECT_DOUBLE_EQ(unserved_allowance_mwh(2.0, standard), 48e3);
}

TEST(CheckReliability, FromSimulation) {
  const Fleet fleet{store(10, 8, 8, 1)};
  const std::vector<double> re{-10};
  const SimResult r = simulate(fleet, state({3}), re, PolicyKind{Grtef{}});
  EXPECT_TRUE(check_reliability(r, 1.0, ReliabilityStandard{0.007}));
  EXPECT_FALSE(check_reliability(r, 1.0, ReliabilityStandard{0.0069}));
}

TEST(MinSingleStore, ToyTraceLossless) {
  const std::vector<double> re{10, -4, -4, -4};
  const MinStore m = min_single_store_capacity(re, 1.0, 1e-6);
  const auto grid = oracle::grid_min_store(re, 1.0, 0.5, 20);
  ASSERT_TRUE(grid);
  EXPECT_EQ(grid->capacity, 12.0);
  EXPECT_EQ(grid->initial_level, 2.0);
  EXPECT_NEAR(m.capacity_mwh, 12.0, 1e-5);
  EXPECT_NEAR(m.initial_level_mwh, 2.0, 1e-5);
}

TEST(MinSingleStore, ToyTraceQuarterEfficiency) {
  const std::vector<double> re{10, -4, -4, -4};
  const MinStore m = min_single_store_capacity(re, 0.25, 1e-6);
  const auto grid = oracle::grid_min_store(re, 0.25, 0.5, 20);
  ASSERT_TRUE(grid);
  EXPECT_EQ(grid->capacity, 12.0);
  EXPECT_EQ(grid->initial_level, 9.5);
  EXPECT_NEAR(m.capacity_mwh, 12.0, 1e-5);
  EXPECT_NEAR(m.initial_level_mwh, 9.5, 1e-5);
}

TEST(MinSingleStore, NothingToServe) {
  const std::vector<double> re{1, 0, 3};
  const MinStore m = min_single_store_capacity(re, 0.5);
  EXPECT_EQ(m.capacity_mwh, 0.0);
  EXPECT_EQ(m.initial_level_mwh, 0.0);
}

TEST(MinSingleStore, NeverExceedsTotalDemand) {
  // A full store holding the total demand serves everything, so the search
  // always has a feasible upper end.
  oracle::Rng rng(20);
  for (int k = 0; k < 200; ++k) {
    const auto re = oracle::random_trace(rng, 30, 10.0);
    double demand = 0.0;
    for (double x : re) demand += std::max(0.0, -x);
    EXPECT_LE(min_single_store_capacity(re, rng.uniform(0.1, 1.0)).capacity_mwh, demand);
  }
}

TEST(MinSingleStore, BisectionIsTight) {
  oracle::Rng rng(21);
  for (int k = 0; k < 200; ++k) {
    const auto re = oracle::random_trace(rng, 40, 10.0);
    const double eta = rng.uniform(0.2, 1.0);
    const double tol = 1e-3;
    const MinStore m = min_single_store_capacity(re, eta, tol);
    if (m.capacity_mwh == 0.0) continue;
    EXPECT_TRUE(single_store_serves_all(re, eta, m.capacity_mwh, m.capacity_mwh));
    EXPECT_FALSE(single_store_serves_all(re, eta, m.capacity_mwh - tol, m.capacity_mwh - tol));
    EXPECT_TRUE(single_store_serves_all(re, eta, m.capacity_mwh, m.initial_level_mwh));
    if (m.initial_level_mwh > tol) {
      EXPECT_FALSE(single_store_serves_all(re, eta, m.capacity_mwh, m.initial_level_mwh - tol));
    }
    EXPECT_TRUE(oracle::serves_all(re, eta, m.capacity_mwh, m.initial_level_mwh));
  }
}

TEST(MinSingleStore, AgreesWithGridOracle) {
  oracle::Rng rng(22);
  for (int k = 0; k < 100; ++k) {
    std::vector<double> re;
    for (int t = 0; t < 12; ++t) re.push_back(static_cast<double>(static_cast<int>(rng.index(21)) - 10));
    const double eta = rng.coin(0.5) ? 1.0 : 0.5;
    const auto grid = oracle::grid_min_store(re, eta, 0.25, 200);
    ASSERT_TRUE(grid);
    const MinStore m = min_single_store_capacity(re, eta, 1e-6);
    // Integer demands and eta in {1, 1/2} put the exact optimum on the grid.
    EXPECT_NEAR(m.capacity_mwh, grid->capacity, 1e-5);
    EXPECT_NEAR(m.initial_level_mwh, grid->initial_level, 1e-5);
  }
}

TEST(MinSingleStore, NonincreasingInEfficiency) {
  oracle::Rng rng(23);
  for (int k = 0; k < 100; ++k) {
    const auto re = oracle::random_trace(rng, 60, 10.0);
    double previous = kInf;
    for (double eta : {0.2, 0.4, 0.7, 0.9, 1.0}) {
      const double e = min_single_store_capacity(re, eta, 1e-4).capacity_mwh;
      EXPECT_LE(e, previous + 1e-4);
      previous = e;
    }
  }
}

TEST(MinRequiredOutputPower, PeakDemandWithAmpleEnergy) {
  const std::vector<double> re{-3, -7, 5, -2};
  const Fleet fleet{store(1000, 1, 1000, 1)};
  const double p = min_required_output_power(re, fleet, ReliabilityStandard{0.0}, PolicyKind{Grtef{}}, 1e-4);
  EXPECT_GE(p, 7.0);
  EXPECT_LE(p, 7.0 + 1e-4);
}

TEST(MinRequiredOutputPower, NoDemand) {
  const std::vector<double> re{3, 0, 2};
  const Fleet fleet{store(1000, 1, 1000, 1)};
  EXPECT_EQ(min_required_output_power(re, fleet, ReliabilityStandard{0.0}, PolicyKind{Grtef{}}), 0.0);
}

TEST(MinRequiredOutputPower, InfeasibleWhenEnergyRunsOut) {
  const std::vector<double> re{-3, -7};
  const Fleet fleet{store(5, 1, 1000, 1)};
  try {
    min_required_output_power(re, fleet, ReliabilityStandard{0.0}, PolicyKind{Grtef{}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(MinRequiredOutputPower, RelaxingStandardNeverRaisesPower) {
  oracle::Rng rng(24);
  for (int k = 0; k < 50; ++k) {
    const auto re = oracle::random_trace(rng, 200, 10.0);
    const Fleet fleet{store(1e4, 1, 1e4, rng.uniform(0.3, 1.0))};
    double previous = kInf;
    for (double gwh : {0.0, 0.05, 0.5, 5.0}) {
      const double p = min_required_output_power(re, fleet, ReliabilityStandard{gwh}, PolicyKind{Grtef{}}, 1e-3);
      EXPECT_LE(p, previous + 1e-3);
      previous = p;
    }
  }
}

// A month of synthetic data at a small scale.
std::vector<double> small_trace(std::uint64_t seed) {
  SynthParams p;
  p.years = 30.0 / 365.0;
  p.seed = seed;
  p.base_demand_mw = 100.0;
  const DemandGeneration dg = synthesize(p);
  return scale_to_overcapacity(dg.demand_mw, dg.generation_mw(), 0.2).values_mw;
}

const Technology kHydrogen{"long", 0.4, kHydrogenPrices};
const Technology kAcaes{"medium", 0.7, kAcaesPrices};

SizingOptions small_options() {
  SizingOptions o;
  o.q_grid_points = 8;
  o.capacity_rel_tol = 1e-6;
  o.power_tolerance_mw = 0.01;
  o.reporting = LossConvention::kInputSide;
  o.threads = 1;
  return o;
}

TEST(OptimizeSingleStore, NoDeficits) {
  const std::vector<double> re{1, 2, 3};
  const SizingResult r = optimize_single_store(re, kHydrogen, ReliabilityStandard{});
  ASSERT_EQ(r.stores.size(), 1u);
  EXPECT_EQ(r.stores[0].dims, StoreDims{});
  EXPECT_EQ(r.total_cost_usd, 0.0);
}

TEST(OptimizeSingleStore, MeetsStandardAndBeatsItsGrid) {
  const auto re = small_trace(3);
  const ReliabilityStandard standard{0.05};
  const SizingResult r = optimize_single_store(re, kHydrogen, standard, small_options());
  ASSERT_FALSE(r.grid.empty());
  for (const GridPoint& g : r.grid) EXPECT_LE(r.total_cost_usd, g.cost_usd);
  const Fleet fleet = r.fleet();
  const SimResult sim = simulate(fleet, full_state(fleet), re, PolicyKind{ValueParams{{0.0}}});
  EXPECT_TRUE(check_reliability(sim, static_cast<double>(re.size()) / kHoursPerYear, standard));
  EXPECT_NEAR(r.stores[0].cost.total_usd(), r.total_cost_usd, 1e-6);
}

TEST(OptimizeSingleStore, MatchesExhaustiveCapacityScan) {
  const auto re = small_trace(4);
  const ReliabilityStandard standard{0.05};
  const SizingResult r = optimize_single_store(re, kHydrogen, standard, small_options());
  const double allowance = unserved_allowance_mwh(static_cast<double>(re.size()) / kHoursPerYear, standard);
  double demand = 0.0;
  for (double x : re) demand += std::max(0.0, -x);
  const double step = demand / 2000.0;
  const double p = r.stores[0].dims.output_mw;

  double best = kInf;
  for (const GridPoint& g : r.grid) {
    // Smallest lattice capacity that meets the standard at this input power.
    double e_lattice = kInf;
    for (double e = step; e <= demand + step; e += step) {
      const Fleet fleet{store(e, p, g.input_mw, kHydrogen.efficiency)};
      if (simulate(fleet, full_state(fleet), re, PolicyKind{ValueParams{{0.0}}}, SimOptions{false})
              .total_unserved_mwh <= allowance) {
        e_lattice = e;
        break;
      }
    }
    EXPECT_LE(g.capacity_mwh, e_lattice + 1e-6 * e_lattice);
    EXPECT_GE(g.capacity_mwh, e_lattice - step);
    best = std::min(best, store_cost({e_lattice, p, g.input_mw}, kHydrogenPrices).total_usd());
  }
  const double resolution = store_cost({step, 0, 0}, kHydrogenPrices).total_usd();
  EXPECT_LE(r.total_cost_usd, best + 1e-6 * best);
  EXPECT_GE(r.total_cost_usd, best - resolution);
}

TEST(OptimizeSingleStore, FreeInputPowerGoesToGridMaximum) {
  const auto re = small_trace(5);
  const Technology free_input{"long", 0.4, {0.8, 429, 0}};
  const SizingResult r = optimize_single_store(re, free_input, ReliabilityStandard{0.05}, small_options());
  // Input power is free, so only E matters: the winner has the least E on
  // the grid, which is the E reached at the largest Q.
  const double max_surplus = *std::max_element(re.begin(), re.end());
  ASSERT_DOUBLE_EQ(r.grid.back().input_mw, max_surplus);
  for (const GridPoint& g : r.grid) EXPECT_LE(r.stores[0].dims.capacity_mwh, g.capacity_mwh);
  EXPECT_DOUBLE_EQ(r.stores[0].dims.capacity_mwh, r.grid.back().capacity_mwh);
}

TEST(OptimizeSingleStore, OutputPowerIsMinimal) {
  const auto re = small_trace(6);
  const ReliabilityStandard standard{0.05};
  const SizingOptions options = small_options();
  const SizingResult r = optimize_single_store(re, kHydrogen, standard, options);
  double demand = 0.0;
  for (double x : re) demand += std::max(0.0, -x);
  const double peak = *std::max_element(re.begin(), re.end());
  const Fleet probe{store(demand, r.stores[0].dims.output_mw - 2 * options.power_tolerance_mw, peak, 0.4)};
  const double years = static_cast<double>(re.size()) / kHoursPerYear;
  EXPECT_FALSE(check_reliability(simulate(probe, full_state(probe), re, PolicyKind{ValueParams{{0.0}}}), years,
                                 standard));
}

TEST(OptimizeFleet, ZeroSecondaryReducesToSingle) {
  const auto re = small_trace(7);
  const ReliabilityStandard standard{0.05};
  const SizingResult single = optimize_single_store(re, kHydrogen, standard, small_options());
  const std::vector<SecondaryCandidate> candidates{{FixedStore{kAcaes, {}}}};
  const SizingResult fleet = optimize_fleet(re, kHydrogen, candidates, standard, small_options());
  EXPECT_EQ(fleet.total_cost_usd, single.total_cost_usd);
  EXPECT_EQ(fleet.stores.size(), 1u);
  EXPECT_EQ(fleet.stores[0].dims, single.stores[0].dims);
}

TEST(OptimizeFleet, ExtraCandidateNeverRaisesCost) {
  const auto re = small_trace(8);
  const ReliabilityStandard standard{0.05};
  SizingOptions options = small_options();
  options.lambda_candidates = {{0.0, 0.0}, {0.001, 0.01}, {0.0, 0.1}};
  const SizingResult single = optimize_single_store(re, kHydrogen, standard, options);
  const std::vector<SecondaryCandidate> candidates{
      {}, {FixedStore{kAcaes, {200, 10, 10}}}, {FixedStore{kAcaes, {500, 20, 20}}}};
  const SizingResult mixed = optimize_fleet(re, kHydrogen, candidates, standard, options);
  EXPECT_LE(mixed.total_cost_usd, single.total_cost_usd);
  double total = 0.0;
  for (const auto& s : mixed.stores) total += s.cost.total_usd();
  EXPECT_NEAR(total, mixed.total_cost_usd, 1e-6);
}

TEST(TuneLambdas, SingleStoreReturnsFirstCandidate) {
  const auto re = small_trace(9);
  const Fleet fleet{store(500, 60, 60, 0.4)};
  const std::vector<std::vector<double>> grid{{0.001}, {0.0}, {0.1}};
  EXPECT_EQ(tune_lambdas(fleet, re, grid).lambdas_per_hour, (std::vector<double>{0.0}));
}

TEST(TuneLambdas, AttainsGridMinimum) {
  const auto re = small_trace(10);
  const Fleet fleet{store(800, 60, 40, 0.4), store(80, 20, 20, 0.7)};
  const auto values = default_lambda_grid();
  const auto grid = lambda_product_grid(values, 2);
  const ValueParams best = tune_lambdas(fleet, re, grid, 1);
  const double best_ue = simulate(fleet, full_state(fleet), re, PolicyKind{best}).total_unserved_mwh;
  for (const auto& lambdas : grid) {
    EXPECT_LE(best_ue, simulate(fleet, full_state(fleet), re, PolicyKind{ValueParams{lambdas}}).total_unserved_mwh);
  }
}

TEST(TuneLambdas, PowerBoundOnlyInstanceHitsLowerBound) {
  const std::vector<double> re{-12, 3, -2, -20, -7, 1, -15};
  const Fleet fleet{store(1e4, 5, 5, 0.5), store(1e4, 5, 5, 0.8)};
  const std::vector<std::vector<double>> grid{{0.0, 0.0}, {0.1, 0.0}};
  const ValueParams best = tune_lambdas(fleet, re, grid);
  EXPECT_EQ(best.lambdas_per_hour, (std::vector<double>{0.0, 0.0}));
  const double ue = simulate(fleet, full_state(fleet), re, PolicyKind{best}).total_unserved_mwh;
  EXPECT_DOUBLE_EQ(ue, lower_bound_unserved(re, 10.0).back());
}

TEST(TuneLambdas, EmptyGrid) {
  const std::vector<double> re{-1};
  const Fleet fleet{store(10, 5, 5, 0.5)};
  EXPECT_THROW(tune_lambdas(fleet, re, std::vector<std::vector<double>>{}), Error);
}

TEST(LambdaGrid, DefaultsAndProduct) {
  EXPECT_EQ(default_lambda_grid(), (std::vector<double>{0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 0.1}));
  const std::vector<double> values{0, 1};
  EXPECT_EQ(lambda_product_grid(values, 2),
            (std::vector<std::vector<double>>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
}

TEST(ParallelFor, VisitsEveryIndexAndRethrowsLowest) {
  std::vector<std::atomic<int>> hits(100);
  parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  try {
    parallel_for(50, 3, [](std::size_t i) {
      if (i % 10 == 7) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "7");
  }
}

TEST(SizingJson, ReportsTotalsAndStores) {
  SizingResult r;
  r.stores.push_back(SizedStore{"long", 0.4, {1e6, 1e3, 2e3}, store_cost({1e6, 1e3, 2e3}, kHydrogenPrices), 5.0});
  r.total_cost_usd = r.stores[0].cost.total_usd();
  r.lambdas_per_hour = {0.0};
  const nlohmann::json j = to_json(r);
  EXPECT_EQ(j.at("convention"), "split");
  EXPECT_DOUBLE_EQ(j.at("total_cost_usd_bn").get<double>(), r.total_cost_usd / 1e9);
  EXPECT_EQ(j.at("stores").at(0).at("name"), "long");
  EXPECT_DOUBLE_EQ(j.at("stores").at(0).at("served_mwh").get<double>(), 5.0);
}

}  // namespace
