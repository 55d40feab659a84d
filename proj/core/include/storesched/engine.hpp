#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "storesched/error.hpp"
#include "storesched/fleet.hpp"
#include "storesched/policies.hpp"
#include "storesched/traces.hpp"

namespace storesched {

// Any non-anticipatory rule mapping (state, re) to a decision.
using StepPolicy = std::function<StepDecision(const FleetState&, double, const Fleet&)>;

// rates_mw[t][i] is the rate of store i during step t + 1.
struct PolicyTrace {
  std::vector<std::vector<double>> rates_mw;

  std::size_t steps() const { return rates_mw.size(); }
};

struct SimOptions {
  // When false only totals and the final state are kept; per-step series and
  // the policy trace stay empty. Used by the sizing searches.
  bool record_series = true;
};

struct SimResult {
  // Index t holds the running total after step t + 1.
  std::vector<double> unserved_cumulative_mwh;
  std::vector<double> spill_cumulative_mwh;
  // level_traces_mwh[i][t] is the level of store i after step t + 1.
  std::vector<std::vector<double>> level_traces_mwh;
  PolicyTrace policy;
  // Energy delivered to demand by each store. In a step where both a
  // discharging store and a receiving store are active, the served part is
  // attributed to the dischargers in proportion to their discharge.
  std::vector<double> served_external_mwh;
  double cross_charged_mwh = 0.0;
  double total_unserved_mwh = 0.0;
  double total_spill_mwh = 0.0;
  FleetState final_state;
};

// Throws the fleet errors (kRateViolation, kCapacityViolation) or
// kOverchargeViolation / kOverserveViolation when a decision breaks the sign
// rules, all of which indicate a faulty policy.
SimResult simulate(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                   const StepPolicy& policy, const SimOptions& options = {});
SimResult simulate(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                   const PolicyKind& policy, const SimOptions& options = {});
SimResult simulate(const Fleet& fleet, const FleetState& initial, const ResidualTrace& trace,
                   const PolicyKind& policy, const SimOptions& options = {});

// Re-runs a recorded rate matrix. Throws like simulate if it is infeasible.
SimResult replay(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                 const PolicyTrace& policy, const SimOptions& options = {});

// Cumulative sum of max(0, -re(t) - P_total): demand that no fleet with total
// output power P_total could serve.
std::vector<double> lower_bound_unserved(std::span<const double> re_mw, double total_output_mw);

// First violation of the rate, capacity or sign rules, if any.
std::optional<Violation> verify_feasible(const Fleet& fleet, const FleetState& initial,
                                         std::span<const double> re_mw,
                                         const PolicyTrace& policy);

// First step at which spill (or unserved energy) exceeds the slack while some
// store is not at its maximum charge (or discharge). Assumes feasibility.
std::optional<Violation> verify_greedy(const Fleet& fleet, const FleetState& initial,
                                       std::span<const double> re_mw, const PolicyTrace& policy);

// Turns a feasible policy into a greedy one whose cumulative unserved energy
// is nowhere larger. Steps are visited in order; a step with spill has its
// rates raised until the spill is absorbed or every store is at maximum
// charge, and one with unserved energy has them lowered likewise. Later
// steps are then capped against the modified levels, with any sign-rule
// breach this causes undone on the opposite side. Throws kInfeasibleInput.
PolicyTrace greedify(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                     const PolicyTrace& policy);

// Columns: hour, re_mw, rate_<name>..., level_<name>..., spill_cum_mwh,
// unserved_cum_mwh. Levels are written in `convention`; the result must have
// been recorded with record_series.
void write_sim_csv(std::ostream& out, const Fleet& fleet, std::span<const double> re_mw,
                   const SimResult& result, LossConvention convention);

}  // namespace storesched
