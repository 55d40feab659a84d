#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace storesched {

// Absolute slack (MWh) allowed on every feasibility check before a violation
// is raised. Levels within the slack of a bound are clamped onto it.
inline constexpr double kFeasibilitySlack = 1e-6;

// One storage technology. Timesteps are one hour, so a rate in MW moves the
// same number of MWh per step.
//
// Capacity and levels use the servable-energy convention: a store holding
// s MWh can deliver exactly s MWh, with all round-trip loss booked on input.
// Output and input power may be +infinity to model an unconstrained store.
struct StoreSpec {
  std::string name;
  double capacity_mwh = 0.0;
  double output_mw = 0.0;
  double input_mw = 0.0;
  double efficiency = 1.0;
};

using Fleet = std::vector<StoreSpec>;

enum class LossConvention {
  // Losses booked entirely at the input; level = energy the store can serve.
  kInputSide,
  // Input and output efficiencies both sqrt(eta); levels read eta^-0.5 larger.
  kSplitSqrt,
};

struct FleetState {
  std::vector<double> levels_mwh;
  std::int64_t hour = 0;
};

// Signed per-store rates for one step (positive = charging) plus the
// resulting spilled or unserved energy. At most one of the two is nonzero.
struct StepDecision {
  std::vector<double> rates_mw;
  double spill_mwh = 0.0;
  double unserved_mwh = 0.0;
};

// Throws Error(kNonPositiveDimension | kEfficiencyOutOfRange).
void validate_spec(const StoreSpec& spec);
void validate_fleet(const Fleet& fleet);
// Throws kCapacityViolation if a level is outside [0, E] or the sizes differ.
void validate_state(const FleetState& state, const Fleet& fleet);

FleetState full_state(const Fleet& fleet);
std::vector<double> efficiencies(const Fleet& fleet);

// Largest feasible positive rate: min(E - s, eta * Q).
double max_charge_rate(const StoreSpec& spec, double level_mwh);
// Largest feasible discharge, as a positive number: min(s, P).
double max_discharge_rate(const StoreSpec& spec, double level_mwh);

// s'(i) = s(i) + r(i). Throws kRateViolation when -P <= r <= eta*Q fails and
// kCapacityViolation when the new level leaves [0, E] (both beyond the slack).
FleetState apply_step(const FleetState& state, const StepDecision& decision,
                      const Fleet& fleet);

// u = re - sum_{r<0} r - sum_{r>=0} r / eta. Positive u is spill, negative u
// is unserved demand.
double imbalance(double re_mw, std::span<const double> rates_mw,
                 std::span<const double> etas);
double imbalance(double re_mw, std::span<const double> rates_mw, const Fleet& fleet);

// Energy moved between stores within a step, measured at the supplier side.
double cross_charge_volume(double re_mw, std::span<const double> rates_mw,
                           const Fleet& fleet);

// Stores with a common efficiency and common E/P and E/Q ratios behave as a
// single store with summed dimensions. Throws kNotEquivalent otherwise.
StoreSpec merge_equivalent(std::span<const StoreSpec> stores);

struct ConvertedStore {
  StoreSpec spec;
  double level_mwh = 0.0;
};

// Capacity and level scale by eta^-0.5 going InputSide -> SplitSqrt; power
// ratings and efficiency are unchanged.
ConvertedStore convert_convention(const StoreSpec& spec, double level_mwh,
                                  LossConvention from, LossConvention to);
double convert_energy(double energy_mwh, double efficiency, LossConvention from,
                      LossConvention to);

std::string_view to_string(LossConvention convention);

}  // namespace storesched
