#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "storesched/fleet.hpp"

namespace storesched {

// Per-store decay rates (per hour) of the value-function derivatives
// v_i(s) = exp(-lambda_i * s_i / P_i).
struct ValueParams {
  std::vector<double> lambdas_per_hour;
};

// Greatest discharge duration first.
struct Ggddf {};
// Greatest round-trip efficiency first, no cross-charging.
struct Grtef {};

using PolicyKind = std::variant<ValueParams, Ggddf, Grtef>;

inline constexpr std::size_t kUnlimitedTransfers = std::numeric_limits<std::size_t>::max();

// Throws kInvalidParams if the lambda count does not match the fleet or any
// lambda is negative or non-finite.
void validate_params(const ValueParams& params, const Fleet& fleet);
void validate_policy(const PolicyKind& policy, const Fleet& fleet);
std::string policy_name(const PolicyKind& policy);

std::vector<double> value_derivatives(const FleetState& state, const Fleet& fleet,
                                      const ValueParams& params);

// Greedy external allocation. When re >= 0 the surplus is offered to stores
// in `order`, each taking min(remaining, Q, (E - s) / eta) of external energy;
// when re < 0 the demand is served in `order`, each giving min(remaining, P, s).
// Whatever is left becomes spill or unserved energy. No cross-charging.
StepDecision allocate_external(const FleetState& state, double re_mw, const Fleet& fleet,
                               std::span<const std::size_t> order);

// The per-step linear programme under linearised value functions: external
// allocation by charging priority (descending eta*v) or discharging priority
// (ascending v), followed by cross-charging from the lowest-v supplier to the
// highest-eta*v receiver while v_i < eta_j * v_j. v is evaluated once at the
// start-of-step levels. `max_transfers` caps the number of cross-charge
// transfers and exists for analysis; the default runs the loop to completion.
StepDecision schedule_value_lp(const FleetState& state, double re_mw, const Fleet& fleet,
                               const ValueParams& params,
                               std::size_t max_transfers = kUnlimitedTransfers);

// Discharges in descending s/P; charges in descending (E - s)/P.
StepDecision schedule_ggddf(const FleetState& state, double re_mw, const Fleet& fleet);

// Charges and discharges in descending efficiency.
StepDecision schedule_grtef(const FleetState& state, double re_mw, const Fleet& fleet);

StepDecision schedule(const PolicyKind& policy, const FleetState& state, double re_mw,
                      const Fleet& fleet);

}  // namespace storesched
