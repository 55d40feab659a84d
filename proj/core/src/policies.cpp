#include "storesched/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "storesched/error.hpp"

namespace storesched {
namespace {

// Indices sorted by key, highest first when `descending`; equal keys keep
// ascending index order.
std::vector<std::size_t> priority_order(const std::vector<double>& key, bool descending) {
  std::vector<std::size_t> order(key.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? key[a] > key[b] : key[a] < key[b];
  });
  return order;
}

// s / P, with an unconstrained output giving zero duration.
double duration_hours(double energy_mwh, double power_mw) {
  return std::isinf(power_mw) ? 0.0 : energy_mwh / power_mw;
}

}  // namespace

void validate_params(const ValueParams& params, const Fleet& fleet) {
  if (params.lambdas_per_hour.size() != fleet.size()) {
    throw Error(ErrorCode::kInvalidParams,
                "expected " + std::to_string(fleet.size()) + " lambdas, got " +
                    std::to_string(params.lambdas_per_hour.size()));
  }
  for (double lambda : params.lambdas_per_hour) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorCode::kInvalidParams,
                  "lambda must be finite and nonnegative, got " + std::to_string(lambda));
    }
  }
}

void validate_policy(const PolicyKind& policy, const Fleet& fleet) {
  if (const auto* params = std::get_if<ValueParams>(&policy)) validate_params(*params, fleet);
}

std::string policy_name(const PolicyKind& policy) {
  if (std::holds_alternative<Ggddf>(policy)) return "ggddf";
  if (std::holds_alternative<Grtef>(policy)) return "grtef";
  return "value";
}

std::vector<double> value_derivatives(const FleetState& state, const Fleet& fleet,
                                      const ValueParams& params) {
  validate_params(params, fleet);
  std::vector<double> v(fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const double lambda = params.lambdas_per_hour[i];
    v[i] = lambda == 0.0 ? 1.0
                         : std::exp(-lambda * duration_hours(state.levels_mwh[i], fleet[i].output_mw));
  }
  return v;
}

StepDecision allocate_external(const FleetState& state, double re_mw, const Fleet& fleet,
                               std::span<const std::size_t> order) {
  StepDecision decision;
  decision.rates_mw.assign(fleet.size(), 0.0);
  if (re_mw >= 0.0) {
    double remaining = re_mw;
    for (std::size_t i : order) {
      if (remaining <= 0.0) break;
      const StoreSpec& spec = fleet[i];
      const double headroom = std::max(0.0, spec.capacity_mwh - state.levels_mwh[i]);
      const double taken = std::min({remaining, spec.input_mw, headroom / spec.efficiency});
      if (taken <= 0.0) continue;
      // Filling to the brim is written exactly so the level lands on E.
      decision.rates_mw[i] = taken == headroom / spec.efficiency ? headroom
                                                                 : spec.efficiency * taken;
      remaining -= taken;
    }
    decision.spill_mwh = std::max(0.0, remaining);
  } else {
    double remaining = -re_mw;
    for (std::size_t i : order) {
      if (remaining <= 0.0) break;
      const double served = std::min(remaining, max_discharge_rate(fleet[i], state.levels_mwh[i]));
      if (served <= 0.0) continue;
      decision.rates_mw[i] = -served;
      remaining -= served;
    }
    decision.unserved_mwh = std::max(0.0, remaining);
  }
  return decision;
}

StepDecision schedule_value_lp(const FleetState& state, double re_mw, const Fleet& fleet,
                               const ValueParams& params, std::size_t max_transfers) {
  const std::vector<double> v = value_derivatives(state, fleet, params);
  const std::size_t n = fleet.size();
  std::vector<double> charge_priority(n);
  for (std::size_t i = 0; i < n; ++i) charge_priority[i] = fleet[i].efficiency * v[i];

  StepDecision decision =
      re_mw >= 0.0 ? allocate_external(state, re_mw, fleet, priority_order(charge_priority, true))
                   : allocate_external(state, re_mw, fleet, priority_order(v, false));

  // With spill every store is already at maximum charge, and with unserved
  // energy every store is at maximum discharge; nothing can be moved.
  if (decision.spill_mwh > 0.0 || decision.unserved_mwh > 0.0) return decision;

  const auto& s = state.levels_mwh;
  auto& r = decision.rates_mw;
  for (std::size_t transfers = 0; transfers < max_transfers; ++transfers) {
    // Supplier: lowest v among stores that are not charging and can still
    // release energy. Receiver: highest eta*v among the others that are not
    // discharging and can still absorb. Strict comparisons keep the lowest
    // index on ties.
    std::size_t supplier = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (r[i] > 0.0 || s[i] + r[i] <= 0.0 || fleet[i].output_mw + r[i] <= 0.0) continue;
      if (supplier == n || v[i] < v[supplier]) supplier = i;
    }
    if (supplier == n) break;
    std::size_t receiver = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == supplier || r[j] < 0.0) continue;
      const StoreSpec& spec = fleet[j];
      if ((spec.capacity_mwh - s[j]) - r[j] <= 0.0 || spec.efficiency * spec.input_mw - r[j] <= 0.0) {
        continue;
      }
      if (receiver == n || charge_priority[j] > charge_priority[receiver]) receiver = j;
    }
    if (receiver == n) break;
    if (!(v[supplier] < charge_priority[receiver])) break;

    const StoreSpec& from = fleet[supplier];
    const StoreSpec& to = fleet[receiver];
    const double energy_left = s[supplier] + r[supplier];
    const double power_left = from.output_mw + r[supplier];
    const double room_energy = ((to.capacity_mwh - s[receiver]) - r[receiver]) / to.efficiency;
    const double room_power = (to.efficiency * to.input_mw - r[receiver]) / to.efficiency;
    const double moved = std::min({energy_left, power_left, room_energy, room_power});
    if (!(moved > 0.0)) break;

    // Pin whichever bound binds so the saturated store leaves the candidate
    // set exactly rather than by a rounding residue.
    if (moved == energy_left) {
      r[supplier] = -s[supplier];
    } else if (moved == power_left) {
      r[supplier] = -from.output_mw;
    } else {
      r[supplier] -= moved;
    }
    if (moved == room_energy) {
      r[receiver] = to.capacity_mwh - s[receiver];
    } else if (moved == room_power) {
      r[receiver] = to.efficiency * to.input_mw;
    } else {
      r[receiver] += to.efficiency * moved;
    }
  }
  return decision;
}

StepDecision schedule_ggddf(const FleetState& state, double re_mw, const Fleet& fleet) {
  const std::size_t n = fleet.size();
  std::vector<double> key(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double energy = re_mw >= 0.0 ? fleet[i].capacity_mwh - state.levels_mwh[i]
                                       : state.levels_mwh[i];
    key[i] = duration_hours(energy, fleet[i].output_mw);
  }
  return allocate_external(state, re_mw, fleet, priority_order(key, true));
}

StepDecision schedule_grtef(const FleetState& state, double re_mw, const Fleet& fleet) {
  return allocate_external(state, re_mw, fleet, priority_order(efficiencies(fleet), true));
}

StepDecision schedule(const PolicyKind& policy, const FleetState& state, double re_mw,
                      const Fleet& fleet) {
  return std::visit(
      [&](const auto& p) -> StepDecision {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ValueParams>) {
          return schedule_value_lp(state, re_mw, fleet, p);
        } else if constexpr (std::is_same_v<T, Ggddf>) {
          return schedule_ggddf(state, re_mw, fleet);
        } else {
          return schedule_grtef(state, re_mw, fleet);
        }
      },
      policy);
}

}  // namespace storesched
