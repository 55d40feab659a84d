#include "storesched/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace storesched {
namespace {

Violation violation(ErrorCode code, std::size_t step, std::optional<std::size_t> store,
                    std::string detail) {
  return Violation{code, step, store, std::move(detail)};
}

// Checks one step against the rate, capacity and sign rules; `step` is 1-based.
std::optional<Violation> check_step(const Fleet& fleet, std::span<const double> levels, double re,
                                    std::span<const double> rates, std::size_t step) {
  if (rates.size() != fleet.size()) {
    return violation(ErrorCode::kInvalidArgument, step, std::nullopt,
                     "row has " + std::to_string(rates.size()) + " rates for " +
                         std::to_string(fleet.size()) + " stores");
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const StoreSpec& spec = fleet[i];
    const double r = rates[i];
    if (!(r >= -spec.output_mw - kFeasibilitySlack &&
          r <= spec.efficiency * spec.input_mw + kFeasibilitySlack)) {
      return violation(ErrorCode::kRateViolation, step, i, "rate " + format_number(r));
    }
    const double s = levels[i] + r;
    if (!(s >= -kFeasibilitySlack && s <= spec.capacity_mwh + kFeasibilitySlack)) {
      return violation(ErrorCode::kCapacityViolation, step, i, "level " + format_number(s));
    }
  }
  const double u = imbalance(re, rates, fleet);
  if (re >= 0.0 && u < -kFeasibilitySlack) {
    return violation(ErrorCode::kOverchargeViolation, step, std::nullopt,
                     "imbalance " + format_number(u) + " with surplus " + format_number(re));
  }
  if (re < 0.0 && u > kFeasibilitySlack) {
    return violation(ErrorCode::kOverserveViolation, step, std::nullopt,
                     "imbalance " + format_number(u) + " with demand " + format_number(-re));
  }
  return std::nullopt;
}

void advance_levels(const Fleet& fleet, std::vector<double>& levels, std::span<const double> rates) {
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    levels[i] = std::clamp(levels[i] + rates[i], 0.0, fleet[i].capacity_mwh);
  }
}

std::string column_name(const StoreSpec& spec, std::size_t index) {
  return spec.name.empty() ? "store" + std::to_string(index) : spec.name;
}

}  // namespace

SimResult simulate(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                   const StepPolicy& policy, const SimOptions& options) {
  validate_fleet(fleet);
  validate_state(initial, fleet);
  const std::size_t n = fleet.size();
  const std::size_t steps = re_mw.size();

  SimResult result;
  result.served_external_mwh.assign(n, 0.0);
  if (options.record_series) {
    result.unserved_cumulative_mwh.reserve(steps);
    result.spill_cumulative_mwh.reserve(steps);
    result.level_traces_mwh.assign(n, {});
    for (auto& series : result.level_traces_mwh) series.reserve(steps);
    result.policy.rates_mw.reserve(steps);
  }

  FleetState state = initial;
  for (auto& s : state.levels_mwh) s = std::max(0.0, s);
  for (std::size_t i = 0; i < n; ++i) {
    state.levels_mwh[i] = std::min(state.levels_mwh[i], fleet[i].capacity_mwh);
  }

  for (std::size_t t = 0; t < steps; ++t) {
    const double re = re_mw[t];
    const StepDecision decision = policy(state, re, fleet);
    double u = imbalance(re, decision.rates_mw, fleet);
    if (re >= 0.0 && u < -kFeasibilitySlack) {
      throw Error(ErrorCode::kOverchargeViolation,
                  "stores draw more than the surplus at hour " + std::to_string(state.hour + 1));
    }
    if (re < 0.0 && u > kFeasibilitySlack) {
      throw Error(ErrorCode::kOverserveViolation,
                  "stores release more than the demand at hour " + std::to_string(state.hour + 1));
    }
    u = re >= 0.0 ? std::max(u, 0.0) : std::min(u, 0.0);

    if (re < 0.0) {
      double released = 0.0;
      for (double r : decision.rates_mw) released += r < 0.0 ? -r : 0.0;
      const double served = -re + u;
      if (released > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          const double r = decision.rates_mw[i];
          if (r < 0.0) result.served_external_mwh[i] += served * (-r / released);
        }
      }
    }
    result.cross_charged_mwh += cross_charge_volume(re, decision.rates_mw, fleet);
    result.total_spill_mwh += std::max(0.0, u);
    result.total_unserved_mwh += std::max(0.0, -u);

    state = apply_step(state, decision, fleet);
    if (options.record_series) {
      result.spill_cumulative_mwh.push_back(result.total_spill_mwh);
      result.unserved_cumulative_mwh.push_back(result.total_unserved_mwh);
      for (std::size_t i = 0; i < n; ++i) result.level_traces_mwh[i].push_back(state.levels_mwh[i]);
      result.policy.rates_mw.push_back(decision.rates_mw);
    }
  }
  result.final_state = std::move(state);
  return result;
}

SimResult simulate(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                   const PolicyKind& policy, const SimOptions& options) {
  validate_policy(policy, fleet);
  return simulate(
      fleet, initial, re_mw,
      StepPolicy([&policy](const FleetState& state, double re, const Fleet& f) {
        return schedule(policy, state, re, f);
      }),
      options);
}

SimResult simulate(const Fleet& fleet, const FleetState& initial, const ResidualTrace& trace,
                   const PolicyKind& policy, const SimOptions& options) {
  return simulate(fleet, initial, std::span<const double>(trace.values_mw), policy, options);
}

SimResult replay(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                 const PolicyTrace& policy, const SimOptions& options) {
  if (policy.steps() != re_mw.size()) {
    throw Error(ErrorCode::kInvalidArgument, "policy trace and residual trace lengths differ");
  }
  std::size_t t = 0;
  return simulate(
      fleet, initial, re_mw,
      StepPolicy([&](const FleetState&, double, const Fleet&) {
        StepDecision decision;
        decision.rates_mw = policy.rates_mw[t++];
        return decision;
      }),
      options);
}

std::vector<double> lower_bound_unserved(std::span<const double> re_mw, double total_output_mw) {
  std::vector<double> bound;
  bound.reserve(re_mw.size());
  double total = 0.0;
  for (double re : re_mw) {
    total += std::max(0.0, -re - total_output_mw);
    bound.push_back(total);
  }
  return bound;
}

std::optional<Violation> verify_feasible(const Fleet& fleet, const FleetState& initial,
                                         std::span<const double> re_mw,
                                         const PolicyTrace& policy) {
  if (policy.steps() != re_mw.size()) {
    return violation(ErrorCode::kInvalidArgument, std::min(policy.steps(), re_mw.size()) + 1,
                     std::nullopt, "policy trace and residual trace lengths differ");
  }
  if (initial.levels_mwh.size() != fleet.size()) {
    return violation(ErrorCode::kCapacityViolation, 0, std::nullopt, "initial state size differs");
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const double s = initial.levels_mwh[i];
    if (!(s >= -kFeasibilitySlack && s <= fleet[i].capacity_mwh + kFeasibilitySlack)) {
      return violation(ErrorCode::kCapacityViolation, 0, i, "initial level " + format_number(s));
    }
  }
  std::vector<double> levels = initial.levels_mwh;
  for (std::size_t t = 0; t < re_mw.size(); ++t) {
    if (auto v = check_step(fleet, levels, re_mw[t], policy.rates_mw[t], t + 1)) return v;
    advance_levels(fleet, levels, policy.rates_mw[t]);
  }
  return std::nullopt;
}

std::optional<Violation> verify_greedy(const Fleet& fleet, const FleetState& initial,
                                       std::span<const double> re_mw, const PolicyTrace& policy) {
  std::vector<double> levels = initial.levels_mwh;
  const std::size_t steps = std::min(policy.steps(), re_mw.size());
  for (std::size_t t = 0; t < steps; ++t) {
    const auto& rates = policy.rates_mw[t];
    const double u = imbalance(re_mw[t], rates, fleet);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      if (u > kFeasibilitySlack &&
          rates[i] < max_charge_rate(fleet[i], levels[i]) - kFeasibilitySlack) {
        return violation(ErrorCode::kNotGreedy, t + 1, i,
                         "spill " + format_number(u) + " while store can charge");
      }
      if (u < -kFeasibilitySlack &&
          rates[i] > -max_discharge_rate(fleet[i], levels[i]) + kFeasibilitySlack) {
        return violation(ErrorCode::kNotGreedy, t + 1, i,
                         "unserved " + format_number(-u) + " while store can discharge");
      }
    }
    advance_levels(fleet, levels, rates);
  }
  return std::nullopt;
}

PolicyTrace greedify(const Fleet& fleet, const FleetState& initial, std::span<const double> re_mw,
                     const PolicyTrace& policy) {
  if (auto v = verify_feasible(fleet, initial, re_mw, policy)) {
    throw Error(ErrorCode::kInfeasibleInput, v->describe());
  }
  const std::size_t n = fleet.size();
  const std::size_t steps = re_mw.size();
  PolicyTrace out = policy;
  auto& R = out.rates_mw;
  std::vector<double> level = initial.levels_mwh;  // s(t-1) of the modified policy
  for (auto& s : level) s = std::max(0.0, s);
  for (std::size_t i = 0; i < n; ++i) level[i] = std::min(level[i], fleet[i].capacity_mwh);

  for (std::size_t t = 0; t < steps; ++t) {
    auto& r = R[t];
    double u = imbalance(re_mw[t], r, fleet);
    bool lazy = false;
    for (std::size_t i = 0; i < n && !lazy; ++i) {
      lazy = (u > kFeasibilitySlack && r[i] < max_charge_rate(fleet[i], level[i]) - kFeasibilitySlack) ||
             (u < -kFeasibilitySlack && r[i] > -max_discharge_rate(fleet[i], level[i]) + kFeasibilitySlack);
    }
    if (!lazy) u = 0.0;
    const bool raised = u > 0.0;
    bool changed = false;

    if (u > 0.0) {
      // Absorb spill: release less first, then charge more.
      for (std::size_t i = 0; i < n && u > 0.0; ++i) {
        if (r[i] >= 0.0) continue;
        const double delta = std::min(-r[i], u);
        r[i] += delta;
        u -= delta;
        changed = true;
      }
      for (std::size_t i = 0; i < n && u > 0.0; ++i) {
        if (r[i] < 0.0) continue;
        const double room = max_charge_rate(fleet[i], level[i]) - r[i];
        if (room <= 0.0) continue;
        const double eta = fleet[i].efficiency;
        if (u * eta >= room) {
          r[i] += room;
          u -= room / eta;
        } else {
          r[i] += u * eta;
          u = 0.0;
        }
        changed = true;
      }
    } else if (u < 0.0) {
      // Serve unmet demand: charge less first, then discharge more.
      for (std::size_t i = 0; i < n && u < 0.0; ++i) {
        if (r[i] <= 0.0) continue;
        const double eta = fleet[i].efficiency;
        if (r[i] <= -u * eta) {
          u += r[i] / eta;
          r[i] = 0.0;
        } else {
          r[i] += u * eta;
          u = 0.0;
        }
        changed = true;
      }
      for (std::size_t i = 0; i < n && u < 0.0; ++i) {
        if (r[i] > 0.0) continue;
        const double room = r[i] + max_discharge_rate(fleet[i], level[i]);
        if (room <= 0.0) continue;
        const double delta = std::min(room, -u);
        r[i] -= delta;
        u += delta;
        changed = true;
      }
    }

    std::vector<double> next = level;
    advance_levels(fleet, next, r);
    if (changed) {
      // Repair later steps against the modified levels. Charging at t can
      // only have raised levels, so later charges are capped at the headroom;
      // discharging can only have lowered them, so later discharges are
      // capped at the level.
      std::vector<double> s = next;
      for (std::size_t k = t + 1; k < steps; ++k) {
        auto& rk = R[k];
        const double re = re_mw[k];
        if (raised) {
          for (std::size_t i = 0; i < n; ++i) rk[i] = std::min(rk[i], fleet[i].capacity_mwh - s[i]);
          double uk = imbalance(re, rk, fleet);
          for (std::size_t i = 0; i < n && re < 0.0 && uk > 0.0; ++i) {
            if (rk[i] >= 0.0) continue;
            const double delta = std::min(-rk[i], uk);
            rk[i] += delta;
            uk -= delta;
          }
        } else {
          for (std::size_t i = 0; i < n; ++i) rk[i] = std::max(rk[i], -s[i]);
          double uk = imbalance(re, rk, fleet);
          for (std::size_t i = 0; i < n && re >= 0.0 && uk < 0.0; ++i) {
            if (rk[i] <= 0.0) continue;
            const double eta = fleet[i].efficiency;
            if (rk[i] <= -uk * eta) {
              uk += rk[i] / eta;
              rk[i] = 0.0;
            } else {
              rk[i] += uk * eta;
              uk = 0.0;
            }
          }
        }
        advance_levels(fleet, s, rk);
      }
    }
    level = std::move(next);
  }
  return out;
}

void write_sim_csv(std::ostream& out, const Fleet& fleet, std::span<const double> re_mw,
                   const SimResult& result, LossConvention convention) {
  const std::size_t n = fleet.size();
  const std::size_t steps = result.policy.steps();
  if (steps != re_mw.size() || result.level_traces_mwh.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "simulation result has no recorded series");
  }
  out << "hour,re_mw";
  for (std::size_t i = 0; i < n; ++i) out << ",rate_" << column_name(fleet[i], i);
  for (std::size_t i = 0; i < n; ++i) out << ",level_" << column_name(fleet[i], i);
  out << ",spill_cum_mwh,unserved_cum_mwh\n";
  for (std::size_t t = 0; t < steps; ++t) {
    out << t + 1 << ',' << format_number(re_mw[t]);
    for (std::size_t i = 0; i < n; ++i) out << ',' << format_number(result.policy.rates_mw[t][i]);
    for (std::size_t i = 0; i < n; ++i) {
      out << ',' << format_number(convert_energy(result.level_traces_mwh[i][t], fleet[i].efficiency,
                                                 LossConvention::kInputSide, convention));
    }
    out << ',' << format_number(result.spill_cumulative_mwh[t]) << ','
        << format_number(result.unserved_cumulative_mwh[t]) << '\n';
  }
}

}  // namespace storesched
