#include "storesched/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "storesched/error.hpp"

namespace storesched {
namespace {

bool close_relative(double a, double b, double tol) {
  if (a == b) return true;
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

std::string store_label(const StoreSpec& spec, std::size_t index) {
  return spec.name.empty() ? "store " + std::to_string(index) : "store '" + spec.name + "'";
}

}  // namespace

void validate_spec(const StoreSpec& spec) {
  // Written as !(x > 0) so NaN is rejected too.
  if (!(spec.capacity_mwh > 0.0) || !std::isfinite(spec.capacity_mwh)) {
    throw Error(ErrorCode::kNonPositiveDimension,
                "capacity must be positive and finite, got " + std::to_string(spec.capacity_mwh));
  }
  if (!(spec.output_mw > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDimension,
                "output power must be positive, got " + std::to_string(spec.output_mw));
  }
  if (!(spec.input_mw > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDimension,
                "input power must be positive, got " + std::to_string(spec.input_mw));
  }
  if (!(spec.efficiency > 0.0 && spec.efficiency <= 1.0)) {
    throw Error(ErrorCode::kEfficiencyOutOfRange,
                "efficiency must lie in (0, 1], got " + std::to_string(spec.efficiency));
  }
}

void validate_fleet(const Fleet& fleet) {
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    try {
      validate_spec(fleet[i]);
    } catch (const Error& e) {
      throw Error(e.code(), store_label(fleet[i], i) + ": " + e.what());
    }
  }
}

void validate_state(const FleetState& state, const Fleet& fleet) {
  if (state.levels_mwh.size() != fleet.size()) {
    throw Error(ErrorCode::kCapacityViolation, "state has " +
                                                   std::to_string(state.levels_mwh.size()) +
                                                   " levels for " + std::to_string(fleet.size()) +
                                                   " stores");
  }
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const double s = state.levels_mwh[i];
    if (!(s >= -kFeasibilitySlack && s <= fleet[i].capacity_mwh + kFeasibilitySlack)) {
      throw Error(ErrorCode::kCapacityViolation,
                  store_label(fleet[i], i) + " level " + std::to_string(s) + " outside [0, " +
                      std::to_string(fleet[i].capacity_mwh) + "]");
    }
  }
}

FleetState full_state(const Fleet& fleet) {
  FleetState state;
  state.levels_mwh.reserve(fleet.size());
  for (const auto& spec : fleet) state.levels_mwh.push_back(spec.capacity_mwh);
  return state;
}

std::vector<double> efficiencies(const Fleet& fleet) {
  std::vector<double> etas;
  etas.reserve(fleet.size());
  for (const auto& spec : fleet) etas.push_back(spec.efficiency);
  return etas;
}

double max_charge_rate(const StoreSpec& spec, double level_mwh) {
  return std::max(0.0, std::min(spec.capacity_mwh - level_mwh, spec.efficiency * spec.input_mw));
}

double max_discharge_rate(const StoreSpec& spec, double level_mwh) {
  return std::max(0.0, std::min(level_mwh, spec.output_mw));
}

FleetState apply_step(const FleetState& state, const StepDecision& decision,
                      const Fleet& fleet) {
  if (decision.rates_mw.size() != fleet.size() || state.levels_mwh.size() != fleet.size()) {
    throw Error(ErrorCode::kInvalidArgument, "decision, state and fleet sizes differ");
  }
  FleetState next;
  next.hour = state.hour + 1;
  next.levels_mwh.resize(fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    const StoreSpec& spec = fleet[i];
    const double r = decision.rates_mw[i];
    if (!(r >= -spec.output_mw - kFeasibilitySlack &&
          r <= spec.efficiency * spec.input_mw + kFeasibilitySlack)) {
      std::ostringstream msg;
      msg << store_label(spec, i) << " rate " << r << " outside [" << -spec.output_mw << ", "
          << spec.efficiency * spec.input_mw << "] at hour " << next.hour;
      throw Error(ErrorCode::kRateViolation, msg.str());
    }
    double s = state.levels_mwh[i] + r;
    if (!(s >= -kFeasibilitySlack && s <= spec.capacity_mwh + kFeasibilitySlack)) {
      std::ostringstream msg;
      msg << store_label(spec, i) << " level " << s << " outside [0, " << spec.capacity_mwh
          << "] at hour " << next.hour;
      throw Error(ErrorCode::kCapacityViolation, msg.str());
    }
    next.levels_mwh[i] = std::clamp(s, 0.0, spec.capacity_mwh);
  }
  return next;
}

double imbalance(double re_mw, std::span<const double> rates_mw, std::span<const double> etas) {
  // Store terms are summed before subtracting from re so that a store split
  // into dyadic shares reproduces the merged imbalance bit for bit.
  double draw = 0.0;
  for (std::size_t i = 0; i < rates_mw.size(); ++i) {
    const double r = rates_mw[i];
    draw += r < 0.0 ? r : r / etas[i];
  }
  return re_mw - draw;
}

double imbalance(double re_mw, std::span<const double> rates_mw, const Fleet& fleet) {
  // Store terms are summed before subtracting from re so that a store split
  // into dyadic shares reproduces the merged imbalance bit for bit.
  double draw = 0.0;
  for (std::size_t i = 0; i < rates_mw.size(); ++i) {
    const double r = rates_mw[i];
    draw += r < 0.0 ? r : r / fleet[i].efficiency;
  }
  return re_mw - draw;
}

double cross_charge_volume(double re_mw, std::span<const double> rates_mw, const Fleet& fleet) {
  // With demand, whatever the receivers draw came from other stores; with a
  // surplus, whatever the suppliers release went into other stores.
  double volume = 0.0;
  for (std::size_t i = 0; i < rates_mw.size(); ++i) {
    const double r = rates_mw[i];
    if (re_mw < 0.0 && r > 0.0) volume += r / fleet[i].efficiency;
    if (re_mw >= 0.0 && r < 0.0) volume -= r;
  }
  return volume;
}

StoreSpec merge_equivalent(std::span<const StoreSpec> stores) {
  constexpr double kTol = 1e-9;
  if (stores.empty()) throw Error(ErrorCode::kInvalidArgument, "nothing to merge");
  for (const auto& s : stores) validate_spec(s);

  const StoreSpec& first = stores.front();
  StoreSpec merged{first.name, 0.0, 0.0, 0.0, first.efficiency};
  for (std::size_t i = 0; i < stores.size(); ++i) {
    const StoreSpec& s = stores[i];
    if (!close_relative(s.efficiency, first.efficiency, kTol)) {
      throw Error(ErrorCode::kNotEquivalent, store_label(s, i) + " efficiency differs");
    }
    if (!close_relative(s.capacity_mwh / s.output_mw, first.capacity_mwh / first.output_mw, kTol)) {
      throw Error(ErrorCode::kNotEquivalent, store_label(s, i) + " E/P ratio differs");
    }
    if (!close_relative(s.capacity_mwh / s.input_mw, first.capacity_mwh / first.input_mw, kTol)) {
      throw Error(ErrorCode::kNotEquivalent, store_label(s, i) + " E/Q ratio differs");
    }
    merged.capacity_mwh += s.capacity_mwh;
    merged.output_mw += s.output_mw;
    merged.input_mw += s.input_mw;
  }
  return merged;
}

double convert_energy(double energy_mwh, double efficiency, LossConvention from,
                      LossConvention to) {
  if (from == to) return energy_mwh;
  const double root = std::sqrt(efficiency);
  return to == LossConvention::kSplitSqrt ? energy_mwh / root : energy_mwh * root;
}

ConvertedStore convert_convention(const StoreSpec& spec, double level_mwh, LossConvention from,
                                  LossConvention to) {
  ConvertedStore out{spec, convert_energy(level_mwh, spec.efficiency, from, to)};
  out.spec.capacity_mwh = convert_energy(spec.capacity_mwh, spec.efficiency, from, to);
  return out;
}

std::string_view to_string(LossConvention convention) {
  return convention == LossConvention::kInputSide ? "input" : "split";
}

}  // namespace storesched
