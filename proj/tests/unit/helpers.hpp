#pragma once

#include <limits>
#include <string>
#include <vector>

#include "storesched/fleet.hpp"

namespace testutil {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline storesched::StoreSpec store(double e, double p, double q, double eta, std::string name = "") {
  return storesched::StoreSpec{std::move(name), e, p, q, eta};
}

inline storesched::FleetState state(std::vector<double> levels) {
  return storesched::FleetState{std::move(levels), 0};
}

}  // namespace testutil
