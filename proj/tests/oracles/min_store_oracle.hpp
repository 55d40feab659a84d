#pragma once

// Exhaustive (E, s0) search for the smallest single store with unconstrained
// power that serves every demand of a trace.

#include <algorithm>
#include <optional>
#include <vector>

namespace oracle {

inline bool serves_all(const std::vector<double>& re, double eta, double capacity, double level) {
  for (double r : re) {
    if (r >= 0.0) {
      level = std::min(capacity, level + eta * r);
    } else {
      if (level < -r) return false;
      level += r;
    }
  }
  return true;
}

struct GridMinStore {
  double capacity = 0.0;
  double initial_level = 0.0;
};

// E and s0 range over multiples of `step` up to `max_capacity`. The smallest
// E that works starting full, then the smallest s0 at that E.
inline std::optional<GridMinStore> grid_min_store(const std::vector<double>& re, double eta, double step,
                                                  double max_capacity) {
  const auto points = static_cast<long>(max_capacity / step);
  for (long e = 0; e <= points; ++e) {
    const double capacity = static_cast<double>(e) * step;
    if (!serves_all(re, eta, capacity, capacity)) continue;
    for (long s = 0; s <= e; ++s) {
      const double level = static_cast<double>(s) * step;
      if (serves_all(re, eta, capacity, level)) return GridMinStore{capacity, level};
    }
  }
  return std::nullopt;
}

}  // namespace oracle
