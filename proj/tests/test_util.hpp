#pragma once

#include <random>

#include "kcel/geometry.hpp"

namespace kcel::testing {

/// [-1,1]^3 split at xi1 = 0, E = 1.
inline Partition split_partition() {
  return Partition::from_boxes(1.0, {{Vec3(-1, -1, -1), Vec3(0, 1, 1)}, {Vec3(0, -1, -1), Vec3(1, 1, 1)}});
}

inline Cell random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_real_distribution<double> len(0.05, 3.0);
  Cell c;
  for (int l = 0; l < 3; ++l) {
    c.lower[l] = pos(rng);
    c.upper[l] = c.lower[l] + len(rng);
  }
  return c;
}

}  // namespace kcel::testing
