#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace groundnet {

// One gradient verification: reverse-mode vs. central finite differences
// at `points` random points.
struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0;
  int points = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0;

  bool passed(double tolerance = 1e-4) const { return max_rel_err < tolerance; }
};

// Checks every core op, the Locate and Relate losses, and a full
// graph execution loss, each at `points_per_case` random points.
GradCheckReport run_grad_check_suite(std::uint64_t seed, int points_per_case = 10);

}  // namespace groundnet
