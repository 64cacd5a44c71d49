#pragma once

#include <string>
#include <vector>

namespace cscn {

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0;
  double threshold = 0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double seconds = 0;

  bool all_passed() const {
    for (const auto& e : entries)
      if (!e.passed) return false;
    return !entries.empty();
  }
};

// Central-difference verification (64-bit, h = 1e-5) of every analytic
// backward pass: FC, conv at all three kernel sizes, ReLU (zero-crossing
// excluded), MSE, and both network compositions end to end on the compact
// configuration (B=8, m=16). `full_size` adds sampled-coordinate checks of
// the production-size conv layers on 32x32 feature maps.
GradCheckReport run_gradcheck_suite(bool full_size = false);

}  // namespace cscn
