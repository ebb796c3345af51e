#pragma once

#include <cstdint>
#include <string>

#include "lgobs/nn.hpp"

namespace lgobs {

struct GradCheckConfig {
  Index hidden = 4;
  std::size_t length = 3;
  std::uint64_t seed = 1;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Gradients smaller than this are compared on an absolute scale.
  double floor = 1e-6;
  /// Negative control: adds this offset to one analytic gradient entry.
  double corrupt = 0.0;
};

struct GradCheckReport {
  Index parameters = 0;
  double max_rel_error = 0.0;
  Index worst_index = 0;
  std::string worst_tensor;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = false;
};

/// Compares the full-pipeline BPTT gradient of one generated sequence with
/// central finite differences of the forward loss, for every parameter.
/// Error per entry: |a - n| / max(|a|, |n|, floor).
GradCheckReport gradient_check(const GradCheckConfig& cfg);

}  // namespace lgobs
