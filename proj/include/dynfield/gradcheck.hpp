#pragma once

#include <string>
#include <vector>

#include "dynfield/model.hpp"

namespace dynfield {

struct GradCheckConfig {
  FieldKind kind = FieldKind::Hexplane;
  uint32_t seed = 0;
  int num_rays = 4;
  int params_per_seed = 20;
  int num_seeds = 5;
  double step = 1e-4;
  double tolerance = 1e-3;
  double lambda_tv = 1e-4;
  double lambda_ts = 1e-4;
  bool corrupt = false;  // negative control: perturbs one analytic gradient
};

struct GradCheckResult {
  int checked = 0;
  int failed = 0;
  double max_rel_err = 0;
  std::vector<std::string> failures;

  bool passed() const { return failed == 0 && checked > 0; }
};

// Compares analytic gradients of the full render loss (fine + coarse
// photometric + plane regularizers) against central finite differences in
// double precision. Fine sample positions recorded on the first forward pass
// stay frozen across the probe evaluations, pinning the differentiated graph.
// Relative error: |a - n| / max(|a|, |n|, 1e-6).
GradCheckResult check_gradients(const GradCheckConfig& cfg);

}  // namespace dynfield
