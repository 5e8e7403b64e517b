#ifndef NOISECAL_GRADCHECK_H_
#define NOISECAL_GRADCHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "noisecal/threshold.h"

namespace noisecal {

// |analytic - numeric| / max(1, |analytic|, |numeric|): relative for large
// gradients, absolute near zero.
double gradient_error(double analytic, double numeric);

struct GradientCheckOptions {
  std::uint64_t seed = 1;
  std::size_t min_points = 10000;  // per checked operation
  double tolerance = 1e-4;
  double step = 1e-5;    // central-difference half width
  double margin = 0.1;   // required | |x| - threshold | at every sample
};

// Swappable analytic kernels, so a deliberately broken one can be checked.
struct GradientOps {
  std::function<ScfGradient(double, double, double, double)> scf_backward =
      &noisecal::scf_backward;
};

struct GradientCheckEntry {
  std::string name;
  std::size_t points = 0;
  double max_error = 0.0;
  bool passed = false;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;

  bool passed() const;
  double max_error() const;
};

/// Central finite differences against the analytic gradients of scf_backward,
/// the threshold path (pdt_backward), the full filter (pdaf_backward), the
/// contrastive loss, and a two-stage filter stack through RoI embedding into
/// the contrastive loss (entry "filter_stack"). Samples stay `margin` away
/// from every threshold knee and max-pooling ties.
GradientCheckReport run_gradient_battery(const GradientCheckOptions& options,
                                         const GradientOps& ops = {});

}  // namespace noisecal

#endif  // NOISECAL_GRADCHECK_H_
