#ifndef NOISECAL_THRESHOLD_H_
#define NOISECAL_THRESHOLD_H_

// Scalar shrinkage functions. All of them are odd in x, return exactly 0 in
// the dead zone |x| < threshold, and never increase |x|. Thresholds must be
// nonnegative.

namespace noisecal {

// Added under the square root in scf_backward only; forward values are exact.
inline constexpr double kGradientStabilizer = 1e-8;

// x if |x| >= threshold, else 0.
double hard_threshold(double x, double threshold);

// Shifts x toward zero by threshold; 0 inside the dead zone.
double soft_threshold(double x, double threshold);

// High-order soft threshold: sgn(x) * (|x|^order - threshold^order)^(1/order)
// for |x| >= threshold, else 0. order must be >= 2.
double hst(double x, double threshold, int order);

/// Self-calibrating filter: lambda * hst(x, t, 2) + (1 - lambda) * soft(x, t).
///
/// lambda = 0 and lambda = 1 reproduce soft_threshold and hst(., ., 2)
/// bit-for-bit.
double scf_forward(double x, double threshold, double lambda);

struct ScfGradient {
  double dx = 0.0;
  double dthreshold = 0.0;
  double dlambda = 0.0;
};

/// Analytic partials of scf_forward scaled by upstream.
///
/// Uses sqrt(x^2 - t^2 + kGradientStabilizer) so the slope stays bounded at
/// the knee. Dead zone gives all zeros. At |x| == t exactly the soft-threshold
/// branch is taken: dx = (1 - lambda) * upstream,
/// dthreshold = -sgn(x) * (1 - lambda) * upstream, dlambda = 0.
ScfGradient scf_backward(double x, double threshold, double lambda,
                         double upstream);

}  // namespace noisecal

#endif  // NOISECAL_THRESHOLD_H_
