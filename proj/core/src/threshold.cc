#include "noisecal/threshold.h"

#include <cmath>

namespace noisecal {

double hard_threshold(double x, double threshold) {
  return std::abs(x) >= threshold ? x : 0.0;
}

double soft_threshold(double x, double threshold) {
  if (x >= threshold) return x - threshold;
  if (x <= -threshold) return x + threshold;
  return 0.0;
}

namespace {

double int_pow(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

}  // namespace

double hst(double x, double threshold, int order) {
  const double magnitude = std::abs(x);
  if (magnitude < threshold) return 0.0;
  double root;
  if (order == 2) {
    // Same expression as scf_forward so that scf(., ., 1) == hst(., ., 2)
    // holds exactly.
    root = std::sqrt(x * x - threshold * threshold);
  } else {
    const double radicand =
        int_pow(magnitude, order) - int_pow(threshold, order);
    root = std::pow(radicand > 0.0 ? radicand : 0.0, 1.0 / order);
  }
  return x < 0.0 ? -root : root;
}

double scf_forward(double x, double threshold, double lambda) {
  if (x >= threshold) {
    return lambda * std::sqrt(x * x - threshold * threshold) +
           (1.0 - lambda) * (x - threshold);
  }
  if (x <= -threshold) {
    return -lambda * std::sqrt(x * x - threshold * threshold) +
           (1.0 - lambda) * (x + threshold);
  }
  return 0.0;
}

ScfGradient scf_backward(double x, double threshold, double lambda,
                         double upstream) {
  ScfGradient g;
  const double magnitude = std::abs(x);
  if (magnitude < threshold) return g;

  const double linear = 1.0 - lambda;
  if (magnitude == threshold) {
    g.dx = linear * upstream;
    g.dthreshold = (x < 0.0 ? linear : -linear) * upstream;
    return g;
  }

  const double root =
      std::sqrt(x * x - threshold * threshold + kGradientStabilizer);
  if (x > 0.0) {
    g.dx = upstream * (lambda * x / root + linear);
    g.dthreshold = upstream * (-lambda * threshold / root - linear);
    g.dlambda = upstream * (root - (x - threshold));
  } else {
    g.dx = upstream * (-lambda * x / root + linear);
    g.dthreshold = upstream * (lambda * threshold / root + linear);
    g.dlambda = upstream * (-root - (x + threshold));
  }
  return g;
}

}  // namespace noisecal
