#ifndef CISNET_QUADRATURE_HPP
#define CISNET_QUADRATURE_HPP

#include <cstdint>
#include <functional>

namespace cisnet {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;  // conservative bound from the embedded Gauss rule
  int64_t evaluations = 0;
};

/// Adaptive Gauss-Kronrod 7/15: repeatedly bisects the panel with the largest
/// error estimate until the summed estimate meets the tolerance. Throws Error
/// if the panel budget is exhausted first.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-12, double rel_tol = 1e-12,
                           int max_panels = 20000);

/// Single non-adaptive 15-point panel, value and error estimate.
QuadratureResult gk15_panel(const std::function<double(double)>& f, double a, double b);

}  // namespace cisnet

#endif
