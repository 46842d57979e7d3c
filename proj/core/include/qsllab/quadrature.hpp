#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace qsllab::quad {

struct Options {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  std::size_t max_intervals = 200000;
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
};

// One Gauss-Kronrod 7/15 panel: Kronrod value and |K15 - G7|.
struct PanelResult {
  double kronrod = 0.0;
  double gauss = 0.0;
};
PanelResult gauss_kronrod_15(const std::function<double(double)>& f, double a,
                             double b);

// Global adaptive GK15 over the partition given by sorted breakpoints.
// Throws AccuracyError when the interval budget runs out.
Estimate integrate(const std::function<double(double)>& f,
                   std::span<const double> breakpoints, const Options& opts = {});

// Vector-valued variant: f(x, out) fills out[0..n). Each component is refined
// until its own error estimate meets the tolerance; the mesh is shared.
struct VectorEstimate {
  std::vector<double> values;
  std::vector<double> errors;
  std::size_t evaluations = 0;
  std::size_t intervals = 0;
};
using VectorIntegrand = std::function<void(double, std::span<double>)>;
VectorEstimate integrate_vector(const VectorIntegrand& f, std::size_t n,
                                std::span<const double> breakpoints,
                                const Options& opts = {});

// Adaptive Simpson with Richardson correction.
Estimate simpson(const std::function<double(double)>& f, double a, double b,
                 double tol, int max_depth = 48);

}  // namespace qsllab::quad
