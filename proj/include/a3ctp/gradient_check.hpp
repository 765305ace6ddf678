#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "a3ctp/tensor.hpp"

namespace a3ctp {

// A scalar loss together with its analytic gradient.
struct DifferentiableLoss {
  std::function<double(const ParamSet&)> value;
  std::function<ParamSet(const ParamSet&)> gradient;
};

struct GradientCheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Denominator floor for the relative error, so that entries where both
  // gradients are ~0 are judged on absolute error instead.
  double denominator_floor = 1e-6;
  // Check at most this many entries, spread evenly over the manifest (0 = all).
  size_t max_entries = 0;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  size_t entries_checked = 0;
  bool passed = true;
};

// relative error = |a - n| / max(|a|, |n|, floor), n from central differences.
inline GradientCheckReport gradient_check(const ParamSet& params, const DifferentiableLoss& loss,
                                          const GradientCheckOptions& opt = {}) {
  const ParamSet analytic = loss.gradient(params);
  params.require_same_shape(analytic, "gradient_check");

  GradientCheckReport report;
  const size_t total = params.num_params();
  const size_t stride = (opt.max_entries == 0 || opt.max_entries >= total)
                            ? 1
                            : (total + opt.max_entries - 1) / opt.max_entries;
  ParamSet probe = params;
  for (size_t i = 0; i < total; i += stride) {
    double& slot = probe.flat(i);
    const double original = slot;
    slot = original + opt.step;
    const double up = loss.value(probe);
    slot = original - opt.step;
    const double down = loss.value(probe);
    slot = original;

    const double numeric = (up - down) / (2.0 * opt.step);
    const double a = analytic.flat(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), opt.denominator_floor});
    const double rel = std::abs(a - numeric) / denom;
    ++report.entries_checked;
    // NaN compares false, so it is always recorded as the worst entry
    if (!(rel <= report.max_relative_error)) {
      report.max_relative_error = std::isnan(rel) ? INFINITY : rel;
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  report.passed = report.max_relative_error < opt.tolerance;
  return report;
}

}  // namespace a3ctp
