#pragma once

#include <functional>
#include <span>

namespace cbm {

// Scalar objective. When `grad` is non-empty it must be filled with the
// analytic gradient at `x`; when empty only the value is needed.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

// Max over coordinates of |analytic - central| / (|analytic| + |central| + 1e-12).
// Throws RuntimeError naming the coordinate if f is non-finite at a probe.
double grad_check(const Objective& f, std::span<const double> x, double h);

}  // namespace cbm
