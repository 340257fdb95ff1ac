#include "cbm/core/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cbm/core/error.hpp"

namespace cbm {

double grad_check(const Objective& f, std::span<const double> x, double h) {
  require(h > 0.0 && h <= 1e-2, "grad_check: step must lie in (0, 1e-2]");
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> analytic(x.size(), 0.0);
  const double f0 = f(probe, analytic);
  if (!std::isfinite(f0)) throw RuntimeError("grad_check: objective is non-finite at the base point");

  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe, {});
    probe[i] = x[i] - h;
    const double down = f(probe, {});
    probe[i] = x[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw RuntimeError("grad_check: objective is non-finite when perturbing coordinate " + std::to_string(i));
    const double central = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[i] - central) / (std::abs(analytic[i]) + std::abs(central) + 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace cbm
