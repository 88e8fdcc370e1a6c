#include "choicenet/neural/bound.hpp"

#include <cmath>

#include "choicenet/core/error.hpp"

namespace choicenet {

double generalization_bound(double w_bar, double b_bar, int depth, int n, double m,
                            double delta, double c) {
  if (!(w_bar > 0) || b_bar < 0 || depth < 0 || n < 1 || !(m > 0) || !(delta > 0 && delta < 1) || c < 0)
    throw DimensionError("bound inputs out of range");
  const double r = 2.0 * w_bar;
  const double rl = std::pow(r, depth);
  const double geom = std::abs(r - 1.0) < 1e-12 ? static_cast<double>(depth) : (rl - 1.0) / (r - 1.0);
  const double net = 4.0 * n / std::sqrt(m) * (b_bar * geom + rl * std::sqrt(2.0 * std::log(2.0 * n)));
  return net + 5.0 * c * std::sqrt(2.0 * std::log(8.0 / delta) / m);
}

}  // namespace choicenet
