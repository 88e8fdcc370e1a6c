#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "choicenet/opt/mip.hpp"
#include "choicenet/opt/optimizers.hpp"

namespace choicenet {

// q(x) = 1 + x + x^2 / 2, the second-order stand-in for exp(x).
inline double surrogate_exp(double x) { return 1.0 + x + 0.5 * x * x; }

// Pre-activation interval of every body unit when each input z0_i ranges
// over [lo0_i, hi0_i]. One (lo, hi) pair per layer.
std::vector<std::pair<Vec, Vec>> preactivation_bounds(const NetworkParams& net, const Vec& lo0, const Vec& hi0);

// Surrogate revenue sum_{i in S} mu_i q(zL_i) / sum_{i in S} q(zL_i).
double nn_surrogate_revenue(const NetworkParams& net, const RevenueSpec& rev, const Assortment& s);

// Big-M MIP of a feature-free gated network: binaries z0 (no-purchase pinned
// to 1) and zeta per unit, z - zt = W z_prev + b, 0 <= z <= M+ zeta,
// 0 <= zt <= M- (1 - zeta), M from interval propagation over z0 in [0, 1].
// v_i = z0_i zL_i is linked exactly by its McCormick envelope, so the ratio
// numerator term z0_i q(zL_i) equals z0_i + v_i + v_i^2 / 2.
MipInstance build_nn_mip(const NetworkParams& net, const RevenueSpec& rev,
                         const CapacityConstraint* cap = nullptr);

// Dinkelbach objective at t: sum_i (mu_i - t)(z0_i + v_i + v_i^2 / 2).
MipInstance linearize_ratio(const MipInstance& mip, double t);

struct NnMipOptions {
  double time_limit = 300.0;  // seconds; 0 returns the warm start
  long node_limit = 10'000'000;
};

// Dinkelbach outer loop; each inner problem max_S sum_{i in S} (mu_i - t) q(zL_i)
// is a depth-first branch and bound over z0 with interval bounds. Starts
// from the best nested set by decreasing revenue.
OptResult solve_nn_mip(const MipInstance& mip, const NnMipOptions& opt = {});

}  // namespace choicenet
