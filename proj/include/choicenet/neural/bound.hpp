#pragma once

namespace choicenet {

// Excess-risk budget of a norm-bounded gated network:
//   (4n / sqrt(m)) * (b * ((2W)^L - 1) / (2W - 1) + (2W)^L * sqrt(2 log 2n))
//   + 5 C sqrt(2 log(8 / delta) / m)
// At W = 1/2 the geometric factor is its limit L * b.
double generalization_bound(double w_bar, double b_bar, int depth, int n, double m,
                            double delta, double c);

}  // namespace choicenet
