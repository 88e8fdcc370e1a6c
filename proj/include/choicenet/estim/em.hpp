#pragma once

#include <cstdint>
#include <vector>

#include "choicenet/core/types.hpp"
#include "choicenet/synth/models.hpp"

namespace choicenet {

struct EmConfig {
  int max_iters = 1000;
  // Stop when the L1 change of lambda and of each row of rho, averaged over
  // those n + 1 distributions, drops below this.
  double threshold = 0.01;
  std::uint64_t seed = 0;
  int restarts = 1;
};

struct EmFit {
  MccmModel model;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  // Mean training log-likelihood before each M-step; the final entry is the
  // value at the returned parameters.
  std::vector<double> loglik;
};

// Expectation-maximization for the Markov-chain choice model. The E-step
// imputes each customer's arrival state and transition counts from the
// absorption algebra of the current chain; the M-step renormalizes them.
EmFit fit_mccm_em(const ChoiceDataset& data, const EmConfig& cfg = {});

// Mean log-likelihood of the data under (lambda, rho).
double mccm_loglik(const ChoiceDataset& data, const Vec& lambda, const Mat& rho);

}  // namespace choicenet
