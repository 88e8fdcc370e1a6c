#pragma once

#include <functional>
#include <string>
#include <vector>

#include "choicenet/core/types.hpp"
#include "choicenet/synth/models.hpp"

namespace choicenet {

struct MleConfig {
  int max_iters = 5000;
  double tolerance = 1e-6;   // on the gradient norm of the mean log-likelihood
  bool line_search = true;   // false: fixed step `step`
  double step = 1.0;
  // Utilities beyond this magnitude are reported as diverging.
  double divergence_bound = 50.0;
};

struct AscentResult {
  Vec x;
  double value = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Maximizes a smooth concave objective. `f(x, grad)` returns the value and
// writes the gradient. Barzilai-Borwein trial steps with Armijo backtracking.
AscentResult gradient_ascent(const std::function<double(const Vec&, Vec&)>& f, Vec x0,
                             const MleConfig& cfg);

struct MnlFit {
  MnlModel model;
  bool converged = false;
  bool diverged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double loglik = 0.0;  // mean log-likelihood on the training data
  std::vector<std::string> warnings;
};

// MNL maximum likelihood with the no-purchase utility (or the last index when
// the universe has none) pinned at 0. Products that are never offered get
// utility -inf.
MnlFit fit_mnl_mle(const ChoiceDataset& data, const MleConfig& cfg = {});

struct FeatureMnlFit {
  FeatureMnlModel model;
  bool converged = false;
  bool non_unique = false;  // feature design is rank deficient
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<std::string> warnings;
};

// Linear-in-attributes MNL; each product's attribute vector is the sample's
// customer features followed by the product's feature row.
FeatureMnlFit fit_feature_mnl_mle(const ChoiceDataset& data, const MleConfig& cfg = {});

}  // namespace choicenet
