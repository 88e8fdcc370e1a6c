#pragma once

#include <cstdint>
#include <vector>

#include "choicenet/core/choice_model.hpp"
#include "choicenet/neural/network.hpp"

namespace choicenet {

// Adaptive calibration error with equal-mass bins per option:
//   ACE = 1/(m B) sum_i n_i sum_b |acc(b, i) - conf(b, i)|
// over every universe option i (no-purchase included), n_i being the number
// of samples offering i. Each option's samples are sorted by (prediction,
// outcome) and cut into B bins of exactly n_i / B mass; a sample straddling
// a cut contributes fractionally to both bins. Options never offered are
// skipped.
double ace_calibration(const ChoiceModel& model, const ChoiceDataset& data, int bins = 25);

// Assortment effect of a feature network: for each offered option of a
// sampled row, min-max normalized output logit minus min-max normalized
// latent utility, both normalized within the assortment. Rows where either
// range is degenerate give 0 for every offered option.
std::vector<double> assortment_effect_delta(const NetworkParams& net, const ChoiceDataset& data,
                                            std::size_t sample_count = 200, std::uint64_t seed = 0);

// Counts of values in `bins` equal-width bins over [lo, hi]; values outside
// are clamped into the end bins.
std::vector<int> histogram(const std::vector<double>& values, int bins, double lo, double hi);

// Mean entropy of the model's choice distribution over the dataset's
// assortments: the expected cross-entropy of the model against itself.
double expected_entropy(const ChoiceModel& model, const ChoiceDataset& data);

}  // namespace choicenet
