#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "choicenet/core/choice_model.hpp"
#include "choicenet/neural/train.hpp"
#include "choicenet/synth/samplers.hpp"

namespace choicenet {

// A named fitting procedure. The first candidate passed to meta_learn must
// produce a NeuralChoiceModel.
struct MetaCandidate {
  std::string name;
  std::function<ModelPtr(const ChoiceDataset& train, const ChoiceDataset& val)> fit;
};

struct MetaConfig {
  NetSpec net;                 // architecture retrained on synthetic data
  TrainConfig retrain;         // on the synthetic set
  TrainConfig finetune;        // on the real training set, from the retrained weights
  std::size_t m_prime = 100000;
  SamplerKind sampler = SamplerKind::kUniformSize;
  std::uint64_t seed = 0;
};

struct MetaResult {
  ModelPtr model;
  std::string source;            // candidate name, or "<name>+synthetic" for the fine-tuned network
  int best_candidate = 0;        // k*
  std::vector<double> val_ce;    // per candidate
  double final_val_ce = 0.0;
  std::optional<double> finetuned_val_ce;  // set when k* != 0
};

// Fits every candidate and picks k* by validation CE. When k* is not the
// network, draws m_prime synthetic samples from model k*, trains the network
// from scratch on them, fine-tunes it on the real training set and returns
// whichever of the fine-tuned network and model k* has the lower validation
// CE. The result never has a higher validation CE than the best candidate.
MetaResult meta_learn(const ChoiceDataset& train, const ChoiceDataset& val,
                      const std::vector<MetaCandidate>& candidates, const MetaConfig& cfg);

}  // namespace choicenet
