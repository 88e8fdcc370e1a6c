#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "choicenet/core/choice_model.hpp"
#include "choicenet/synth/samplers.hpp"

namespace choicenet {

// Draws m (assortment, choice) pairs: the assortment from `sampler`, the
// choice from the model. Product features, when given, are attached to the
// dataset and passed to the model.
ChoiceDataset gen_dataset(const ChoiceModel& model, const AssortmentSampler& sampler,
                          std::size_t m, std::uint64_t seed,
                          const std::optional<Mat>& product_features = std::nullopt);

// Choices for a fixed list of assortments.
ChoiceDataset gen_choices(const ChoiceModel& model, const std::vector<Assortment>& assortments,
                          std::uint64_t seed,
                          const std::optional<Mat>& product_features = std::nullopt);

// Appends `copies` no-purchase samples after each original sample.
ChoiceDataset augment_no_purchase(const ChoiceDataset& data, int copies = 4);

// Concatenates datasets over the same universe.
ChoiceDataset concat(const std::vector<const ChoiceDataset*>& parts);

// Choice model given by an explicit table of assortments.
class TabularModel : public ChoiceModel {
 public:
  explicit TabularModel(Universe u) : u_(u) {}
  void set(const Assortment& s, ProbVector p);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "tabular"; }
  ProbVector prob(const Assortment& s) const override;

 private:
  Universe u_;
  std::map<std::vector<std::uint8_t>, ProbVector> table_;
};

// Small behavioral vignettes with known choice probabilities. Each case is
// offered with equal probability when sampling.
struct Fixture {
  std::string name;
  Universe universe;
  std::vector<std::string> labels;
  std::vector<std::string> case_names;
  std::vector<Assortment> cases;
  std::vector<ProbVector> truth;

  TabularModel model() const;
  ChoiceDataset sample(std::size_t m = 8000, std::uint64_t seed = 0) const;
};

// Decoy-free IIA example, the subscription decoy example, and the gamble
// preference cycle, in that order.
std::vector<Fixture> fixture_tables();

}  // namespace choicenet
