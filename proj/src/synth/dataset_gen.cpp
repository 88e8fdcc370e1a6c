#include "choicenet/synth/dataset_gen.hpp"

#include "choicenet/core/error.hpp"

namespace choicenet {

ChoiceDataset gen_dataset(const ChoiceModel& model, const AssortmentSampler& sampler,
                          std::size_t m, std::uint64_t seed,
                          const std::optional<Mat>& product_features) {
  if (!(model.universe() == sampler.universe()))
    throw DimensionError("model and sampler universes differ");
  ChoiceDataset data;
  data.universe = model.universe();
  data.product_features = product_features;
  data.samples.reserve(m);
  Rng rng(seed);
  Features f;
  if (data.product_features) f.product = &*data.product_features;
  for (std::size_t k = 0; k < m; ++k) {
    Sample s;
    s.assortment = sampler.draw(rng);
    s.chosen = sample_from(model.prob(s.assortment, f), rng);
    data.samples.push_back(std::move(s));
  }
  return data;
}

ChoiceDataset gen_choices(const ChoiceModel& model, const std::vector<Assortment>& assortments,
                          std::uint64_t seed, const std::optional<Mat>& product_features) {
  ChoiceDataset data;
  data.universe = model.universe();
  data.product_features = product_features;
  data.samples.reserve(assortments.size());
  Rng rng(seed);
  Features f;
  if (data.product_features) f.product = &*data.product_features;
  for (const Assortment& a : assortments) {
    Sample s;
    s.assortment = a;
    s.chosen = sample_from(model.prob(a, f), rng);
    data.samples.push_back(std::move(s));
  }
  return data;
}

ChoiceDataset augment_no_purchase(const ChoiceDataset& data, int copies) {
  if (!data.universe.has_no_purchase()) throw UnsupportedError("universe has no no-purchase option");
  if (copies < 0) throw DimensionError("copies must be nonnegative");
  ChoiceDataset out;
  out.universe = data.universe;
  out.product_features = data.product_features;
  out.samples.reserve(data.size() * static_cast<std::size_t>(copies + 1));
  for (const Sample& s : data.samples) {
    out.samples.push_back(s);
    for (int c = 0; c < copies; ++c) {
      Sample extra = s;
      extra.chosen = data.universe.no_purchase();
      out.samples.push_back(std::move(extra));
    }
  }
  return out;
}

ChoiceDataset concat(const std::vector<const ChoiceDataset*>& parts) {
  if (parts.empty()) throw DimensionError("nothing to concatenate");
  ChoiceDataset out;
  out.universe = parts.front()->universe;
  out.product_features = parts.front()->product_features;
  for (const ChoiceDataset* p : parts) {
    if (!(p->universe == out.universe)) throw DimensionError("datasets over different universes");
    out.samples.insert(out.samples.end(), p->samples.begin(), p->samples.end());
  }
  return out;
}

void TabularModel::set(const Assortment& s, ProbVector p) {
  check_prob_vector(p, s);
  table_[s.mask()] = std::move(p);
}

ProbVector TabularModel::prob(const Assortment& s) const {
  auto it = table_.find(s.mask());
  if (it == table_.end()) throw UnsupportedError("assortment " + s.to_string() + " not in table");
  return it->second;
}

TabularModel Fixture::model() const {
  TabularModel m(universe);
  for (std::size_t k = 0; k < cases.size(); ++k) m.set(cases[k], truth[k]);
  return m;
}

ChoiceDataset Fixture::sample(std::size_t m, std::uint64_t seed) const {
  TabularModel tab = model();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, cases.size() - 1);
  std::vector<Assortment> offers;
  offers.reserve(m);
  for (std::size_t k = 0; k < m; ++k) offers.push_back(cases[pick(rng)]);
  return gen_choices(tab, offers, derive_seed(seed, 1));
}

std::vector<Fixture> fixture_tables() {
  std::vector<Fixture> out;
  {
    Fixture f;
    f.name = "iia";
    f.universe = Universe(3);
    f.labels = {"A", "A'", "no-purchase"};
    f.case_names = {"Case I", "Case II"};
    f.cases = {Assortment::parse(f.universe, "101"), Assortment::parse(f.universe, "111")};
    f.truth = {{0.60, 0.0, 0.40}, {0.30, 0.30, 0.40}};
    out.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "decoy";
    f.universe = Universe(4);
    f.labels = {"Internet-Only", "Print-&-Internet", "Print-Only", "no-purchase"};
    f.case_names = {"Case I", "Case II"};
    f.cases = {Assortment::parse(f.universe, "1101"), Assortment::parse(f.universe, "1111")};
    f.truth = {{0.57, 0.29, 0.0, 0.14}, {0.29, 0.57, 0.0, 0.14}};
    out.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "cycle";
    f.universe = Universe(3, false);
    f.labels = {"A", "B", "C"};
    f.case_names = {"Case I", "Case II", "Case III"};
    f.cases = {Assortment::parse(f.universe, "110"), Assortment::parse(f.universe, "011"),
               Assortment::parse(f.universe, "101")};
    f.truth = {{0.75, 0.25, 0.0}, {0.0, 0.75, 0.25}, {0.20, 0.0, 0.80}};
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace choicenet
