#include "choicenet/eval/meta.hpp"

#include "choicenet/core/error.hpp"
#include "choicenet/synth/dataset_gen.hpp"

namespace choicenet {

MetaResult meta_learn(const ChoiceDataset& train_data, const ChoiceDataset& val,
                      const std::vector<MetaCandidate>& candidates, const MetaConfig& cfg) {
  if (candidates.empty()) throw DimensionError("meta learning needs at least one candidate");
  if (val.empty()) throw DatasetError("meta learning needs validation data");
  MetaResult res;
  std::vector<ModelPtr> models;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    ModelPtr m = candidates[k].fit(train_data, val);
    if (!m) throw InvariantError("candidate " + candidates[k].name + " returned no model");
    if (k == 0 && !dynamic_cast<const NeuralChoiceModel*>(m.get()))
      throw InvariantError("the first meta candidate must be a network");
    res.val_ce.push_back(ce_loss(*m, val));
    models.push_back(std::move(m));
  }
  int k_star = 0;
  for (std::size_t k = 1; k < models.size(); ++k)
    if (res.val_ce[k] < res.val_ce[static_cast<std::size_t>(k_star)]) k_star = static_cast<int>(k);
  res.best_candidate = k_star;
  const auto ks = static_cast<std::size_t>(k_star);
  res.model = models[ks];
  res.source = candidates[ks].name;
  res.final_val_ce = res.val_ce[ks];
  if (k_star == 0) return res;

  const AssortmentSampler sampler(cfg.sampler, train_data.universe);
  const ChoiceDataset synth = gen_dataset(*models[ks], sampler, cfg.m_prime, derive_seed(cfg.seed, 1),
                                          train_data.product_features);
  NetSpec spec = cfg.net;
  spec.n = train_data.universe.size();
  spec.has_no_purchase = train_data.universe.has_no_purchase();
  TrainConfig rt = cfg.retrain;
  rt.seed = derive_seed(cfg.seed, 2);
  // Validation on the real data picks the snapshot in both phases.
  const TrainResult pre = train(spec, synth, &val, rt);
  TrainConfig ft = cfg.finetune;
  ft.seed = derive_seed(cfg.seed, 3);
  TrainResult tuned = train(pre.params, train_data, &val, ft);
  auto nn = std::make_shared<NeuralChoiceModel>(std::move(tuned.params));
  const double v = ce_loss(*nn, val);
  res.finetuned_val_ce = v;
  if (v < res.final_val_ce) {
    res.model = std::move(nn);
    res.source = candidates[0].name + "+synthetic";
    res.final_val_ce = v;
  }
  return res;
}

}  // namespace choicenet
