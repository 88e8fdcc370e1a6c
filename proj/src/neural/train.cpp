#include "choicenet/neural/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace choicenet {

void TrainConfig::validate() const {
  if (batch < 1 || !(lr > 0) || epochs < 0 || !(eps > 0) || !(beta1 >= 0 && beta1 < 1) ||
      !(beta2 >= 0 && beta2 < 1))
    throw DimensionError("training hyperparameters must be positive");
  if ((w_bound && !(*w_bound > 0)) || (b_bound && !(*b_bound >= 0)))
    throw DimensionError("norm bounds must be positive");
}

void project_params(NetworkParams& p, std::optional<double> w_bound, std::optional<double> b_bound) {
  for (Layer& l : p.layers) {
    if (w_bound) {
      for (Eigen::Index i = 0; i < l.w.rows(); ++i) {
        const double s = l.w.row(i).cwiseAbs().sum();
        if (s > *w_bound) l.w.row(i) *= *w_bound / s;
      }
    }
    if (b_bound) l.b = l.b.cwiseMax(-*b_bound).cwiseMin(*b_bound);
  }
}

TrainResult train(NetworkParams params, const ChoiceDataset& train_data,
                  const ChoiceDataset* val_data, const TrainConfig& cfg) {
  cfg.validate();
  params.validate();
  if (train_data.empty()) throw DatasetError("cannot train on an empty dataset");
  require_valid(train_data);
  if (val_data && val_data->empty()) val_data = nullptr;
  if (val_data) require_valid(*val_data);

  Rng rng(derive_seed(cfg.seed, 0x7261696e));
  NetworkParams m1 = params.zeros_like(), m2 = params.zeros_like(), grad = params.zeros_like();
  auto pt = params.tensors();
  auto t1 = m1.tensors();
  auto t2 = m2.tensors();
  auto tg = grad.tensors();

  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrainResult res;
  auto val_ce = [&](const NetworkParams& p) { return val_data ? network_ce(p, *val_data) : nan; };
  res.log.push_back({0, network_ce(params, train_data), val_ce(params)});
  res.params = params;
  res.best_epoch = 0;
  res.best_val = res.log.back().val_ce;

  const std::size_t m = train_data.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  NetEngine engine;
  long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = m - 1; i > 0; --i) {
      std::uniform_int_distribution<std::size_t> d(0, i);
      std::swap(order[i], order[d(rng)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < m; start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(m, start + static_cast<std::size_t>(cfg.batch));
      std::span<const std::size_t> idx(order.data() + start, end - start);
      BatchInput in = make_batch(params, train_data, idx);
      const double loss = engine.forward(params, in);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch), res.log);
      }
      loss_sum += loss * static_cast<double>(end - start);
      for (auto t : tg) std::fill(t.begin(), t.end(), 0.0);
      engine.backward(params, grad);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < pt.size(); ++k) {
        double* w = pt[k].data();
        double* a = t1[k].data();
        double* v = t2[k].data();
        const double* g = tg[k].data();
        for (std::size_t j = 0; j < pt[k].size(); ++j) {
          a[j] = cfg.beta1 * a[j] + (1 - cfg.beta1) * g[j];
          v[j] = cfg.beta2 * v[j] + (1 - cfg.beta2) * g[j] * g[j];
          w[j] -= cfg.lr * (a[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
        }
      }
      if (cfg.w_bound || cfg.b_bound) project_params(params, cfg.w_bound, cfg.b_bound);
    }
    EpochLog row{epoch, loss_sum / static_cast<double>(m), val_ce(params)};
    if (val_data && !std::isfinite(row.val_ce))
      throw TrainingDiverged("validation loss became non-finite at epoch " + std::to_string(epoch), res.log);
    res.log.push_back(row);
    if (!cfg.keep_best || !val_data) {
      res.params = params;
      res.best_epoch = epoch;
      res.best_val = row.val_ce;
    } else if (row.val_ce < res.best_val) {
      res.params = params;
      res.best_epoch = epoch;
      res.best_val = row.val_ce;
    }
  }
  return res;
}

TrainResult train(const NetSpec& spec, const ChoiceDataset& train_data,
                  const ChoiceDataset* val_data, const TrainConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x696e6974));
  return train(init_network(spec, rng), train_data, val_data, cfg);
}

}  // namespace choicenet
