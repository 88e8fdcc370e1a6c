#include "choicenet/eval/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "choicenet/core/error.hpp"

namespace choicenet {

double ace_calibration(const ChoiceModel& model, const ChoiceDataset& data, int bins) {
  if (data.empty()) throw DatasetError("calibration needs a nonempty dataset");
  if (bins < 1) throw DimensionError("calibration needs at least one bin");
  const int n = data.universe.size();
  std::vector<std::vector<std::pair<double, double>>> obs(static_cast<std::size_t>(n));
  for (const Sample& s : data.samples) {
    const ProbVector p = model.prob(s.assortment, features_of(data, s));
    for (int i = 0; i < n; ++i)
      if (s.assortment.contains(i))
        obs[static_cast<std::size_t>(i)].push_back({p[static_cast<std::size_t>(i)], s.chosen == i ? 1.0 : 0.0});
  }
  double total = 0.0;
  for (auto& o : obs) {
    if (o.empty()) continue;
    std::sort(o.begin(), o.end());
    const double ni = static_cast<double>(o.size());
    const double per_bin = ni / bins;
    double gap_sum = 0.0;
    std::size_t k = 0;
    double used = 0.0;  // mass of o[k] already assigned to earlier bins
    for (int b = 0; b < bins; ++b) {
      double need = per_bin;
      double mass = 0.0, conf = 0.0, acc = 0.0;
      while (need > 1e-12 * per_bin && k < o.size()) {
        const double take = std::min(need, 1.0 - used);
        mass += take;
        conf += take * o[k].first;
        acc += take * o[k].second;
        need -= take;
        used += take;
        if (used >= 1.0 - 1e-12) {
          ++k;
          used = 0.0;
        }
      }
      if (mass > 0.0) gap_sum += std::abs(acc / mass - conf / mass);
    }
    total += ni * gap_sum;
  }
  return total / (static_cast<double>(data.size()) * bins);
}

std::vector<double> assortment_effect_delta(const NetworkParams& net, const ChoiceDataset& data,
                                            std::size_t sample_count, std::uint64_t seed) {
  if (!net.feature_based()) throw UnsupportedError("assortment effect needs a feature-based network");
  if (data.empty()) throw DatasetError("assortment effect needs a nonempty dataset");
  Rng rng(seed);
  std::vector<std::size_t> idx(data.size());
  for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(sample_count, idx.size()));
  std::vector<double> out;
  for (std::size_t k : idx) {
    const Sample& s = data.samples[k];
    const ForwardTrace tr = forward_trace(net, s.assortment, features_of(data, s));
    const auto members = s.assortment.members();
    double lo_i = INFINITY, hi_i = -INFINITY, lo_o = INFINITY, hi_o = -INFINITY;
    for (int i : members) {
      lo_i = std::min(lo_i, tr.latent(i));
      hi_i = std::max(hi_i, tr.latent(i));
      lo_o = std::min(lo_o, tr.logits(i));
      hi_o = std::max(hi_o, tr.logits(i));
    }
    const bool degenerate = !(hi_i > lo_i) || !(hi_o > lo_o);
    for (int i : members) {
      if (degenerate) {
        out.push_back(0.0);
        continue;
      }
      const double in = (tr.latent(i) - lo_i) / (hi_i - lo_i);
      const double o = (tr.logits(i) - lo_o) / (hi_o - lo_o);
      out.push_back(o - in);
    }
  }
  return out;
}

std::vector<int> histogram(const std::vector<double>& values, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) throw DimensionError("histogram needs bins >= 1 and hi > lo");
  std::vector<int> h(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    b = std::clamp(b, 0, bins - 1);
    ++h[static_cast<std::size_t>(b)];
  }
  return h;
}

double expected_entropy(const ChoiceModel& model, const ChoiceDataset& data) {
  if (data.empty()) throw DatasetError("entropy of an empty dataset");
  double total = 0.0;
  for (const Sample& s : data.samples) {
    const ProbVector p = model.prob(s.assortment, features_of(data, s));
    for (double q : p)
      if (q > 0.0) total -= q * std::log(std::max(q, kProbFloor));
  }
  return total / static_cast<double>(data.size());
}

}  // namespace choicenet
