#include "choicenet/core/choice_model.hpp"

#include <cmath>

#include "choicenet/core/error.hpp"

namespace choicenet {

ProbVector UniformModel::prob(const Assortment& s) const {
  ProbVector p(static_cast<std::size_t>(s.size()), 0.0);
  const double w = 1.0 / s.count();
  for (int i = 0; i < s.size(); ++i)
    if (s.contains(i)) p[static_cast<std::size_t>(i)] = w;
  return p;
}

void check_prob_vector(const ProbVector& p, const Assortment& s, double tol) {
  if (static_cast<int>(p.size()) != s.size())
    throw InvariantError("probability vector has wrong length");
  double total = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    const double x = p[static_cast<std::size_t>(i)];
    if (!s.contains(i)) {
      if (x != 0.0) throw InvariantError("nonzero probability on unoffered product " + std::to_string(i));
      continue;
    }
    if (!(x >= -tol && x <= 1.0 + tol))
      throw InvariantError("probability out of [0,1] at product " + std::to_string(i));
    total += x;
  }
  if (std::abs(total - 1.0) > tol)
    throw InvariantError("probabilities sum to " + std::to_string(total));
}

Features features_of(const ChoiceDataset& data, const Sample& sample) {
  Features f;
  if (data.product_features) f.product = &*data.product_features;
  f.customer = sample.customer;
  return f;
}

double ce_loss(const ChoiceModel& model, const ChoiceDataset& data) {
  if (data.empty()) throw DatasetError("cross-entropy of an empty dataset");
  require_valid(data);
  if (!(model.universe() == data.universe))
    throw DimensionError("model and dataset universes differ");
  double total = 0.0;
  for (const Sample& s : data.samples) {
    ProbVector p = model.prob(s.assortment, features_of(data, s));
    check_prob_vector(p, s.assortment, 1e-6);
    total -= std::log(std::max(p[static_cast<std::size_t>(s.chosen)], kProbFloor));
  }
  return total / static_cast<double>(data.size());
}

double expected_revenue(const ProbVector& p, const RevenueSpec& rev) {
  if (p.size() != rev.mu.size()) throw DimensionError("revenue vector length mismatch");
  double r = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) r += rev.mu[i] * p[i];
  return r;
}

double expected_revenue(const ChoiceModel& model, const Assortment& s,
                        const RevenueSpec& rev) {
  return expected_revenue(model.prob(s), rev);
}

int sample_from(const ProbVector& p, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = unif(rng);
  double acc = 0.0;
  int last = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    acc += p[i];
    last = static_cast<int>(i);
    if (r < acc) return last;
  }
  if (last < 0) throw InvariantError("cannot sample from an all-zero distribution");
  return last;
}

int sample_choice(const ChoiceModel& model, const Assortment& s, Rng& rng) {
  return sample_from(model.prob(s), rng);
}

}  // namespace choicenet
