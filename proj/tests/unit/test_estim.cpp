#include <cmath>

#include <doctest.h>

#include "choicenet/core/error.hpp"
#include "choicenet/estim/em.hpp"
#include "choicenet/estim/mle.hpp"
#include "choicenet/synth/dataset_gen.hpp"
#include "choicenet/synth/generators.hpp"

using namespace choicenet;

TEST_CASE("mnl mle recovers utilities") {
  Universe u(3);
  MnlModel truth(u, {0.7, 0, 0});
  auto data = gen_dataset(truth, AssortmentSampler(SamplerKind::kFixedSize, u, 2), 100000, 1);
  auto fit = fit_mnl_mle(data);
  CHECK(fit.converged);
  CHECK(fit.grad_norm <= 1e-6);
  CHECK(fit.model.utilities()[0] == doctest::Approx(0.7).epsilon(0.05 / 0.7));
  CHECK(std::abs(fit.model.utilities()[1]) < 0.05);
  CHECK(fit.model.utilities()[2] == 0.0);
}

TEST_CASE("mnl mle restart invariance and unidentified products") {
  Universe u(6);
  Rng rng(3);
  MnlModel truth = gen_mnl(u, rng);
  auto data = gen_dataset(truth, AssortmentSampler(SamplerKind::kUniformSize, u), 5000, 2);
  auto a = fit_mnl_mle(data);
  MleConfig fixed;
  fixed.line_search = false;
  fixed.step = 0.5;
  fixed.max_iters = 200000;
  auto b = fit_mnl_mle(data, fixed);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(std::abs(ce_loss(a.model, data) - ce_loss(b.model, data)) < 1e-6);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(a.model.utilities()[static_cast<std::size_t>(i)] - b.model.utilities()[static_cast<std::size_t>(i)]) < 1e-4);

  // Product 0 never offered.
  for (auto& s : data.samples) {
    auto mask = s.assortment.mask();
    mask[0] = 0;
    if (s.chosen == 0) s.chosen = 5;
    s.assortment = Assortment(u, mask);
  }
  auto c = fit_mnl_mle(data);
  CHECK(std::isinf(c.model.utilities()[0]));
  CHECK(!c.warnings.empty());
  CHECK(ce_loss(c.model, data) > 0.0);
}

TEST_CASE("mnl mle flags a product that always wins") {
  Universe u(3);
  ChoiceDataset d;
  d.universe = u;
  for (int k = 0; k < 50; ++k) d.samples.push_back({0, Assortment::parse(u, "101"), {}});
  for (int k = 0; k < 50; ++k) d.samples.push_back({k % 2 ? 1 : 2, Assortment::parse(u, "011"), {}});
  MleConfig cfg;
  cfg.max_iters = 20000;
  auto fit = fit_mnl_mle(d, cfg);
  CHECK(fit.diverged);
  CHECK(!fit.converged);
}

TEST_CASE("feature mnl mle") {
  Universe u(8);
  Rng rng(5);
  Mat x = gen_product_features(8, 5, rng);
  auto truth = gen_feature_mnl(u, 5, rng);
  auto data = gen_dataset(truth, AssortmentSampler(SamplerKind::kUniformSize, u), 100000, 6, x);
  auto fit = fit_feature_mnl_mle(data);
  CHECK(fit.converged);
  CHECK(!fit.non_unique);
  for (int j = 0; j < 5; ++j) CHECK(std::abs(fit.model.beta()[static_cast<std::size_t>(j)] - truth.beta()[static_cast<std::size_t>(j)]) < 0.05);

  // One-hot feature of product 0 reduces to the plain MLE on that utility
  // with every other utility fixed at 0.
  Mat onehot = Mat::Zero(3, 1);
  onehot(0, 0) = 1;
  Universe v(3);
  MnlModel plain(v, {0.4, 0, 0});
  auto d2 = gen_dataset(plain, AssortmentSampler(SamplerKind::kUniformSize, v), 20000, 7, onehot);
  auto f2 = fit_feature_mnl_mle(d2);
  const double m = static_cast<double>(d2.size());
  // First-order condition of the one-parameter likelihood.
  double grad = 0.0;
  MnlModel at(v, {f2.model.beta()[0], 0, 0});
  for (const auto& s : d2.samples) grad += (s.chosen == 0) - at.prob(s.assortment)[0];
  CHECK(std::abs(grad / m) < 1e-5);

  Mat dup(3, 2);
  dup << 1, 1, 0, 0, 0, 0;
  d2.product_features = dup;
  CHECK(fit_feature_mnl_mle(d2).non_unique);
}

TEST_CASE("em on full assortments returns empirical frequencies") {
  Universe u(5);
  Rng rng(9);
  MccmModel truth = gen_mccm(u, mccm_preset(5), rng);
  auto data = gen_dataset(truth, AssortmentSampler(SamplerKind::kFixedSize, u, 4), 3000, 10);
  auto fit = fit_mccm_em(data, {1000, 0.01, 3, 1});
  Vec freq = Vec::Zero(5);
  for (const auto& s : data.samples) freq(s.chosen) += 1.0 / 3000.0;
  for (int i = 0; i < 5; ++i) CHECK(std::abs(fit.model.lambda()(i) - freq(i)) < 1e-9);
}

TEST_CASE("em monotone and well formed") {
  Universe u(8);
  Rng rng(4);
  MccmModel truth = gen_mccm(u, mccm_preset(8), rng);
  auto data = gen_dataset(truth, AssortmentSampler(SamplerKind::kUniformSize, u), 4000, 11);
  EmConfig cfg;
  cfg.threshold = 1e-4;
  cfg.max_iters = 200;
  cfg.seed = 5;
  auto fit = fit_mccm_em(data, cfg);
  REQUIRE(fit.loglik.size() >= 2);
  for (std::size_t k = 1; k < fit.loglik.size(); ++k) CHECK(fit.loglik[k] >= fit.loglik[k - 1] - 1e-9);
  CHECK(std::abs(fit.model.lambda().sum() - 1.0) < 1e-9);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(fit.model.rho().row(i).sum() - 1.0) < 1e-9);
  CHECK(fit.loglik.back() == doctest::Approx(-ce_loss(fit.model, data)).epsilon(1e-9));
  auto again = fit_mccm_em(data, cfg);
  CHECK(again.model.lambda() == fit.model.lambda());
}

TEST_CASE("em all no-purchase data") {
  Universe u(4);
  ChoiceDataset d;
  d.universe = u;
  for (int k = 0; k < 200; ++k) d.samples.push_back({3, Assortment::parse(u, k % 2 ? "1001" : "0111"), {}});
  auto fit = fit_mccm_em(d, {2000, 1e-6, 1, 1});
  auto p = fit.model.prob(Assortment::parse(u, "1001"));
  CHECK(p[3] > 0.99);
}

TEST_CASE("em nests mnl") {
  Universe u(8);
  Rng rng(12);
  MnlModel truth = gen_mnl(u, rng);
  AssortmentSampler smp(SamplerKind::kUniformSize, u);
  auto train = gen_dataset(truth, smp, 20000, 13);
  auto test = gen_dataset(truth, smp, 10000, 14);
  auto mle = fit_mnl_mle(train);
  auto em = fit_mccm_em(train, {1000, 0.001, 2, 1});
  CHECK(ce_loss(em.model, test) >= ce_loss(mle.model, test) - 0.02);
  CHECK(ce_loss(em.model, test) <= ce_loss(mle.model, test) + 0.02);
}
