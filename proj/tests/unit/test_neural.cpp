#include <cmath>
#include <sstream>

#include <doctest.h>

#include "choicenet/core/error.hpp"
#include "choicenet/estim/mle.hpp"
#include "choicenet/neural/bound.hpp"
#include "choicenet/neural/network.hpp"
#include "choicenet/neural/network_json.hpp"
#include "choicenet/neural/train.hpp"
#include "choicenet/neural/warm_start.hpp"
#include "choicenet/synth/dataset_gen.hpp"
#include "choicenet/synth/generators.hpp"
#include "choicenet/synth/models.hpp"

using namespace choicenet;

namespace {

// Random assortment that always offers the no-purchase option.
Assortment random_assortment(const Universe& u, Rng& rng) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(u.size()));
  for (auto& b : mask) b = static_cast<std::uint8_t>(rng() >> 63);
  mask.back() = 1;
  return Assortment(u, mask);
}

int random_member(const Assortment& s, Rng& rng) {
  auto m = s.members();
  return m[std::uniform_int_distribution<std::size_t>(0, m.size() - 1)(rng)];
}

// Biases get a spread so that few pre-activations sit near the ReLU kink.
void jitter_biases(NetworkParams& p, Rng& rng) {
  std::normal_distribution<double> nd(0.0, 0.5);
  auto perturb = [&](std::vector<Layer>& ls) {
    for (Layer& l : ls)
      for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = nd(rng);
  };
  perturb(p.layers);
  if (p.enc) {
    perturb(p.enc->product);
    perturb(p.enc->customer);
  }
  if (p.head)
    for (Eigen::Index i = 0; i < p.head->b.size(); ++i) p.head->b(i) = nd(rng);
}

double nll(const NetworkParams& p, const Assortment& s, int chosen, const Features& f) {
  return -std::log(forward_trace(p, s, f).prob[static_cast<std::size_t>(chosen)]);
}

// Relative error of the analytic gradient against central differences.
double gradient_error(NetworkParams p, const Assortment& s, int chosen, const Features& f) {
  NetworkParams g = backward(p, s, chosen, f);
  auto pt = p.tensors();
  auto gt = g.tensors();
  const double eps = 1e-5;
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < pt.size(); ++k) {
    for (std::size_t j = 0; j < pt[k].size(); ++j) {
      const double keep = pt[k][j];
      pt[k][j] = keep + eps;
      const double up = nll(p, s, chosen, f);
      pt[k][j] = keep - eps;
      const double down = nll(p, s, chosen, f);
      pt[k][j] = keep;
      const double num = (up - down) / (2 * eps);
      diff += (num - gt[k][j]) * (num - gt[k][j]);
      na += gt[k][j] * gt[k][j];
      nn += num * num;
    }
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-8});
}

NetSpec feature_spec(Arch arch, int n, int d, int dc) {
  NetSpec spec;
  spec.arch = arch;
  spec.n = n;
  spec.features = true;
  spec.product_dim = d;
  spec.customer_dim = dc;
  spec.product_hidden = {4};
  spec.customer_hidden = {3};
  spec.latent_dim = 2;
  spec.hidden = {5};
  spec.blocks = 2;
  return spec;
}

}  // namespace

TEST_CASE("gated output is a distribution on the assortment") {
  Rng rng(1);
  for (Arch arch : {Arch::kGasn, Arch::kRasn}) {
    NetSpec spec;
    spec.arch = arch;
    spec.n = 6;
    spec.hidden = {7};
    spec.blocks = 2;
    NetworkParams p = init_network(spec, rng);
    jitter_biases(p, rng);
    Universe u = p.universe();
    for (int t = 0; t < 50; ++t) {
      Assortment s = random_assortment(u, rng);
      auto tr = forward_trace(p, s);
      double sum = 0.0;
      for (int i = 0; i < 6; ++i) {
        if (!s.contains(i)) CHECK(tr.prob[static_cast<std::size_t>(i)] == 0.0);
        sum += tr.prob[static_cast<std::size_t>(i)];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
    // The no-purchase singleton takes all the mass.
    auto single = forward_trace(p, Assortment::no_purchase_only(u)).prob;
    CHECK(single.back() == 1.0);
  }
}

TEST_CASE("gated softmax ignores a shift of the in-assortment logits") {
  Rng rng(2);
  NetSpec spec;
  spec.n = 5;
  NetworkParams p = init_network(spec, rng);
  jitter_biases(p, rng);
  Universe u = p.universe();
  // With one layer, raising every bias and zeroing W on the offered rows
  // adds a constant to the offered logits after the ReLU (all positive).
  p.layers[0].w.setZero();
  for (Eigen::Index i = 0; i < 5; ++i) p.layers[0].b(i) = 1.0 + 0.3 * static_cast<double>(i);
  NetworkParams q = p;
  q.layers[0].b.array() += 2.5;
  for (int t = 0; t < 10; ++t) {
    Assortment s = random_assortment(u, rng);
    auto a = forward_gasn(p, s);
    auto b = forward_gasn(q, s);
    for (int i = 0; i < 5; ++i) CHECK(a[static_cast<std::size_t>(i)] == doctest::Approx(b[static_cast<std::size_t>(i)]).epsilon(1e-12));
  }
}

TEST_CASE("one-layer gasn with W = 0 is mnl, exhaustive at n = 10") {
  const int n = 10;
  Universe u(n);
  std::vector<double> util = {0.5, 1.2, 0.1, 2.0, 0.7, 0.0, 1.5, 0.9, 0.3, 0.0};
  NetworkParams p;
  p.n = n;
  p.layers.push_back(Layer{Mat::Zero(n, n), Eigen::Map<Vec>(util.data(), n)});
  MnlModel mnl(u, util);
  double worst = 0.0;
  for (std::uint64_t bits = 1ULL << (n - 1); bits < (1ULL << n); ++bits) {
    Assortment s = Assortment::from_bits(u, bits);
    auto a = forward_gasn(p, s);
    auto b = mnl.prob(s);
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("rasn with zero weights is uniform over the assortment") {
  Universe u(6);
  Rng rng(3);
  for (int blocks : {0, 1, 3}) {
    NetSpec spec;
    spec.arch = Arch::kRasn;
    spec.n = 6;
    spec.blocks = blocks;
    NetworkParams p = init_network(spec, rng);
    for (Layer& l : p.layers) {
      l.w.setZero();
      l.b.setZero();
    }
    for (int t = 0; t < 10; ++t) {
      Assortment s = random_assortment(u, rng);
      auto pr = forward_rasn(p, s);
      for (int i = 0; i < 6; ++i)
        CHECK(pr[static_cast<std::size_t>(i)] == doctest::Approx(s.contains(i) ? 1.0 / s.count() : 0.0));
    }
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(4);
  for (Arch arch : {Arch::kGasn, Arch::kRasn}) {
    int bad = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      NetSpec spec;
      spec.arch = arch;
      spec.n = 3 + static_cast<int>(rng() % 4);
      spec.hidden = {spec.n + 1};
      spec.blocks = 2;
      NetworkParams p = init_network(spec, rng);
      jitter_biases(p, rng);
      Assortment s = random_assortment(p.universe(), rng);
      const double err = gradient_error(p, s, random_member(s, rng), {});
      worst = std::max(worst, err);
      bad += err > 1e-4;
    }
    INFO(to_string(arch), " worst relative error ", worst);
    CHECK(bad == 0);
  }
}

TEST_CASE("feature network gradients match central differences") {
  Rng rng(5);
  std::normal_distribution<double> nd;
  for (Arch arch : {Arch::kGasn, Arch::kRasn}) {
    int bad = 0;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const int n = 3 + static_cast<int>(rng() % 4);
      const int dc = (t % 2) ? 2 : 0;
      NetworkParams p = init_network(feature_spec(arch, n, 3, dc), rng);
      jitter_biases(p, rng);
      Mat x(n, 3);
      for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = nd(rng);
      std::vector<double> cust;
      for (int j = 0; j < dc; ++j) cust.push_back(nd(rng));
      Assortment s = random_assortment(p.universe(), rng);
      const double err = gradient_error(p, s, random_member(s, rng), Features{&x, cust});
      worst = std::max(worst, err);
      bad += err > 1e-4;
    }
    INFO(to_string(arch), "(f) worst relative error ", worst);
    CHECK(bad == 0);
  }
}

TEST_CASE("bias gradient of a zero gasn is softmax minus onehot") {
  const int n = 5;
  NetworkParams p;
  p.n = n;
  p.layers.push_back(Layer{Mat::Zero(n, n), Vec::Constant(n, 0.0)});
  // Positive biases keep every unit active.
  p.layers[0].b << 0.3, 1.1, 0.2, 0.8, 0.5;
  Universe u(n);
  Assortment s = Assortment::full(u);
  MnlModel mnl(u, {0.3, 1.1, 0.2, 0.8, 0.5});
  auto sm = mnl.prob(s);
  NetworkParams g = backward(p, s, 1);
  for (int i = 0; i < n; ++i)
    CHECK(g.layers[0].b(i) == doctest::Approx(sm[static_cast<std::size_t>(i)] - (i == 1 ? 1.0 : 0.0)).epsilon(1e-12));
  // dL/dW = (softmax - onehot) S^T with S the all-ones input.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) CHECK(g.layers[0].w(i, j) == doctest::Approx(g.layers[0].b(i)).epsilon(1e-12));
}

TEST_CASE("dead relu units get no gradient") {
  Rng rng(6);
  NetSpec spec;
  spec.n = 5;
  spec.hidden = {6};
  NetworkParams p = init_network(spec, rng);
  // Unit 2 of the last layer is dead on every input.
  p.layers[1].w.row(2).setConstant(-1.0);
  p.layers[1].b(2) = -1.0;
  for (int t = 0; t < 10; ++t) {
    Assortment s = random_assortment(p.universe(), rng);
    auto tr = forward_trace(p, s);
    REQUIRE(tr.pre[1](2) < 0.0);
    CHECK(tr.post[1](2) == 0.0);
    NetworkParams g = backward(p, s, random_member(s, rng));
    CHECK(g.layers[1].w.row(2).isZero());
    CHECK(g.layers[1].b(2) == 0.0);
  }
  Assortment s = Assortment::full(p.universe());
  CHECK_THROWS_AS(backward(p, Assortment::no_purchase_only(p.universe()), 0), DatasetError);
  CHECK_NOTHROW(backward(p, s, 0));
}

TEST_CASE("feature network basics") {
  Rng rng(7);
  const int n = 5;
  NetworkParams p = init_network(feature_spec(Arch::kGasn, n, 3, 0), rng);
  Mat x = Mat::Random(n, 3);
  Universe u(n);
  Assortment s = Assortment::parse(u, "10101");
  auto base = forward_trace(p, s, Features{&x, {}});
  // Unoffered products see zero features, so their rows do not matter.
  Mat y = x;
  y.row(1).setConstant(9.0);
  y.row(3).setConstant(-4.0);
  auto other = forward_trace(p, s, Features{&y, {}});
  for (int i = 0; i < n; ++i) CHECK(base.prob[static_cast<std::size_t>(i)] == doctest::Approx(other.prob[static_cast<std::size_t>(i)]).epsilon(1e-14));

  // A constant latent utility makes the body see a uniform input.
  NetworkParams q = p;
  for (Layer& l : q.enc->product) l.w.setZero();
  q.enc->product.back().b.setConstant(0.7);
  auto tr = forward_trace(q, s, Features{&x, {}});
  const double c = tr.latent(0);
  NetworkParams body;
  body.n = n;
  body.layers = q.layers;
  Eigen::VectorXd z = Eigen::VectorXd::Constant(n, c);
  for (const Layer& l : body.layers) z = (l.w * z + l.b).cwiseMax(0.0);
  for (int i = 0; i < n; ++i) {
    CHECK(tr.latent(i) == doctest::Approx(c));
    CHECK(tr.logits(i) == doctest::Approx(z(i)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(forward_feature(p, s, Features{nullptr, {}}), DimensionError);
  const std::vector<double> two = {1.0, 2.0};
  CHECK_THROWS_AS(forward_feature(p, s, Features{&x, two}), DimensionError);
}

TEST_CASE("network validation") {
  NetworkParams p;
  p.n = 4;
  p.arch = Arch::kRasn;
  p.layers.push_back(Layer{Mat::Zero(3, 4), Vec::Zero(3)});
  CHECK_THROWS_AS(p.validate(), DimensionError);
  p.arch = Arch::kGasn;
  CHECK_THROWS_AS(p.validate(), DimensionError);
  p.layers.push_back(Layer{Mat::Zero(4, 3), Vec::Zero(4)});
  CHECK_NOTHROW(p.validate());
  p.layers[0].w(0, 0) = std::nan("");
  CHECK_THROWS_AS(p.validate(), DimensionError);
  CHECK_THROWS(parse_arch("mlp"));
}

TEST_CASE("norm projection") {
  Rng rng(8);
  NetSpec spec;
  spec.n = 6;
  spec.hidden = {8};
  NetworkParams p = init_network(spec, rng);
  for (Layer& l : p.layers) {
    l.w *= 5.0;
    l.b.setConstant(3.0);
  }
  project_params(p, 0.75, 0.2);
  for (const Layer& l : p.layers) {
    for (Eigen::Index i = 0; i < l.w.rows(); ++i) CHECK(l.w.row(i).cwiseAbs().sum() <= 0.75 * (1 + 1e-15));
    CHECK(l.b.cwiseAbs().maxCoeff() <= 0.2);
  }
}

TEST_CASE("training is deterministic and learns") {
  Universe u(6);
  Rng rng(9);
  MnlModel truth = gen_mnl(u, rng);
  AssortmentSampler sampler(SamplerKind::kUniformSize, u);
  auto tr = gen_dataset(truth, sampler, 3000, 1);
  auto va = gen_dataset(truth, sampler, 1000, 2);
  NetSpec spec;
  spec.n = 6;
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.lr = 0.01;
  cfg.seed = 11;
  auto a = train(spec, tr, &va, cfg);
  auto b = train(spec, tr, &va, cfg);
  REQUIRE(a.log.size() == 16);
  CHECK(a.log[0].epoch == 0);
  for (std::size_t k = 0; k < a.log.size(); ++k) {
    CHECK(a.log[k].train_ce == b.log[k].train_ce);
    CHECK(a.log[k].val_ce == b.log[k].val_ce);
  }
  auto pa = a.params.tensors();
  auto pb = b.params.tensors();
  for (std::size_t k = 0; k < pa.size(); ++k)
    for (std::size_t j = 0; j < pa[k].size(); ++j) CHECK(pa[k][j] == pb[k][j]);
  CHECK(a.log.back().val_ce < a.log.front().val_ce);
  CHECK(a.best_val == doctest::Approx(network_ce(a.params, va)));
  double best = a.log[0].val_ce;
  for (auto& r : a.log) best = std::min(best, r.val_ce);
  CHECK(a.best_val == best);

  cfg.seed = 12;
  auto c = train(spec, tr, &va, cfg);
  CHECK(c.log[0].train_ce != a.log[0].train_ce);

  cfg.w_bound = 0.5;
  cfg.b_bound = 0.1;
  auto d = train(spec, tr, nullptr, cfg);
  CHECK(std::isnan(d.log.back().val_ce));
  for (const Layer& l : d.params.layers) {
    for (Eigen::Index i = 0; i < l.w.rows(); ++i) CHECK(l.w.row(i).cwiseAbs().sum() <= 0.5 * (1 + 1e-12));
    CHECK(l.b.cwiseAbs().maxCoeff() <= 0.1);
  }

  ChoiceDataset empty;
  empty.universe = u;
  CHECK_THROWS_AS(train(spec, empty, nullptr, cfg), DatasetError);
  cfg.lr = 0;
  CHECK_THROWS_AS(train(spec, tr, nullptr, cfg), DimensionError);
}

TEST_CASE("divergent training aborts with its log") {
  Universe u(4);
  MnlModel truth(u, {1, 0, 0, 0});
  auto tr = gen_dataset(truth, AssortmentSampler(SamplerKind::kUniformSize, u), 200, 1);
  NetSpec spec;
  spec.n = 4;
  Rng rng(1);
  NetworkParams p = init_network(spec, rng);
  // Two Adam steps of size ~1e308 overflow the weights.
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.lr = 1e308;
  try {
    train(p, tr, nullptr, cfg);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(!e.log().empty());
    CHECK(e.log().size() <= 3);
  }
}

TEST_CASE("gasn beats mnl on the decoy fixture") {
  const Fixture fx = fixture_tables()[1];
  auto tr = fx.sample(8000, 1);
  auto va = fx.sample(4000, 3);
  auto te = fx.sample(8000, 2);
  auto mnl = fit_mnl_mle(tr);
  NetSpec spec;
  spec.n = fx.universe.size();
  TrainConfig cfg;
  cfg.lr = 0.01;
  // Two distinct assortments leave many output units dead at init, so the
  // fit is a best-of-12 multi-start picked on validation loss.
  std::optional<TrainResult> best;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    cfg.seed = seed;
    auto r = train(spec, tr, &va, cfg);
    if (!best || r.best_val < best->best_val) best = std::move(r);
  }
  NeuralChoiceModel nn(best->params);
  CHECK(ce_loss(nn, te) < ce_loss(mnl.model, te) - 0.03);
  for (std::size_t c = 0; c < fx.cases.size(); ++c) {
    auto p = nn.prob(fx.cases[c]);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - fx.truth[c][i]) < 0.04);
  }
  // Mnl cannot move the two leading products between cases.
  auto m1 = mnl.model.prob(fx.cases[0]);
  auto m2 = mnl.model.prob(fx.cases[1]);
  CHECK(std::abs(m1[0] - m2[0]) < 0.1);
}

TEST_CASE("warm start copies the old network") {
  Rng rng(10);
  for (Arch arch : {Arch::kGasn, Arch::kRasn}) {
    NetSpec spec;
    spec.arch = arch;
    spec.n = 5;
    spec.hidden = {7};
    spec.blocks = 2;
    NetworkParams old = init_network(spec, rng);
    jitter_biases(old, rng);
    NetworkParams big = warm_start_augment(old, 8, 3);
    CHECK(big.n == 8);
    // Products 0..3 keep their index; no-purchase moves from 4 to 7.
    auto map = [](int i) { return i == 4 ? 7 : i; };
    for (std::size_t l = 0; l < old.layers.size(); ++l) {
      const Layer& a = old.layers[l];
      const Layer& b = big.layers[l];
      const bool rows_u = arch == Arch::kRasn || l + 1 == old.layers.size();
      const bool cols_u = arch == Arch::kRasn || l == 0;
      for (int r = 0; r < a.out(); ++r) {
        const int rr = rows_u ? map(r) : r;
        CHECK(b.b(rr) == a.b(r));
        for (int c = 0; c < a.in(); ++c) CHECK(b.w(rr, cols_u ? map(c) : c) == a.w(r, c));
      }
    }

    NetworkParams zero = warm_start_augment(old, 8, 3, NewEntryInit::kZero);
    Universe uo(5), un(8);
    for (int t = 0; t < 20; ++t) {
      Assortment so = random_assortment(uo, rng);
      std::vector<std::uint8_t> mask(8, 0);
      for (int i = 0; i < 5; ++i) mask[static_cast<std::size_t>(map(i))] = so.mask()[static_cast<std::size_t>(i)];
      auto po = forward_trace(old, so).prob;
      auto pn = forward_trace(zero, Assortment(un, mask)).prob;
      for (int i = 0; i < 5; ++i)
        CHECK(pn[static_cast<std::size_t>(map(i))] == doctest::Approx(po[static_cast<std::size_t>(i)]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(warm_start_augment(old, 5, 1), UnsupportedError);
  }
}

TEST_CASE("generalization bound") {
  // 4n / sqrt(m) = 0.08, gate term 2 * sqrt(2 ln 4).
  const double direct = 0.08 * 2.0 * std::sqrt(2.0 * std::log(4.0));
  CHECK(generalization_bound(1.0, 0.0, 1, 2, 10000, 0.05, 0.0) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(direct == doctest::Approx(0.2664).epsilon(1e-3));
  const double a = generalization_bound(0.8, 1.5, 3, 10, 5000, 0.1, 2.0);
  CHECK(generalization_bound(0.8, 1.5, 3, 10, 20000, 0.1, 2.0) == doctest::Approx(a / 2).epsilon(1e-12));
  CHECK(generalization_bound(0.8, 1.5, 0, 10, 5000, 0.1, 0.0) ==
        doctest::Approx(40.0 / std::sqrt(5000.0) * std::sqrt(2 * std::log(20.0))).epsilon(1e-12));
  // W = 1/2 uses the limit L * b of the geometric factor.
  const double half = generalization_bound(0.5, 2.0, 3, 4, 100, 0.1, 0.0);
  CHECK(half == doctest::Approx(1.6 * (2.0 * 3 + std::sqrt(2 * std::log(8.0)))).epsilon(1e-12));
  const double near = generalization_bound(0.5 + 1e-7, 2.0, 3, 4, 100, 0.1, 0.0);
  CHECK(near == doctest::Approx(half).epsilon(1e-5));
  CHECK_THROWS(generalization_bound(1.0, 0.0, 1, 2, 0, 0.05, 0.0));
}

TEST_CASE("network json round trip") {
  Rng rng(12);
  std::vector<NetworkParams> nets;
  NetSpec g;
  g.n = 5;
  g.hidden = {3};
  nets.push_back(init_network(g, rng));
  nets.push_back(init_network(feature_spec(Arch::kRasn, 5, 3, 2), rng));
  for (const NetworkParams& p : nets) {
    auto j = network_to_json(p);
    NetworkParams q = network_from_json(nlohmann::json::parse(j.dump()));
    CHECK(q.arch == p.arch);
    CHECK(q.n == p.n);
    CHECK(q.feature_based() == p.feature_based());
    auto a = const_cast<NetworkParams&>(p).tensors();
    auto b = q.tensors();
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k)
      for (std::size_t i = 0; i < a[k].size(); ++i) CHECK(a[k][i] == b[k][i]);
  }
  auto j = network_to_json(nets[0]);
  CHECK(j["dims"] == nlohmann::json::array({5, 3, 5}));
  j["layers"][0]["w"].erase(0);
  CHECK_THROWS_AS(network_from_json(j), ParseError);

  std::ostringstream os;
  write_train_log(os, {{0, 1.5, std::nan("")}, {1, 1.25, 1.3}});
  CHECK(os.str() == "epoch,train_ce,val_ce\n0,1.5,nan\n1,1.25,1.3\n");
}
