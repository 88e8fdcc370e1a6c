#include <cmath>

#include <doctest.h>

#include "choicenet/core/error.hpp"
#include "choicenet/synth/dataset_gen.hpp"
#include "choicenet/synth/generators.hpp"
#include "choicenet/synth/model_json.hpp"

using namespace choicenet;

namespace {

std::vector<Assortment> all_assortments(const Universe& u) {
  std::vector<Assortment> out;
  const std::uint64_t np_bit = u.has_no_purchase() ? (1ULL << u.no_purchase()) : 0;
  for (std::uint64_t b = 0; b < (1ULL << u.size()); ++b) {
    if ((b & np_bit) != np_bit || b == 0) continue;
    out.push_back(Assortment::from_bits(u, b));
  }
  return out;
}

// Walks the chain until it hits the offered set.
int simulate_mccm(const MccmModel& m, const Assortment& s, Rng& rng) {
  std::vector<double> lam(m.lambda().data(), m.lambda().data() + m.lambda().size());
  int state = sample_from(lam, rng);
  while (!s.contains(state)) {
    std::vector<double> row(m.rho().row(state).data(), m.rho().row(state).data() + m.rho().cols());
    state = sample_from(row, rng);
  }
  return state;
}

}  // namespace

TEST_CASE("mnl probabilities") {
  Universe u(3);
  auto p = MnlModel(u, {0, 0, 0}).prob(Assortment::full(u));
  for (double x : p) CHECK(x == doctest::Approx(1.0 / 3));
  Universe u2(2);
  auto q = MnlModel(u2, {1, 0}).prob(Assortment::full(u2));
  CHECK(q[0] == doctest::Approx(0.7310585786));
  CHECK(q[1] == doctest::Approx(0.2689414214));
  // Large utilities stay finite.
  auto r = MnlModel(u2, {800, -800}).prob(Assortment::full(u2));
  CHECK(r[0] == doctest::Approx(1.0));
}

TEST_CASE("mccm probabilities") {
  Universe u(3);
  Vec lam = Vec::Constant(3, 1.0 / 3);
  Mat rho = Mat::Constant(3, 3, 1.0 / 3);
  MccmModel m(u, lam, rho);
  auto p = m.prob(Assortment::parse(u, "101"));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == 0.0);
  CHECK(p[2] == doctest::Approx(0.5));
  auto full = m.prob(Assortment::full(u));
  for (int i = 0; i < 3; ++i) CHECK(full[static_cast<std::size_t>(i)] == doctest::Approx(lam(i)));
}

TEST_CASE("mccm closed class of unoffered products goes to no-purchase") {
  Universe u(4);
  Vec lam(4);
  lam << 0.25, 0.25, 0.25, 0.25;
  Mat rho = Mat::Zero(4, 4);
  rho(0, 1) = 1;  // 0 and 1 form a closed class
  rho(1, 0) = 1;
  rho(2, 3) = 1;
  rho(3, 3) = 1;
  MccmModel m(u, lam, rho);
  auto p = m.prob(Assortment::parse(u, "0011"));
  CHECK(p[2] == doctest::Approx(0.25));
  CHECK(p[3] == doctest::Approx(0.75));
}

TEST_CASE("mccm matches chain simulation") {
  Rng gen(11);
  for (int trial = 0; trial < 3; ++trial) {
    Universe u(6 + trial);
    MccmModel m = gen_mccm(u, {1.0, 2}, gen);
    AssortmentSampler smp(SamplerKind::kUniformSize, u);
    Assortment s = smp.draw(gen);
    auto p = m.prob(s);
    const int walks = 200000;
    std::vector<int> counts(static_cast<std::size_t>(u.size()), 0);
    Rng rng(100 + trial);
    for (int k = 0; k < walks; ++k) ++counts[static_cast<std::size_t>(simulate_mccm(m, s, rng))];
    for (int i = 0; i < u.size(); ++i) {
      double pi = p[static_cast<std::size_t>(i)];
      double se = std::sqrt(pi * (1 - pi) / walks) + 1e-12;
      CHECK(std::abs(counts[static_cast<std::size_t>(i)] / double(walks) - pi) <= 3.5 * se + 1e-9);
    }
  }
}

TEST_CASE("np probabilities") {
  Universe u(4);
  NpModel one(u, {{2, 0, 1, 3}}, {1.0});
  CHECK(one.prob(Assortment::parse(u, "1011"))[2] == 1.0);
  CHECK(one.prob(Assortment::parse(u, "1101"))[0] == 1.0);
  Universe w(3, false);
  NpModel two(w, {{0, 1, 2}, {2, 1, 0}}, {0.5, 0.5});
  auto p = two.prob(Assortment::parse(w, "011"));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == doctest::Approx(0.5));
  CHECK_THROWS_AS(NpModel(u, {{0, 0, 1, 2}}, {1.0}), DimensionError);
}

TEST_CASE("np matches type sampling") {
  Rng gen(3);
  Universe u(8);
  NpModel m = gen_np(u, 10, gen);
  Assortment s = Assortment::parse(u, "10110101");
  auto p = m.prob(s);
  const int draws = 100000;
  std::vector<int> counts(8, 0);
  std::vector<double> w = m.weights();
  for (int k = 0; k < draws; ++k) {
    const auto& perm = m.perms()[static_cast<std::size_t>(sample_from(w, gen))];
    for (int i : perm)
      if (s.contains(i)) {
        ++counts[static_cast<std::size_t>(i)];
        break;
      }
  }
  for (int i = 0; i < 8; ++i) {
    double pi = p[static_cast<std::size_t>(i)];
    double se = std::sqrt(pi * (1 - pi) / draws) + 1e-12;
    CHECK(std::abs(counts[static_cast<std::size_t>(i)] / double(draws) - pi) <= 3.5 * se + 1e-9);
  }
}

TEST_CASE("mmnl mixtures") {
  Universe u(4);
  Mat row(1, 4);
  row << 0.3, -1, 2, 0;
  MmnlModel one(u, {1.0}, row);
  MnlModel mnl(u, {0.3, -1, 2, 0});
  for (const auto& s : all_assortments(u)) {
    auto a = one.prob(s), b = mnl.prob(s);
    for (int i = 0; i < 4; ++i) CHECK(a[static_cast<std::size_t>(i)] == doctest::Approx(b[static_cast<std::size_t>(i)]));
  }
  Universe w(2, false);
  Mat ext(2, 2);
  ext << 40, -40, -40, 40;
  auto p = MmnlModel(w, {0.5, 0.5}, ext).prob(Assortment::full(w));
  CHECK(p[0] == doctest::Approx(0.5));
  Mat two(2, 4);
  two << 0.3, -1, 2, 0, 5, 5, 5, 5;
  MmnlModel ignore(u, {1.0, 0.0}, two);
  auto q = ignore.prob(Assortment::full(u));
  auto r = mnl.prob(Assortment::full(u));
  for (int i = 0; i < 4; ++i) CHECK(q[static_cast<std::size_t>(i)] == doctest::Approx(r[static_cast<std::size_t>(i)]));
  Mat same(3, 4);
  same << 0.3, -1, 2, 0, 0.3, -1, 2, 0, 0.3, -1, 2, 0;
  auto t = MmnlModel(u, {0.2, 0.3, 0.5}, same).prob(Assortment::parse(u, "1011"));
  auto v = mnl.prob(Assortment::parse(u, "1011"));
  for (int i = 0; i < 4; ++i) CHECK(t[static_cast<std::size_t>(i)] == doctest::Approx(v[static_cast<std::size_t>(i)]));
}

TEST_CASE("rum regularity and mnl iia, exhaustive at n = 8") {
  Universe u(8);
  Rng rng(21);
  std::vector<std::unique_ptr<ChoiceModel>> models;
  models.push_back(std::make_unique<MnlModel>(gen_mnl(u, rng)));
  models.push_back(std::make_unique<MccmModel>(gen_mccm(u, mccm_preset(8), rng)));
  models.push_back(std::make_unique<NpModel>(gen_np(u, 5, rng)));
  models.push_back(std::make_unique<MmnlModel>(gen_mmnl(u, rng)));
  auto all = all_assortments(u);
  for (const auto& m : models) {
    bool regular = true;
    for (const auto& s : all) {
      auto p = m->prob(s);
      check_prob_vector(p, s);
      for (int add = 0; add < 8; ++add) {
        if (s.contains(add)) continue;
        auto mask = s.mask();
        mask[static_cast<std::size_t>(add)] = 1;
        auto q = m->prob(Assortment(u, mask));
        for (int i = 0; i < 8; ++i)
          if (s.contains(i) && q[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(i)] + 1e-12) regular = false;
      }
    }
    CHECK_MESSAGE(regular, m->kind());
  }
  const auto& mnl = *models[0];
  const double ratio = mnl.prob(Assortment::full(u))[0] / mnl.prob(Assortment::full(u))[1];
  for (const auto& s : all) {
    if (!s.contains(0) || !s.contains(1)) continue;
    auto p = mnl.prob(s);
    CHECK(p[0] / p[1] == doctest::Approx(ratio).epsilon(1e-10));
  }
}

TEST_CASE("generator presets") {
  Universe u(20);
  double total = 0.0;
  const int reps = 500;  // 500 x 20 draws
  for (int k = 0; k < reps; ++k) {
    auto m = gen_instance(TruthKind::kMnl, u, derive_seed(1, k));
    for (double x : dynamic_cast<const MnlModel&>(*m).utilities()) total += x;
  }
  CHECK(std::abs(total / (reps * 20)) < 0.05);
  auto np = gen_instance(TruthKind::kNp, u, 3);
  const auto& npm = dynamic_cast<const NpModel&>(*np);
  CHECK(npm.perms().size() == 10);
  for (double w : npm.weights()) CHECK(w == doctest::Approx(0.1));
  auto mm = gen_instance(TruthKind::kMmnl, u, 4);
  const auto& mmm = dynamic_cast<const MmnlModel&>(*mm);
  CHECK(mmm.alpha().size() == 5);
  for (int c = 0; c < 5; ++c) {
    int in_window = 0;
    for (int i = 0; i < 19; ++i) {
      double x = mmm.utilities()(c, i);
      if (x == -50.0) continue;
      ++in_window;
      CHECK(i >= c * 19 / 5);
      CHECK(i < (c + 1) * 19 / 5);
    }
    CHECK(in_window == (c + 1) * 19 / 5 - c * 19 / 5);
    CHECK(mmm.utilities()(c, 19) == 0.0);
  }
  CHECK(mccm_preset(20).clusters == 4);
  CHECK(mccm_preset(50).sigma == 4.0);
  CHECK(np_preset(50) == 20);
  CHECK_THROWS(parse_truth_kind("logit"));
}

TEST_CASE("assortment samplers") {
  Universe u(21);
  auto fixed = sample_assortments(AssortmentSampler(SamplerKind::kFixedSize, u, 4), 1000, 1);
  for (const auto& s : fixed) {
    CHECK(s.count() == 5);
    CHECK(s.contains(20));
  }
  Universe v(20);
  const int m = 100000;
  auto bern = sample_assortments(AssortmentSampler(SamplerKind::kBernoulliHalf, v), m, 2);
  std::vector<int> inc(20, 0);
  for (const auto& s : bern)
    for (int i = 0; i < 20; ++i) inc[static_cast<std::size_t>(i)] += s.contains(i);
  for (int i = 0; i < 19; ++i) CHECK(std::abs(inc[static_cast<std::size_t>(i)] / double(m) - 0.5) < 0.01);
  CHECK(inc[19] == m);
  auto half = sample_assortments(AssortmentSampler(SamplerKind::kHalfBlocked, v), 2000, 3);
  for (const auto& s : half) {
    bool first = false, second = false;
    for (int i = 0; i < 10; ++i) first |= s.contains(i);
    for (int i = 10; i < 19; ++i) second |= s.contains(i);
    CHECK(!(first && second));
  }
  CHECK_THROWS_AS(AssortmentSampler(SamplerKind::kHalfBlocked, Universe(21)), DimensionError);
  Universe w(30);
  auto third = sample_assortments(AssortmentSampler(SamplerKind::kWindowThird, w), 2000, 4);
  for (const auto& s : third) {
    CHECK(s.count() - 1 >= 10);
    CHECK(s.count() - 1 <= 11);
  }
  auto uni = sample_assortments(AssortmentSampler(SamplerKind::kUniformSize, v), 20000, 5);
  std::vector<int> sizes(20, 0);
  for (const auto& s : uni) ++sizes[static_cast<std::size_t>(s.count() - 1)];
  CHECK(sizes[0] == 0);
  for (int k = 1; k <= 19; ++k) CHECK(std::abs(sizes[static_cast<std::size_t>(k)] / 20000.0 - 1 / 19.0) < 0.01);
  CHECK_THROWS_AS(sample_assortments(AssortmentSampler(SamplerKind::kUniformSize, v), 0, 1), DimensionError);
}

TEST_CASE("gen_dataset") {
  Universe u(5);
  MnlModel m(u, {0.5, -0.3, 1.2, 0.1, 0});
  AssortmentSampler fixed(SamplerKind::kFixedSize, u, 4);
  auto d = gen_dataset(m, fixed, 100000, 8);
  CHECK(validate_dataset(d).empty());
  std::vector<int> counts(5, 0);
  for (const auto& s : d.samples) ++counts[static_cast<std::size_t>(s.chosen)];
  auto p = m.prob(Assortment::full(u));
  for (int i = 0; i < 5; ++i) CHECK(std::abs(counts[static_cast<std::size_t>(i)] / 100000.0 - p[static_cast<std::size_t>(i)]) < 0.01);
  auto again = gen_dataset(m, fixed, 100, 8);
  auto once = gen_dataset(m, fixed, 100, 8);
  for (std::size_t k = 0; k < 100; ++k) CHECK(again.samples[k].chosen == once.samples[k].chosen);
  auto empty = gen_dataset(m, fixed, 0, 8);
  CHECK(empty.empty());
  CHECK(validate_dataset(empty).empty());
}

TEST_CASE("augment_no_purchase") {
  Universe u(5);
  MnlModel m(u, {0.5, -0.3, 1.2, 0.1, 0});
  auto d = gen_dataset(m, AssortmentSampler(SamplerKind::kUniformSize, u), 100, 1);
  for (auto& s : d.samples) s.chosen = s.assortment.members().front();
  auto a = augment_no_purchase(d, 4);
  CHECK(a.size() == 500);
  int np = 0;
  for (const auto& s : a.samples) np += s.chosen == 4;
  CHECK(np == 400);
  CHECK(validate_dataset(a).empty());
  CHECK(augment_no_purchase(d, 0).size() == 100);
}

TEST_CASE("fixture tables") {
  auto fx = fixture_tables();
  REQUIRE(fx.size() == 3);
  CHECK(fx[0].truth[0][2] == doctest::Approx(0.40));
  CHECK(fx[0].truth[0][0] == doctest::Approx(0.60));
  CHECK(fx[1].truth[1] == ProbVector{0.29, 0.57, 0.0, 0.14});
  CHECK(fx[2].truth[2][0] == doctest::Approx(0.20));
  CHECK(fx[2].truth[2][2] == doctest::Approx(0.80));
  for (const auto& f : fx) {
    auto d = f.sample(8000, 1);
    CHECK(d.size() == 8000);
    CHECK(validate_dataset(d).empty());
  }
}

TEST_CASE("model json round trip") {
  Universe u(6);
  Rng rng(2);
  std::vector<std::unique_ptr<ChoiceModel>> models;
  models.push_back(std::make_unique<MnlModel>(gen_mnl(u, rng)));
  models.push_back(std::make_unique<MccmModel>(gen_mccm(u, {2.5, 2}, rng)));
  models.push_back(std::make_unique<NpModel>(gen_np(u, 4, rng)));
  models.push_back(std::make_unique<MmnlModel>(gen_mmnl(u, rng)));
  Assortment s = Assortment::parse(u, "101011");
  for (const auto& m : models) {
    auto text = model_to_json(*m).dump();
    auto back = model_from_json(nlohmann::json::parse(text));
    CHECK(back->kind() == m->kind());
    CHECK(back->prob(s) == m->prob(s));
  }
  MnlModel sentinel(u, {-std::numeric_limits<double>::infinity(), 0, 0, 0, 0, 0});
  auto back = model_from_json(model_to_json(sentinel));
  CHECK(std::isinf(dynamic_cast<const MnlModel&>(*back).utilities()[0]));
  CHECK_THROWS_AS(model_from_json(nlohmann::json{{"kind", "mnl"}}), ParseError);
}

TEST_CASE("feature models") {
  Universe u(5);
  Rng rng(4);
  Mat x = gen_product_features(5, 3, rng);
  auto fm = gen_feature_mnl(u, 3, rng);
  Features f{&x, {}};
  auto p = fm.prob(Assortment::full(u), f);
  check_prob_vector(p, Assortment::full(u));
  Vec util = x * Eigen::Map<const Vec>(fm.beta().data(), 3);
  MnlModel plain(u, std::vector<double>(util.data(), util.data() + 5));
  auto q = plain.prob(Assortment::full(u));
  for (int i = 0; i < 5; ++i) CHECK(p[static_cast<std::size_t>(i)] == doctest::Approx(q[static_cast<std::size_t>(i)]));
  auto fc = gen_feature_mccm(u, 3, rng);
  auto r = fc.prob(Assortment::parse(u, "10101"), f);
  check_prob_vector(r, Assortment::parse(u, "10101"));
  CHECK_THROWS_AS(fc.prob(Assortment::full(u)), UnsupportedError);
}
