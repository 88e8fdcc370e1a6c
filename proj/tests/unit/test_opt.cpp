#include <cmath>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "choicenet/core/error.hpp"
#include "choicenet/neural/network.hpp"
#include "choicenet/opt/lp_format.hpp"
#include "choicenet/opt/mip.hpp"
#include "choicenet/opt/nn_mip.hpp"
#include "choicenet/opt/optimizers.hpp"
#include "choicenet/synth/generators.hpp"
#include "choicenet/synth/models.hpp"

using namespace choicenet;

namespace {

RevenueSpec random_revenue(const Universe& u, Rng& rng) {
  std::uniform_real_distribution<double> ud(10.0, 50.0);
  RevenueSpec rev;
  for (int i = 0; i < u.size(); ++i) rev.mu.push_back(u.is_no_purchase(i) ? 0.0 : ud(rng));
  return rev;
}

bool same_value(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); }

// Independent MNL revenue: sum mu_i e^u_i / sum e^u_i over the mask.
double mnl_revenue(const std::vector<double>& util, const std::vector<double>& mu, std::uint64_t bits, int n) {
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!((bits >> i) & 1U)) continue;
    num += mu[static_cast<std::size_t>(i)] * std::exp(util[static_cast<std::size_t>(i)]);
    den += std::exp(util[static_cast<std::size_t>(i)]);
  }
  return num / den;
}

NetworkParams random_gasn(int n, std::vector<int> hidden, Rng& rng) {
  NetSpec spec;
  spec.arch = Arch::kGasn;
  spec.n = n;
  spec.hidden = std::move(hidden);
  NetworkParams p = init_network(spec, rng);
  std::normal_distribution<double> nd(0.0, 0.5);
  for (Layer& l : p.layers)
    for (Eigen::Index i = 0; i < l.b.size(); ++i) l.b(i) = nd(rng);
  return p;
}

// Surrogate revenue computed from the reference forward pass.
double surrogate_oracle(const NetworkParams& net, const RevenueSpec& rev, const Assortment& s) {
  const Vec z = forward_trace(net, s).post.back();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < net.n; ++i) {
    if (!s.contains(i)) continue;
    const double q = 1.0 + z(i) + 0.5 * z(i) * z(i);
    num += rev.mu[static_cast<std::size_t>(i)] * q;
    den += q;
  }
  return num / den;
}

MipInstance toy_mip() {
  MipInstance mip;
  mip.maximize = true;
  const int x = mip.add_var("x", VarKind::kContinuous, 0.0, 4.0, 3.0);
  const int y = mip.add_var("y", VarKind::kContinuous, 0.0, kInf, 2.0);
  const int z = mip.add_var("z", VarKind::kBinary, 0.0, 1.0, -1.5);
  mip.add_row("c1", {{x, 1.0}, {y, 1.0}}, RowSense::kLe, 4.0);
  mip.add_row("c2", {{x, 1.0}, {y, 3.0}, {z, -2.0}}, RowSense::kLe, 6.0);
  mip.add_row("c3", {{x, 1.0}, {y, -1.0}}, RowSense::kGe, -1.0);
  return mip;
}

}  // namespace

TEST_CASE("simplex solves small LPs with every row sense") {
  MipInstance a;
  const int x = a.add_var("x", VarKind::kContinuous, 0.0, 3.0, 3.0);
  const int y = a.add_var("y", VarKind::kContinuous, 0.0, kInf, 2.0);
  a.add_row("r1", {{x, 1.0}, {y, 1.0}}, RowSense::kLe, 4.0);
  a.add_row("r2", {{x, 1.0}, {y, 3.0}}, RowSense::kLe, 6.0);
  LpResult r = solve_lp(a);
  REQUIRE(r.status == SolveStatus::kOptimal);
  CHECK(r.value == doctest::Approx(11.0));
  CHECK(r.x[0] == doctest::Approx(3.0));
  CHECK(r.x[1] == doctest::Approx(1.0));

  MipInstance b;
  b.maximize = false;
  const int p = b.add_var("p", VarKind::kContinuous, 0.0, kInf, 1.0);
  const int q = b.add_var("q", VarKind::kContinuous, 0.0, kInf, 1.0);
  b.add_row("ge", {{p, 1.0}, {q, 2.0}}, RowSense::kGe, 4.0);
  b.add_row("eq", {{p, 1.0}, {q, -1.0}}, RowSense::kEq, 1.0);
  r = solve_lp(b);
  REQUIRE(r.status == SolveStatus::kOptimal);
  CHECK(r.value == doctest::Approx(3.0));
  CHECK(r.x[0] == doctest::Approx(2.0));

  MipInstance c;
  const int s = c.add_var("s", VarKind::kContinuous, 0.0, 1.0, 1.0);
  const int t = c.add_var("t", VarKind::kContinuous, 0.0, 1.0, 1.0);
  c.add_row("far", {{s, 1.0}, {t, 1.0}}, RowSense::kGe, 5.0);
  CHECK(solve_lp(c).status == SolveStatus::kInfeasible);

  MipInstance d;
  const int u = d.add_var("u", VarKind::kContinuous, 0.0, kInf, 1.0);
  const int v = d.add_var("v", VarKind::kContinuous, 0.0, kInf, 0.0);
  d.add_row("slope", {{u, 1.0}, {v, -1.0}}, RowSense::kLe, 1.0);
  CHECK(solve_lp(d).status == SolveStatus::kUnbounded);

  MipInstance e;
  e.add_var("w", VarKind::kContinuous, -kInf, 1.0, 1.0);
  CHECK_THROWS_AS(solve_lp(e), UnsupportedError);
}

TEST_CASE("simplex matches vertex enumeration on random 2-variable LPs") {
  Rng rng(11);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  std::uniform_real_distribution<double> pos(0.5, 4.0);
  for (int trial = 0; trial < 300; ++trial) {
    MipInstance m;
    m.maximize = trial % 2 == 0;
    const double ux = pos(rng), uy = pos(rng);
    const double lx = -pos(rng), ly = 0.0;
    m.add_var("x", VarKind::kContinuous, lx, ux, ud(rng));
    m.add_var("y", VarKind::kContinuous, ly, uy, ud(rng));
    // Lines a x + b y (sense) c; bounds become extra lines for the oracle.
    struct Line { double a, b, c; RowSense s; };
    std::vector<Line> lines;
    for (int k = 0; k < 3; ++k) {
      Line l{ud(rng), ud(rng), ud(rng), static_cast<RowSense>(k % 3)};
      if (l.s == RowSense::kEq && trial % 3) l.s = RowSense::kLe;
      lines.push_back(l);
      m.add_row("r" + std::to_string(k), {{0, l.a}, {1, l.b}}, l.s, l.c);
    }
    std::vector<Line> all = lines;
    all.push_back({1, 0, lx, RowSense::kGe});
    all.push_back({1, 0, ux, RowSense::kLe});
    all.push_back({0, 1, ly, RowSense::kGe});
    all.push_back({0, 1, uy, RowSense::kLe});
    auto feasible = [&](double x, double y) {
      for (const Line& l : all) {
        const double g = l.a * x + l.b * y - l.c;
        if (l.s == RowSense::kLe && g > 1e-7) return false;
        if (l.s == RowSense::kGe && g < -1e-7) return false;
        if (l.s == RowSense::kEq && std::abs(g) > 1e-7) return false;
      }
      return true;
    };
    bool any = false;
    double best = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        const double det = all[i].a * all[j].b - all[i].b * all[j].a;
        if (std::abs(det) < 1e-9) continue;
        const double x = (all[i].c * all[j].b - all[i].b * all[j].c) / det;
        const double y = (all[i].a * all[j].c - all[i].c * all[j].a) / det;
        if (!feasible(x, y)) continue;
        const double v = m.obj[0] * x + m.obj[1] * y;
        if (!any || (m.maximize ? v > best : v < best)) best = v;
        any = true;
      }
    LpResult r = solve_lp(m);
    if (!any) {
      CHECK(r.status == SolveStatus::kInfeasible);
      continue;
    }
    REQUIRE(r.status == SolveStatus::kOptimal);
    CHECK(r.value == doctest::Approx(best).epsilon(1e-7));
    CHECK(max_violation(m, r.x) < 1e-7);
  }
}

TEST_CASE("MILP matches enumeration on random knapsacks") {
  Rng rng(5);
  std::uniform_real_distribution<double> ud(1.0, 10.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 8;
    MipInstance m;
    std::vector<double> w, val;
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < k; ++i) {
      w.push_back(ud(rng));
      val.push_back(ud(rng));
      m.add_var("b" + std::to_string(i), VarKind::kBinary, 0.0, 1.0, val.back());
      row.push_back({i, w.back()});
    }
    const double cap = 15.0;
    m.add_row("cap", row, RowSense::kLe, cap);
    double best = 0.0;
    for (int bits = 0; bits < (1 << k); ++bits) {
      double tw = 0.0, tv = 0.0;
      for (int i = 0; i < k; ++i)
        if (bits >> i & 1) {
          tw += w[static_cast<std::size_t>(i)];
          tv += val[static_cast<std::size_t>(i)];
        }
      if (tw <= cap) best = std::max(best, tv);
    }
    MilpResult r = solve_milp(m);
    REQUIRE(r.has_solution);
    CHECK(r.exact);
    CHECK(r.value == doctest::Approx(best).epsilon(1e-9));
    CHECK(max_violation(m, r.x) < 1e-7);
  }
}

TEST_CASE("MILP reports infeasibility and node limits") {
  MipInstance m;
  const int a = m.add_var("a", VarKind::kBinary, 0.0, 1.0, 1.0);
  const int b = m.add_var("b", VarKind::kBinary, 0.0, 1.0, 1.0);
  m.add_row("odd", {{a, 2.0}, {b, 2.0}}, RowSense::kEq, 1.0);
  MilpResult r = solve_milp(m);
  CHECK_FALSE(r.has_solution);
  CHECK(r.status == SolveStatus::kInfeasible);
  CHECK(r.exact);

  MilpOptions opt;
  opt.node_limit = 0;
  r = solve_milp(toy_mip(), opt);
  CHECK_FALSE(r.exact);
}

TEST_CASE("brute force worked examples") {
  const Universe u(3);
  MnlModel mnl(u, {0.0, 0.0, 0.0});
  RevenueSpec zero{{0.0, 0.0, 0.0}};
  OptResult r = brute_force_opt(mnl, zero);
  CHECK(r.assortment == Assortment::no_purchase_only(u));
  CHECK(r.value == 0.0);

  RevenueSpec rev{{30.0, 20.0, 0.0}};
  r = brute_force_opt(mnl, rev);
  CHECK(r.assortment.to_string() == "111");
  CHECK(r.value == doctest::Approx(50.0 / 3.0));
  CHECK(r.exact);

  CapacityConstraint cap{{1.0, 1.0, 0.0}, 1.0};
  r = brute_force_opt(mnl, rev, &cap);
  CHECK(r.assortment.to_string() == "101");
  CHECK(r.value == doctest::Approx(15.0));

  CHECK_THROWS_AS(brute_force_opt(MnlModel(Universe(26), std::vector<double>(26, 0.0)),
                                  RevenueSpec{std::vector<double>(26, 0.0)}),
                  UnsupportedError);
}

TEST_CASE("brute force agrees with an independent MNL enumeration") {
  Rng rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 9;
    const Universe u(n);
    std::vector<double> util(n);
    for (double& x : util) x = nd(rng);
    const RevenueSpec rev = random_revenue(u, rng);
    double best = -1.0;
    for (std::uint64_t bits = 0; bits < (1ULL << (n - 1)); ++bits)
      best = std::max(best, mnl_revenue(util, rev.mu, bits | (1ULL << (n - 1)), n));
    CHECK(same_value(brute_force_opt(MnlModel(u, util), rev).value, best));
  }
}

TEST_CASE("revenue-ordered is optimal for unconstrained MNL") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + trial % 9;
    const Universe u(n);
    MnlModel m = gen_mnl(u, rng);
    const RevenueSpec rev = random_revenue(u, rng);
    const OptResult ro = revenue_ordered(m, rev);
    const OptResult bf = brute_force_opt(m, rev);
    CHECK(same_value(ro.value, bf.value));
  }
  // One product: offered iff its revenue is positive.
  const Universe u1(2);
  MnlModel one(u1, {0.0, 0.0});
  CHECK(revenue_ordered(one, RevenueSpec{{5.0, 0.0}}).assortment.to_string() == "11");
  CHECK(revenue_ordered(one, RevenueSpec{{0.0, 0.0}}).assortment.to_string() == "01");
}

TEST_CASE("ADXOpt reaches the MNL optimum on nearly every instance") {
  Rng rng(23);
  int hits = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + trial % 7;
    const Universe u(n);
    MnlModel m = gen_mnl(u, rng);
    const RevenueSpec rev = random_revenue(u, rng);
    const OptResult ad = adxopt(m, rev);
    const OptResult bf = brute_force_opt(m, rev);
    CHECK(ad.value <= bf.value + 1e-9);
    CHECK(ad.assortment.contains(n - 1));
    hits += same_value(ad.value, bf.value) ? 1 : 0;
    CHECK(ad.info.at("removal_limit") == 5);
  }
  CHECK(hits >= 95);
}

TEST_CASE("ADXOpt respects capacity") {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    const Universe u(8);
    MnlModel m = gen_mnl(u, rng);
    const RevenueSpec rev = random_revenue(u, rng);
    CapacityConstraint cap{std::vector<double>(8, 1.0), 3.0};
    cap.a.back() = 0.0;
    const OptResult ad = adxopt(m, rev, &cap);
    CHECK(cap.feasible(ad.assortment));
    CHECK(ad.value <= brute_force_opt(m, rev, &cap).value + 1e-9);
  }
}

TEST_CASE("Bellman matches brute force on random MCCM") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + trial % 9;
    const Universe u(n);
    MccmModel m = gen_mccm(u, mccm_preset(n), rng);
    const RevenueSpec rev = random_revenue(u, rng);
    const OptResult b = mccm_bellman_opt(m, rev);
    CHECK(b.exact);
    CHECK(same_value(b.value, brute_force_opt(m, rev).value));
  }
}

TEST_CASE("Bellman special cases") {
  const int n = 5;
  const Universe u(n);
  // Every product exits straight to no-purchase: offer everything with mu > 0.
  Mat rho = Mat::Zero(n, n);
  rho.col(n - 1).setOnes();
  Vec lambda = Vec::Constant(n, 1.0 / n);
  MccmModel exit_model(u, lambda, rho);
  RevenueSpec rev{{5.0, 0.0, 3.0, 1.0, 0.0}};
  CHECK(mccm_bellman_opt(exit_model, rev).assortment.to_string() == "10111");

  Rng rng(2);
  MccmModel m = gen_mccm(u, mccm_preset(n), rng);
  Vec conc = Vec::Zero(n);
  conc(2) = 1.0;
  MccmModel focused(u, conc, m.rho());
  RevenueSpec top{{10.0, 20.0, 40.0, 30.0, 0.0}};
  CHECK(mccm_bellman_opt(focused, top).assortment.contains(2));

  CapacityConstraint cap{std::vector<double>(n, 1.0), 2.0};
  CHECK_THROWS_AS(mccm_bellman_opt(m, top, &cap), UnsupportedError);
}

TEST_CASE("NP MILP matches brute force") {
  Rng rng(37);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 5 + trial % 8;
    const Universe u(n);
    const int perms = trial < 10 ? 1 : 10;
    NpModel m = gen_np(u, perms, rng);
    const RevenueSpec rev = random_revenue(u, rng);
    std::optional<CapacityConstraint> cap;
    if (trial % 3 == 2) cap = CapacityConstraint{std::vector<double>(n, 1.0), 2.0};
    const CapacityConstraint* cp = cap ? &*cap : nullptr;
    if (cap) cap->a.back() = 0.0;
    const OptResult r = solve_assortment_milp(build_np_milp(m, rev, cp), m, rev, "np-milp");
    const OptResult bf = brute_force_opt(m, rev, cp);
    CHECK(r.exact);
    CHECK(same_value(r.value, bf.value));
    CHECK(r.assortment.contains(n - 1));
    if (cp) CHECK(cp->feasible(r.assortment));
  }
}

TEST_CASE("NP MILP with the full assortment picks first-ranked products") {
  Rng rng(41);
  const Universe u(6);
  NpModel m = gen_np(u, 4, rng);
  const RevenueSpec rev = random_revenue(u, rng);
  MipInstance mip = build_np_milp(m, rev);
  for (int i = 0; i < u.size(); ++i) mip.vars[static_cast<std::size_t>(mip.assortment_vars[static_cast<std::size_t>(i)])].lb = 1.0;
  const MilpResult r = solve_milp(mip);
  REQUIRE(r.has_solution);
  double expect = 0.0;
  for (std::size_t j = 0; j < m.perms().size(); ++j)
    expect += m.weights()[j] * rev.mu[static_cast<std::size_t>(m.perms()[j].front())];
  CHECK(r.value == doctest::Approx(expect));
}

TEST_CASE("MNL MILP matches brute force with and without capacity") {
  Rng rng(43);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 4 + trial % 9;
    const Universe u(n);
    MnlModel m = gen_mnl(u, rng);
    const RevenueSpec rev = random_revenue(u, rng);
    std::optional<CapacityConstraint> cap;
    if (trial % 2) {
      std::uniform_real_distribution<double> ad(1.0, 5.0);
      cap = CapacityConstraint{};
      for (int i = 0; i < n; ++i) cap->a.push_back(u.is_no_purchase(i) ? 0.0 : ad(rng));
      cap->c = 6.0;
    }
    const CapacityConstraint* cp = cap ? &*cap : nullptr;
    const OptResult r = solve_assortment_milp(build_mnl_milp(m, rev, cp), m, rev, "mnl-milp");
    const OptResult bf = brute_force_opt(m, rev, cp);
    CHECK(same_value(r.value, bf.value));
    if (cp) CHECK(cp->feasible(r.assortment));
    else CHECK(same_value(r.value, revenue_ordered(m, rev).value));
  }
}

TEST_CASE("NN MIP matches the surrogate brute force") {
  Rng rng(47);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + trial % 9;
    const NetworkParams net = random_gasn(n, trial % 4 == 3 ? std::vector<int>{n} : std::vector<int>{}, rng);
    const Universe u = net.universe();
    const RevenueSpec rev = random_revenue(u, rng);
    std::optional<CapacityConstraint> cap;
    if (trial % 5 == 4) {
      cap = CapacityConstraint{std::vector<double>(static_cast<std::size_t>(n), 1.0), 3.0};
      cap->a.back() = 0.0;
    }
    const CapacityConstraint* cp = cap ? &*cap : nullptr;
    const OptResult bf = brute_force_max(u, cp, [&](const Assortment& s) { return surrogate_oracle(net, rev, s); });
    const OptResult r = solve_nn_mip(build_nn_mip(net, rev, cp));
    CHECK(r.exact);
    REQUIRE(r.surrogate.has_value());
    CHECK(same_value(*r.surrogate, bf.value));
    CHECK(r.assortment.contains(n - 1));
    if (cp) CHECK(cp->feasible(r.assortment));
    CHECK(r.value == doctest::Approx(expected_revenue(NeuralChoiceModel(net), r.assortment, rev)));
  }
}

TEST_CASE("NN MIP time limit zero returns the warm start") {
  Rng rng(53);
  const NetworkParams net = random_gasn(8, {}, rng);
  const RevenueSpec rev = random_revenue(net.universe(), rng);
  NnMipOptions opt;
  opt.time_limit = 0.0;
  const OptResult r = solve_nn_mip(build_nn_mip(net, rev), opt);
  CHECK_FALSE(r.exact);
  // The warm start is the best nested set under the surrogate.
  const OptResult ro = brute_force_max(net.universe(), nullptr, [&](const Assortment& s) {
    std::vector<int> order;
    for (int i = 0; i < 7; ++i) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return rev.mu[static_cast<std::size_t>(a)] > rev.mu[static_cast<std::size_t>(b)]; });
    // Nested sets only.
    bool gap = false;
    for (int i : order) {
      if (!s.contains(i)) gap = true;
      else if (gap) return -1.0;
    }
    return surrogate_oracle(net, rev, s);
  });
  CHECK(same_value(*r.surrogate, ro.value));
}

TEST_CASE("NN MIP refuses residual networks and fixes dead units") {
  Rng rng(59);
  NetSpec spec;
  spec.arch = Arch::kRasn;
  spec.n = 4;
  const NetworkParams rasn = init_network(spec, rng);
  CHECK_THROWS_AS(build_nn_mip(rasn, RevenueSpec{{1.0, 1.0, 1.0, 0.0}}), UnsupportedError);

  NetworkParams net = random_gasn(4, {}, rng);
  net.layers[0].w.row(1) = -net.layers[0].w.row(1).cwiseAbs();
  net.layers[0].b(1) = -0.3;
  const MipInstance mip = build_nn_mip(net, RevenueSpec{{1.0, 2.0, 3.0, 0.0}});
  const int zeta = mip.find("zeta1_1");
  REQUIRE(zeta >= 0);
  CHECK(mip.vars[static_cast<std::size_t>(zeta)].ub == 0.0);
  CHECK(mip.big_m[1].m_pos == 0.0);
}

TEST_CASE("big-M system reproduces the forward pass for fixed inputs") {
  Rng rng(61);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 3 + trial % 8;
    std::vector<int> hidden;
    if (trial % 2) hidden.push_back(2 + trial % 5);
    const NetworkParams net = random_gasn(n, hidden, rng);
    const Universe u = net.universe();
    MipInstance mip = build_nn_mip(net, RevenueSpec{std::vector<double>(static_cast<std::size_t>(n), 0.0)});
    mip.ratio.reset();
    Assortment s = Assortment::from_bits(u, rng() | (1ULL << (n - 1)));
    for (int i = 0; i < n; ++i) {
      MipVar& v = mip.vars[static_cast<std::size_t>(mip.assortment_vars[static_cast<std::size_t>(i)])];
      v.lb = v.ub = s.contains(i) ? 1.0 : 0.0;
    }
    const ForwardTrace tr = forward_trace(net, s);
    std::vector<int> zs;
    std::vector<double> expect;
    for (std::size_t l = 0; l < net.layers.size(); ++l)
      for (int j = 0; j < net.layers[l].out(); ++j) {
        zs.push_back(mip.find("z" + std::to_string(l + 1) + "_" + std::to_string(j)));
        expect.push_back(tr.post[l](j));
      }
    for (bool maximize : {true, false}) {
      mip.maximize = maximize;
      std::fill(mip.obj.begin(), mip.obj.end(), 0.0);
      for (int z : zs) mip.obj[static_cast<std::size_t>(z)] = 1.0;
      const MilpResult r = solve_milp(mip);
      REQUIRE(r.has_solution);
      for (std::size_t k = 0; k < zs.size(); ++k)
        CHECK(std::abs(r.x[static_cast<std::size_t>(zs[k])] - expect[k]) < 1e-7);
    }
  }
}

TEST_CASE("McCormick rows contain the product and pin it for binary gates") {
  Rng rng(67);
  const NetworkParams net = random_gasn(6, {}, rng);
  const MipInstance mip = build_nn_mip(net, RevenueSpec{{1, 2, 3, 4, 5, 0}});
  const auto& ro = *mip.ratio;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const int i = k % 6;
    const double m = mip.vars[static_cast<std::size_t>(ro.v[static_cast<std::size_t>(i)])].ub;
    const double z0 = (k / 6) % 2;
    const double zl = unit(rng) * m;
    std::vector<double> x(mip.vars.size(), 0.0);
    x[static_cast<std::size_t>(ro.z0[static_cast<std::size_t>(i)])] = z0;
    x[static_cast<std::size_t>(ro.zl[static_cast<std::size_t>(i)])] = zl;
    auto row_ok = [&](double v) {
      x[static_cast<std::size_t>(ro.v[static_cast<std::size_t>(i)])] = v;
      for (const MipRow& r : mip.rows) {
        if (r.name.rfind("v_", 0) != 0 || r.name.substr(r.name.rfind('_') + 1) != std::to_string(i)) continue;
        double lhs = 0.0;
        for (auto [j, c] : r.terms) lhs += c * x[static_cast<std::size_t>(j)];
        if (r.sense == RowSense::kLe && lhs > r.rhs + 1e-9) return false;
        if (r.sense == RowSense::kGe && lhs < r.rhs - 1e-9) return false;
      }
      return true;
    };
    CHECK(row_ok(z0 * zl));
    CHECK_FALSE(row_ok(z0 * zl + 1e-3));
    if (z0 * zl >= 1e-3) CHECK_FALSE(row_ok(z0 * zl - 1e-3));
  }
}

TEST_CASE("Dinkelbach linearization") {
  Rng rng(71);
  const NetworkParams net = random_gasn(5, {}, rng);
  const RevenueSpec rev{{10, 20, 30, 40, 0}};
  const MipInstance mip = build_nn_mip(net, rev);
  const MipInstance lin = linearize_ratio(mip, 12.5);
  CHECK_FALSE(lin.ratio.has_value());
  const auto& ro = *mip.ratio;
  for (int i = 0; i < 5; ++i) {
    const double c = rev.mu[static_cast<std::size_t>(i)] - 12.5;
    CHECK(lin.obj[static_cast<std::size_t>(ro.z0[static_cast<std::size_t>(i)])] == doctest::Approx(c));
    CHECK(lin.obj[static_cast<std::size_t>(ro.v[static_cast<std::size_t>(i)])] == doctest::Approx(c));
  }
  CHECK(lin.quad.size() == 5);
}

TEST_CASE("LP files round trip") {
  Rng rng(73);
  std::vector<MipInstance> cases;
  cases.push_back(toy_mip());
  const Universe u(7);
  MnlModel mnl = gen_mnl(u, rng);
  const RevenueSpec rev = random_revenue(u, rng);
  CapacityConstraint cap{{1, 2, 1, 3, 1, 1, 0}, 4.0};
  cases.push_back(build_mnl_milp(mnl, rev, &cap));
  NpModel np = gen_np(u, 5, rng);
  cases.push_back(build_np_milp(np, rev));
  const NetworkParams net = random_gasn(7, {4}, rng);
  cases.push_back(linearize_ratio(build_nn_mip(net, rev, &cap), 17.0));
  for (const MipInstance& m : cases) {
    std::stringstream ss;
    write_lp(ss, m);
    const MipInstance back = read_lp(ss);
    std::string why;
    CHECK_MESSAGE(equivalent(m, back, &why), why);
    // Variable order follows first appearance after one pass, then is stable.
    std::stringstream again;
    write_lp(again, back);
    const std::string text = again.str();
    std::stringstream third;
    write_lp(third, read_lp(again));
    CHECK(third.str() == text);
  }
  // Ratio objectives need t.
  std::stringstream ss;
  CHECK_THROWS_AS(write_lp(ss, build_nn_mip(net, rev)), UnsupportedError);
  CHECK_NOTHROW(write_lp(ss, build_nn_mip(net, rev), 3.0));
}

TEST_CASE("LP writer matches the golden toy file") {
  std::stringstream ss;
  write_lp(ss, toy_mip());
  std::ifstream f(std::string(CHOICENET_TEST_DATA) + "/toy.lp", std::ios::binary);
  REQUIRE(f);
  std::stringstream golden;
  golden << f.rdbuf();
  CHECK(ss.str() == golden.str());
}

TEST_CASE("LP names are sanitized deterministically") {
  const auto s = sanitize_names({"a b", "a_b", "1x", "price[3]", "e5", "inf", "ok.name", ""});
  CHECK(s[0] == "a_b");
  CHECK(s[1] == "a_b_2");
  CHECK(s[2] == "_1x");
  CHECK(s[3] == "price_3_");
  CHECK(s[4] == "_e5");
  CHECK(s[5] == "_inf");
  CHECK(s[6] == "ok.name");
  CHECK(s[7] == "_");

  MipInstance m;
  m.add_var("bad name", VarKind::kBinary, 0.0, 1.0, 1.0);
  m.add_var("bad-name", VarKind::kContinuous, 0.0, 2.0, -1.0);
  std::stringstream ss;
  write_lp(ss, m);
  const MipInstance back = read_lp(ss);
  CHECK(back.vars[0].name == "bad_name");
  CHECK(back.vars[1].name == "bad_name_2");
}

TEST_CASE("LP reader rejects unsupported input") {
  std::istringstream gen("Maximize\n obj: x\nSubject To\n c: x <= 1\nGenerals\n x\nEnd\n");
  CHECK_THROWS_AS(read_lp(gen), ParseError);
  std::istringstream noend("Maximize\n obj: x\nSubject To\n c: x <= 1\n");
  CHECK_THROWS_AS(read_lp(noend), ParseError);
  std::istringstream ok("\\ hand written\nminimize\n obj: 2 x - y + 3\nst\n c1: x + y >= 1\nbounds\n -1 <= y <= 1\n x free\nEnd\n");
  const MipInstance m = read_lp(ok);
  CHECK_FALSE(m.maximize);
  CHECK(m.obj_const == 3.0);
  CHECK(m.vars[0].lb == -kInf);
  CHECK(m.vars[1].lb == -1.0);
}

TEST_CASE("optimality ratio") {
  const Universe u(3);
  MnlModel mnl(u, {0.0, 0.0, 0.0});
  RevenueSpec rev{{30.0, 20.0, 0.0}};
  CHECK(*opt_ratio(Assortment::full(u), mnl, rev) == doctest::Approx(1.0));
  CHECK(*opt_ratio(Assortment::no_purchase_only(u), mnl, rev) == 0.0);
  CHECK(*opt_ratio(Assortment::parse(u, "101"), mnl, rev) == doctest::Approx(15.0 / (50.0 / 3.0)));
  CHECK_FALSE(opt_ratio(Assortment::full(u), mnl, RevenueSpec{{0.0, 0.0, 0.0}}).has_value());
}
