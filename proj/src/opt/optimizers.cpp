#include "choicenet/opt/optimizers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "choicenet/core/error.hpp"

namespace choicenet {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool fits(const CapacityConstraint* cap, const Assortment& s) { return !cap || cap->feasible(s); }

void check_inputs(const Universe& u, const RevenueSpec& rev, const CapacityConstraint* cap) {
  check_revenue(u, rev);
  if (cap) check_capacity(u, *cap);
}

// True when (v, s) should replace the incumbent (best, cur).
bool better(double v, const Assortment& s, double best, const Assortment& cur) {
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  if (v > best + tol) return true;
  if (v < best - tol) return false;
  if (s.count() != cur.count()) return s.count() < cur.count();
  return s.to_string() < cur.to_string();
}

std::vector<int> products_of(const Universe& u) {
  std::vector<int> out;
  for (int i = 0; i < u.size(); ++i)
    if (!u.is_no_purchase(i)) out.push_back(i);
  return out;
}

Assortment with(const Universe& u, std::vector<std::uint8_t> mask) {
  if (u.has_no_purchase()) mask[static_cast<std::size_t>(u.no_purchase())] = 1;
  return Assortment(u, std::move(mask));
}

}  // namespace

nlohmann::json opt_result_to_json(const OptResult& r) {
  nlohmann::json j{{"assortment", r.assortment.to_string()},
                   {"value", r.value},
                   {"method", r.method},
                   {"exact", r.exact},
                   {"nodes", r.nodes},
                   {"seconds", r.seconds}};
  if (r.surrogate) j["surrogate"] = *r.surrogate;
  if (!r.info.empty()) j["params"] = r.info;
  return j;
}

OptResult brute_force_max(const Universe& u, const CapacityConstraint* cap,
                          const std::function<double(const Assortment&)>& f) {
  const auto t0 = Clock::now();
  if (u.size() > kBruteForceMaxN)
    throw UnsupportedError("brute force is limited to n <= " + std::to_string(kBruteForceMaxN) +
                           "; export the MIP with --export-lp for larger instances");
  const std::vector<int> prods = products_of(u);
  const std::size_t k = prods.size();
  OptResult res;
  res.method = "brute";
  bool have = false;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(u.size()), 0);
  for (std::uint64_t bits = 0; bits < (1ULL << k); ++bits) {
    std::fill(mask.begin(), mask.end(), 0);
    for (std::size_t t = 0; t < k; ++t)
      if ((bits >> t) & 1ULL) mask[static_cast<std::size_t>(prods[t])] = 1;
    if (!u.has_no_purchase() && bits == 0) continue;
    Assortment s = with(u, mask);
    if (!fits(cap, s)) continue;
    ++res.nodes;
    const double v = f(s);
    if (!have || better(v, s, res.value, res.assortment)) {
      res.value = v;
      res.assortment = std::move(s);
      have = true;
    }
  }
  if (!have) throw InvariantError("no feasible assortment");
  res.exact = true;
  res.seconds = seconds_since(t0);
  return res;
}

OptResult brute_force_opt(const ChoiceModel& model, const RevenueSpec& rev, const CapacityConstraint* cap) {
  check_inputs(model.universe(), rev, cap);
  return brute_force_max(model.universe(), cap,
                         [&](const Assortment& s) { return expected_revenue(model, s, rev); });
}

OptResult revenue_ordered(const ChoiceModel& model, const RevenueSpec& rev, const CapacityConstraint* cap) {
  const auto t0 = Clock::now();
  const Universe& u = model.universe();
  check_inputs(u, rev, cap);
  std::vector<int> order = products_of(u);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return rev.mu[static_cast<std::size_t>(a)] > rev.mu[static_cast<std::size_t>(b)];
  });
  OptResult res;
  res.method = "ro";
  bool have = false;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(u.size()), 0);
  for (std::size_t k = u.has_no_purchase() ? 0 : 1; k <= order.size(); ++k) {
    if (k > 0) mask[static_cast<std::size_t>(order[k - 1])] = 1;
    Assortment s = with(u, mask);
    if (!fits(cap, s)) continue;
    ++res.nodes;
    const double v = expected_revenue(model, s, rev);
    if (!have || better(v, s, res.value, res.assortment)) {
      res.value = v;
      res.assortment = std::move(s);
      have = true;
    }
  }
  if (!have) throw InvariantError("no feasible nested assortment");
  res.seconds = seconds_since(t0);
  return res;
}

OptResult adxopt(const ChoiceModel& model, const RevenueSpec& rev, const CapacityConstraint* cap,
                 int removal_limit) {
  const auto t0 = Clock::now();
  const Universe& u = model.universe();
  check_inputs(u, rev, cap);
  if (removal_limit < 0) throw DimensionError("removal limit must be nonnegative");
  const std::vector<int> prods = products_of(u);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(u.size()), 0);
  if (!u.has_no_purchase()) {
    // Start from the best single product.
    int best_i = prods.front();
    double best_v = -kInf;
    for (int i : prods) {
      std::vector<std::uint8_t> m(mask.size(), 0);
      m[static_cast<std::size_t>(i)] = 1;
      Assortment s(u, m);
      if (!fits(cap, s)) continue;
      const double v = expected_revenue(model, s, rev);
      if (v > best_v) {
        best_v = v;
        best_i = i;
      }
    }
    mask[static_cast<std::size_t>(best_i)] = 1;
  }
  Assortment cur = with(u, mask);
  if (!fits(cap, cur)) throw InvariantError("no feasible starting assortment");
  double cur_v = expected_revenue(model, cur, rev);
  std::vector<int> removed(static_cast<std::size_t>(u.size()), 0);
  OptResult res;
  res.method = "adxopt";
  res.info["removal_limit"] = removal_limit;
  while (true) {
    ++res.nodes;
    bool found = false;
    double best_v = cur_v;
    Assortment best_s = cur;
    int out_i = -1;
    auto consider = [&](std::vector<std::uint8_t> m, int removed_i) {
      bool any = false;
      for (int i = 0; i < u.size(); ++i) any |= m[static_cast<std::size_t>(i)] != 0;
      if (!any) return;
      Assortment s = with(u, std::move(m));
      if (!fits(cap, s)) return;
      const double v = expected_revenue(model, s, rev);
      if (v > best_v + 1e-12 * std::max(1.0, std::abs(best_v)) ||
          (found && std::abs(v - best_v) <= 1e-12 * std::max(1.0, std::abs(best_v)) && better(v, s, best_v, best_s))) {
        best_v = v;
        best_s = std::move(s);
        out_i = removed_i;
        found = true;
      }
    };
    const auto& m0 = cur.mask();
    for (int i : prods) {
      const bool in = m0[static_cast<std::size_t>(i)] != 0;
      if (!in) {
        auto m = m0;
        m[static_cast<std::size_t>(i)] = 1;
        consider(m, -1);
      } else if (removed[static_cast<std::size_t>(i)] < removal_limit) {
        auto m = m0;
        m[static_cast<std::size_t>(i)] = 0;
        consider(m, i);
        for (int j : prods) {
          if (m0[static_cast<std::size_t>(j)]) continue;
          auto x = m;
          x[static_cast<std::size_t>(j)] = 1;
          consider(x, i);
        }
      }
    }
    if (!found) break;
    if (out_i >= 0) ++removed[static_cast<std::size_t>(out_i)];
    cur = std::move(best_s);
    cur_v = best_v;
  }
  res.assortment = std::move(cur);
  res.value = cur_v;
  res.seconds = seconds_since(t0);
  return res;
}

OptResult mccm_bellman_opt(const MccmModel& model, const RevenueSpec& rev, const CapacityConstraint* cap) {
  const auto t0 = Clock::now();
  const Universe& u = model.universe();
  if (cap) throw UnsupportedError("the Bellman method is unconstrained; use adxopt or a MIP with a capacity row");
  check_revenue(u, rev);
  if (!u.has_no_purchase()) throw UnsupportedError("the Bellman method needs a no-purchase option");
  const int n = u.size();
  const int np = u.no_purchase();
  const Mat& rho = model.rho();
  Vec mu(n);
  for (int i = 0; i < n; ++i) mu(i) = rev.mu[static_cast<std::size_t>(i)];
  Vec g = mu.cwiseMax(0.0);
  g(np) = 0.0;
  OptResult res;
  res.method = "bellman";
  for (int it = 0; it < 1000000; ++it) {
    Vec cont = rho * g;
    Vec next = mu.cwiseMax(cont);
    next(np) = 0.0;
    const double diff = (next - g).cwiseAbs().maxCoeff();
    g = std::move(next);
    ++res.nodes;
    if (diff <= 1e-10) break;
  }
  Vec cont = rho * g;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i)
    if (i != np && mu(i) > cont(i) + 1e-9 * std::max(1.0, std::abs(mu(i)))) mask[static_cast<std::size_t>(i)] = 1;
  res.assortment = with(u, mask);
  res.value = expected_revenue(model, res.assortment, rev);
  res.exact = true;
  res.seconds = seconds_since(t0);
  return res;
}

MipInstance build_mnl_milp(const MnlModel& model, const RevenueSpec& rev, const CapacityConstraint* cap) {
  const Universe& u = model.universe();
  check_inputs(u, rev, cap);
  if (!u.has_no_purchase()) throw UnsupportedError("the MNL MILP needs a no-purchase option");
  const int n = u.size();
  const int np = u.no_purchase();
  const auto& util = model.utilities();
  if (!std::isfinite(util[static_cast<std::size_t>(np)]))
    throw UnsupportedError("no-purchase utility must be finite");
  MipInstance mip;
  mip.assortment_vars.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> z(static_cast<std::size_t>(n)), x(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lo = i == np ? 1.0 : 0.0;
    z[static_cast<std::size_t>(i)] = mip.add_var("z_" + std::to_string(i), VarKind::kBinary, lo, 1.0);
    mip.assortment_vars[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < n; ++i)
    x[static_cast<std::size_t>(i)] = mip.add_var("x_" + std::to_string(i), VarKind::kContinuous, 0.0, 1.0,
                                                 rev.mu[static_cast<std::size_t>(i)]);
  std::vector<std::pair<int, double>> sum;
  for (int i = 0; i < n; ++i) sum.push_back({x[static_cast<std::size_t>(i)], 1.0});
  mip.add_row("prob_sum", sum, RowSense::kEq, 1.0);
  const int x0 = x[static_cast<std::size_t>(np)];
  for (int i = 0; i < n; ++i) {
    if (i == np) continue;
    const int xi = x[static_cast<std::size_t>(i)];
    const int zi = z[static_cast<std::size_t>(i)];
    const std::string id = std::to_string(i);
    const double lu = util[static_cast<std::size_t>(i)];
    if (!std::isfinite(lu)) {  // never chosen
      mip.vars[static_cast<std::size_t>(xi)].ub = 0.0;
      continue;
    }
    const double v = std::exp(lu - util[static_cast<std::size_t>(np)]);
    // x_i = v x_0 when offered, 0 otherwise; x_i <= v / (1 + v) is valid.
    mip.add_row("ratio_ub_" + id, {{xi, 1.0}, {x0, -v}}, RowSense::kLe, 0.0);
    mip.add_row("ratio_lb_" + id, {{xi, 1.0}, {x0, -v}, {zi, -v}}, RowSense::kGe, -v);
    mip.add_row("offer_" + id, {{xi, 1.0}, {zi, -v / (1.0 + v)}}, RowSense::kLe, 0.0);
  }
  if (cap) {
    std::vector<std::pair<int, double>> t;
    for (int i = 0; i < n; ++i)
      if (cap->a[static_cast<std::size_t>(i)] != 0.0) t.push_back({z[static_cast<std::size_t>(i)], cap->a[static_cast<std::size_t>(i)]});
    mip.add_row("capacity", t, RowSense::kLe, cap->c);
  }
  return mip;
}

MipInstance build_np_milp(const NpModel& model, const RevenueSpec& rev, const CapacityConstraint* cap) {
  const Universe& u = model.universe();
  check_inputs(u, rev, cap);
  const int n = u.size();
  MipInstance mip;
  mip.assortment_vars.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> s(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lo = u.is_no_purchase(i) ? 1.0 : 0.0;
    s[static_cast<std::size_t>(i)] = mip.add_var("s_" + std::to_string(i), VarKind::kBinary, lo, 1.0);
    mip.assortment_vars[static_cast<std::size_t>(i)] = s[static_cast<std::size_t>(i)];
  }
  const auto& perms = model.perms();
  const auto& w = model.weights();
  for (std::size_t j = 0; j < perms.size(); ++j) {
    const auto& p = perms[j];
    std::vector<std::pair<int, double>> pick_sum;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const int item = p[k];
      const std::string id = std::to_string(j) + "_" + std::to_string(k);
      const int eta = mip.add_var("eta_" + id, VarKind::kContinuous, 0.0, 1.0,
                                  w[j] * rev.mu[static_cast<std::size_t>(item)]);
      pick_sum.push_back({eta, 1.0});
      mip.add_row("offered_" + id, {{eta, 1.0}, {s[static_cast<std::size_t>(item)], -1.0}}, RowSense::kLe, 0.0);
      for (std::size_t k2 = 0; k2 < k; ++k2)
        mip.add_row("first_" + id + "_" + std::to_string(k2), {{eta, 1.0}, {s[static_cast<std::size_t>(p[k2])], 1.0}},
                    RowSense::kLe, 1.0);
      // The no-purchase option is always offered, so later ranks never buy.
      if (u.is_no_purchase(item)) break;
    }
    mip.add_row("one_pick_" + std::to_string(j), pick_sum, RowSense::kLe, 1.0);
  }
  if (cap) {
    std::vector<std::pair<int, double>> t;
    for (int i = 0; i < n; ++i)
      if (cap->a[static_cast<std::size_t>(i)] != 0.0) t.push_back({s[static_cast<std::size_t>(i)], cap->a[static_cast<std::size_t>(i)]});
    mip.add_row("capacity", t, RowSense::kLe, cap->c);
  }
  return mip;
}

Assortment assortment_from_solution(const MipInstance& mip, const Universe& u, const std::vector<double>& x) {
  if (static_cast<int>(mip.assortment_vars.size()) != u.size())
    throw DimensionError("instance has no assortment indicators for this universe");
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(u.size()), 0);
  for (int i = 0; i < u.size(); ++i) {
    const int j = mip.assortment_vars[static_cast<std::size_t>(i)];
    mask[static_cast<std::size_t>(i)] = j < 0 ? 1 : (x[static_cast<std::size_t>(j)] > 0.5 ? 1 : 0);
  }
  return with(u, std::move(mask));
}

OptResult solve_assortment_milp(const MipInstance& mip, const ChoiceModel& model, const RevenueSpec& rev,
                                const std::string& method, const MilpOptions& opt) {
  MilpResult r = solve_milp(mip, opt);
  if (!r.has_solution) throw InvariantError("assortment MILP returned no solution (" + to_string(r.status) + ")");
  OptResult res;
  res.method = method;
  res.assortment = assortment_from_solution(mip, model.universe(), r.x);
  res.value = expected_revenue(model, res.assortment, rev);
  res.exact = r.exact;
  res.nodes = r.nodes;
  res.seconds = r.seconds;
  res.info["milp_objective"] = r.value;
  return res;
}

std::optional<double> opt_ratio(const Assortment& candidate, const ChoiceModel& truth, const RevenueSpec& rev,
                                const CapacityConstraint* cap) {
  const OptResult best = brute_force_opt(truth, rev, cap);
  if (best.value <= 0.0) return std::nullopt;
  return expected_revenue(truth, candidate, rev) / best.value;
}

}  // namespace choicenet
