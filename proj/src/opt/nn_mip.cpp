#include "choicenet/opt/nn_mip.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

#include "choicenet/core/error.hpp"

namespace choicenet {
namespace {

using Clock = std::chrono::steady_clock;

void require_gated(const NetworkParams& net) {
  net.validate();
  if (net.arch != Arch::kGasn || net.enc)
    throw UnsupportedError("the network MIP covers feature-free gated networks only (rasn is not supported)");
  if (net.layers.empty()) throw UnsupportedError("gated network has no layers");
}

// Final-layer activation interval for z0 in [lo0, hi0].
void output_bounds(const NetworkParams& net, const Vec& lo0, const Vec& hi0, Vec& lo, Vec& hi) {
  lo = lo0;
  hi = hi0;
  for (const Layer& l : net.layers) {
    const Mat wp = l.w.cwiseMax(0.0);
    const Mat wn = l.w.cwiseMin(0.0);
    Vec plo = wp * lo + wn * hi + l.b;
    Vec phi = wp * hi + wn * lo + l.b;
    lo = plo.cwiseMax(0.0);
    hi = phi.cwiseMax(0.0);
  }
}

}  // namespace

std::vector<std::pair<Vec, Vec>> preactivation_bounds(const NetworkParams& net, const Vec& lo0, const Vec& hi0) {
  std::vector<std::pair<Vec, Vec>> out;
  Vec lo = lo0, hi = hi0;
  for (const Layer& l : net.layers) {
    const Mat wp = l.w.cwiseMax(0.0);
    const Mat wn = l.w.cwiseMin(0.0);
    Vec plo = wp * lo + wn * hi + l.b;
    Vec phi = wp * hi + wn * lo + l.b;
    lo = plo.cwiseMax(0.0);
    hi = phi.cwiseMax(0.0);
    out.emplace_back(std::move(plo), std::move(phi));
  }
  return out;
}

double nn_surrogate_revenue(const NetworkParams& net, const RevenueSpec& rev, const Assortment& s) {
  require_gated(net);
  Vec x(net.n);
  for (int i = 0; i < net.n; ++i) x(i) = s.contains(i) ? 1.0 : 0.0;
  Vec lo, hi;
  output_bounds(net, x, x, lo, hi);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < net.n; ++i) {
    if (!s.contains(i)) continue;
    const double q = surrogate_exp(lo(i));
    num += rev.mu[static_cast<std::size_t>(i)] * q;
    den += q;
  }
  return num / den;
}

MipInstance build_nn_mip(const NetworkParams& net, const RevenueSpec& rev, const CapacityConstraint* cap) {
  require_gated(net);
  const Universe u = net.universe();
  check_revenue(u, rev);
  if (cap) check_capacity(u, *cap);
  const int n = net.n;
  MipInstance mip;
  NnRatioObjective ro;
  ro.net = net;
  ro.mu = rev.mu;
  if (cap) ro.cap = *cap;

  Vec lo0 = Vec::Zero(n), hi0 = Vec::Ones(n);
  for (int i = 0; i < n; ++i) {
    const bool pinned = u.is_no_purchase(i);
    if (pinned) lo0(i) = 1.0;
    ro.z0.push_back(mip.add_var("z0_" + std::to_string(i), VarKind::kBinary, pinned ? 1.0 : 0.0, 1.0));
  }
  mip.assortment_vars = ro.z0;
  const auto bounds = preactivation_bounds(net, lo0, hi0);
  std::vector<int> prev = ro.z0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    const std::string tag = std::to_string(l + 1) + "_";
    std::vector<int> cur;
    for (int j = 0; j < layer.out(); ++j) {
      BigM bm;
      bm.layer = static_cast<int>(l) + 1;
      bm.unit = j;
      bm.pre_lo = bounds[l].first(j);
      bm.pre_hi = bounds[l].second(j);
      bm.m_pos = std::max(bm.pre_hi, 0.0);
      bm.m_neg = std::max(-bm.pre_lo, 0.0);
      const std::string id = tag + std::to_string(j);
      const int z = mip.add_var("z" + id, VarKind::kContinuous, 0.0, bm.m_pos);
      const int zt = mip.add_var("zt" + id, VarKind::kContinuous, 0.0, bm.m_neg);
      // A unit whose interval excludes one sign has its indicator fixed.
      const double zeta_lo = bm.pre_lo >= 0.0 ? 1.0 : 0.0;
      const double zeta_hi = bm.pre_hi <= 0.0 ? 0.0 : 1.0;
      const int zeta = mip.add_var("zeta" + id, VarKind::kBinary, std::min(zeta_lo, zeta_hi), zeta_hi);
      std::vector<std::pair<int, double>> terms{{z, 1.0}, {zt, -1.0}};
      for (int k = 0; k < layer.in(); ++k)
        if (layer.w(j, k) != 0.0) terms.push_back({prev[static_cast<std::size_t>(k)], -layer.w(j, k)});
      mip.add_row("fwd" + id, terms, RowSense::kEq, layer.b(j));
      mip.add_row("on" + id, {{z, 1.0}, {zeta, -bm.m_pos}}, RowSense::kLe, 0.0);
      mip.add_row("off" + id, {{zt, 1.0}, {zeta, bm.m_neg}}, RowSense::kLe, bm.m_neg);
      mip.big_m.push_back(bm);
      cur.push_back(z);
    }
    prev = std::move(cur);
  }
  ro.zl = prev;
  for (int i = 0; i < n; ++i) {
    const double m = mip.vars[static_cast<std::size_t>(ro.zl[static_cast<std::size_t>(i)])].ub;
    const std::string id = std::to_string(i);
    const int v = mip.add_var("v_" + id, VarKind::kContinuous, 0.0, m);
    const int z0 = ro.z0[static_cast<std::size_t>(i)];
    const int zl = ro.zl[static_cast<std::size_t>(i)];
    mip.add_row("v_gate_" + id, {{v, 1.0}, {z0, -m}}, RowSense::kLe, 0.0);
    mip.add_row("v_top_" + id, {{v, 1.0}, {zl, -1.0}}, RowSense::kLe, 0.0);
    mip.add_row("v_low_" + id, {{v, 1.0}, {zl, -1.0}, {z0, -m}}, RowSense::kGe, -m);
    ro.v.push_back(v);
  }
  if (cap) {
    std::vector<std::pair<int, double>> t;
    for (int i = 0; i < n; ++i)
      if (cap->a[static_cast<std::size_t>(i)] != 0.0) t.push_back({ro.z0[static_cast<std::size_t>(i)], cap->a[static_cast<std::size_t>(i)]});
    mip.add_row("capacity", t, RowSense::kLe, cap->c);
  }
  mip.ratio = std::move(ro);
  return mip;
}

MipInstance linearize_ratio(const MipInstance& mip, double t) {
  if (!mip.ratio) throw UnsupportedError("instance has no ratio objective");
  if (!std::isfinite(t)) throw DimensionError("Dinkelbach parameter must be finite");
  MipInstance out = mip;
  out.ratio.reset();
  out.maximize = true;
  std::fill(out.obj.begin(), out.obj.end(), 0.0);
  out.obj_const = 0.0;
  out.quad.clear();
  const NnRatioObjective& r = *mip.ratio;
  for (std::size_t i = 0; i < r.mu.size(); ++i) {
    const double c = r.mu[i] - t;
    if (c == 0.0) continue;
    out.obj[static_cast<std::size_t>(r.z0[i])] += c;
    out.obj[static_cast<std::size_t>(r.v[i])] += c;
    out.quad.push_back({r.v[i], r.v[i], 0.5 * c});
  }
  return out;
}

OptResult solve_nn_mip(const MipInstance& mip, const NnMipOptions& opt) {
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };
  if (!mip.ratio) throw UnsupportedError("solve_nn_mip needs an instance from build_nn_mip");
  const NnRatioObjective& ro = *mip.ratio;
  const NetworkParams& net = ro.net;
  const Universe u = net.universe();
  const int n = net.n;
  const RevenueSpec rev{ro.mu};
  const CapacityConstraint* cap = ro.cap ? &*ro.cap : nullptr;
  NeuralChoiceModel model(net);

  // Warm start: nested sets by decreasing revenue under the surrogate.
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (!u.is_no_purchase(i)) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return ro.mu[static_cast<std::size_t>(a)] > ro.mu[static_cast<std::size_t>(b)];
  });
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
  if (u.has_no_purchase()) mask[static_cast<std::size_t>(u.no_purchase())] = 1;
  std::optional<Assortment> cur;
  double cur_r = -kInf;
  for (std::size_t k = u.has_no_purchase() ? 0 : 1; k <= order.size(); ++k) {
    if (k > 0) mask[static_cast<std::size_t>(order[k - 1])] = 1;
    Assortment s(u, mask);
    if (cap && !cap->feasible(s)) continue;
    const double r = nn_surrogate_revenue(net, rev, s);
    if (!cur || r > cur_r + 1e-12 * std::max(1.0, std::abs(cur_r))) {
      cur = s;
      cur_r = r;
    }
  }
  if (!cur) throw InvariantError("capacity admits no nested assortment");

  OptResult res;
  res.method = "nn-mip";
  long nodes = 0;
  bool complete = opt.time_limit > 0;
  if (complete) {
    // Order the search by decreasing revenue; no-purchase is pinned.
    const int k = static_cast<int>(order.size());
    Vec lo(n), hi(n), zlo, zhi;
    std::vector<int> fixed(static_cast<std::size_t>(n), -1);  // -1 free, 0 out, 1 in
    if (u.has_no_purchase()) fixed[static_cast<std::size_t>(u.no_purchase())] = 1;
    double t = cur_r;
    for (int outer = 0; outer < 10000 && complete; ++outer) {
      double best = 0.0;  // F_t(cur) = 0 by construction
      std::optional<std::vector<int>> best_fix;
      bool aborted = false;
      auto bound_and_eval = [&](bool leaf, double& fval) {
        for (int i = 0; i < n; ++i) {
          const int f = fixed[static_cast<std::size_t>(i)];
          lo(i) = f == 1 ? 1.0 : 0.0;
          hi(i) = f == 0 ? 0.0 : 1.0;
        }
        output_bounds(net, lo, hi, zlo, zhi);
        double ub = 0.0;
        for (int i = 0; i < n; ++i) {
          const int f = fixed[static_cast<std::size_t>(i)];
          if (f == 0) continue;
          const double c = ro.mu[static_cast<std::size_t>(i)] - t;
          if (leaf) {
            ub += c * surrogate_exp(zlo(i));
          } else if (c > 0) {
            ub += c * surrogate_exp(zhi(i));
          } else if (f == 1) {
            ub += c * surrogate_exp(zlo(i));
          }
        }
        fval = ub;
      };
      double load = 0.0;
      if (cap && u.has_no_purchase()) load = cap->a[static_cast<std::size_t>(u.no_purchase())];
      // Depth-first search over `order`.
      std::function<void(int)> dfs = [&](int depth) {
        if (aborted) return;
        if (++nodes >= opt.node_limit || ((nodes & 1023) == 0 && elapsed() > opt.time_limit)) {
          aborted = true;
          return;
        }
        const bool leaf = depth == k;
        double val;
        bound_and_eval(leaf, val);
        const double tol = 1e-10 * std::max(1.0, std::abs(t));
        if (leaf) {
          if (val > best + tol) {
            bool any = u.has_no_purchase();
            for (int f : fixed) any |= f == 1;
            if (any) {
              best = val;
              best_fix = fixed;
            }
          }
          return;
        }
        if (val <= best + tol) return;
        const int i = order[static_cast<std::size_t>(depth)];
        const double a = cap ? cap->a[static_cast<std::size_t>(i)] : 0.0;
        const bool include_first = ro.mu[static_cast<std::size_t>(i)] > t;
        for (int pass = 0; pass < 2; ++pass) {
          const bool include = (pass == 0) == include_first;
          if (include && cap && load + a > cap->c + 1e-9 * std::max(1.0, std::abs(cap->c))) continue;
          fixed[static_cast<std::size_t>(i)] = include ? 1 : 0;
          if (include) load += a;
          dfs(depth + 1);
          if (include) load -= a;
          fixed[static_cast<std::size_t>(i)] = -1;
        }
      };
      dfs(0);
      if (aborted) complete = false;
      if (!best_fix) break;
      std::vector<std::uint8_t> m(static_cast<std::size_t>(n), 0);
      for (int i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = (*best_fix)[static_cast<std::size_t>(i)] == 1;
      Assortment s(u, m);
      const double r = nn_surrogate_revenue(net, rev, s);
      if (!(r > cur_r + 1e-12 * std::max(1.0, std::abs(cur_r)))) break;
      cur = s;
      cur_r = r;
      t = r;
    }
  }
  res.assortment = *cur;
  res.surrogate = cur_r;
  res.value = expected_revenue(model, res.assortment, rev);
  res.exact = complete;
  res.nodes = nodes;
  res.seconds = elapsed();
  res.info["time_limit"] = opt.time_limit;
  return res;
}

}  // namespace choicenet
