#include "choicenet/estim/mle.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "choicenet/core/error.hpp"

namespace choicenet {

AscentResult gradient_ascent(const std::function<double(const Vec&, Vec&)>& f, Vec x0,
                             const MleConfig& cfg) {
  if (!(cfg.tolerance > 0)) throw DimensionError("MLE tolerance must be positive");
  AscentResult r;
  r.x = std::move(x0);
  Vec g(r.x.size()), g_new(r.x.size());
  r.value = f(r.x, g);
  double step = cfg.step;
  Vec x_prev, g_prev;
  for (r.iterations = 0; r.iterations < cfg.max_iters; ++r.iterations) {
    r.grad_norm = g.norm();
    if (r.grad_norm <= cfg.tolerance) {
      r.converged = true;
      break;
    }
    if (!cfg.line_search) {
      r.x += step * g;
      r.value = f(r.x, g);
      continue;
    }
    if (x_prev.size() == r.x.size()) {
      // Barzilai-Borwein step for ascent on a concave function.
      Vec s = r.x - x_prev, y = g_prev - g;
      double sy = s.dot(y);
      if (sy > 1e-300) step = s.squaredNorm() / sy;
    }
    step = std::min(std::max(step, 1e-10), 1e10);
    double value_new = 0.0;
    Vec x_new;
    const double gg = g.squaredNorm();
    for (int bt = 0; bt < 60; ++bt) {
      x_new = r.x + step * g;
      value_new = f(x_new, g_new);
      if (std::isfinite(value_new) && value_new >= r.value + 1e-4 * step * gg) break;
      step *= 0.5;
    }
    if (!(value_new >= r.value)) {
      // No ascent possible at machine precision.
      r.grad_norm = g.norm();
      r.converged = r.grad_norm <= cfg.tolerance;
      break;
    }
    x_prev = r.x;
    g_prev = g;
    r.x = std::move(x_new);
    g = g_new;
    r.value = value_new;
  }
  r.grad_norm = g.norm();
  if (r.grad_norm <= cfg.tolerance) r.converged = true;
  return r;
}

MnlFit fit_mnl_mle(const ChoiceDataset& data, const MleConfig& cfg) {
  require_valid(data);
  if (data.empty()) throw DatasetError("cannot fit MNL to an empty dataset");
  const Universe& u = data.universe;
  const int n = u.size();

  // Group by assortment: per group total and chosen counts.
  struct Group {
    std::vector<int> members;
    double total = 0.0;
  };
  std::map<std::vector<std::uint8_t>, Group> groups;
  Vec chosen = Vec::Zero(n);
  std::vector<char> offered(static_cast<std::size_t>(n), 0);
  // beats(j, i): i was chosen while j was offered.
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> beats =
      Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
  for (const Sample& s : data.samples) {
    Group& g = groups[s.assortment.mask()];
    if (g.members.empty()) g.members = s.assortment.members();
    g.total += 1.0;
    chosen(s.chosen) += 1.0;
    for (int i : g.members) {
      offered[static_cast<std::size_t>(i)] = 1;
      beats(i, s.chosen) = 1;
    }
  }
  int pinned = u.has_no_purchase() ? u.no_purchase() : n - 1;
  if (!offered[static_cast<std::size_t>(pinned)])
    for (int i = 0; i < n; ++i)
      if (offered[static_cast<std::size_t>(i)]) {
        pinned = i;
        break;
      }
  std::vector<Group> flat;
  flat.reserve(groups.size());
  for (auto& [k, g] : groups) flat.push_back(std::move(g));

  // Free parameters: offered products other than the pinned index.
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i)
    if (i != pinned && offered[static_cast<std::size_t>(i)]) free_idx.push_back(i);
  const double m = static_cast<double>(data.size());
  std::vector<double> util(static_cast<std::size_t>(n), 0.0);
  auto expand = [&](const Vec& x) {
    for (std::size_t k = 0; k < free_idx.size(); ++k) util[static_cast<std::size_t>(free_idx[k])] = x(static_cast<Eigen::Index>(k));
  };
  Vec full_grad(n);
  auto objective = [&](const Vec& x, Vec& grad) {
    expand(x);
    double ll = 0.0;
    full_grad = chosen;
    for (int i = 0; i < n; ++i) ll += chosen(i) * (offered[static_cast<std::size_t>(i)] ? util[static_cast<std::size_t>(i)] : 0.0);
    for (const Group& g : flat) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int i : g.members) mx = std::max(mx, util[static_cast<std::size_t>(i)]);
      double z = 0.0;
      for (int i : g.members) z += std::exp(util[static_cast<std::size_t>(i)] - mx);
      ll -= g.total * (mx + std::log(z));
      for (int i : g.members) full_grad(i) -= g.total * std::exp(util[static_cast<std::size_t>(i)] - mx) / z;
    }
    grad.resize(static_cast<Eigen::Index>(free_idx.size()));
    for (std::size_t k = 0; k < free_idx.size(); ++k) grad(static_cast<Eigen::Index>(k)) = full_grad(free_idx[k]) / m;
    return ll / m;
  };

  AscentResult r = gradient_ascent(objective, Vec::Zero(static_cast<Eigen::Index>(free_idx.size())), cfg);
  expand(r.x);
  MnlFit fit{MnlModel(u, util), r.converged, false, r.iterations, r.grad_norm, r.value, {}};
  for (int i = 0; i < n; ++i) {
    if (!offered[static_cast<std::size_t>(i)]) {
      util[static_cast<std::size_t>(i)] = -std::numeric_limits<double>::infinity();
      fit.warnings.push_back("product " + std::to_string(i) + " never offered; utility unidentified");
    } else if (std::abs(util[static_cast<std::size_t>(i)]) > cfg.divergence_bound) {
      fit.diverged = true;
      fit.warnings.push_back("utility of product " + std::to_string(i) + " diverges");
    }
  }
  // The likelihood has a finite maximizer iff the comparison graph over the
  // offered products is strongly connected.
  auto reach = [&](bool forward) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{pinned};
    seen[static_cast<std::size_t>(pinned)] = 1;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      for (int b = 0; b < n; ++b) {
        if (seen[static_cast<std::size_t>(b)] || !offered[static_cast<std::size_t>(b)]) continue;
        if (forward ? beats(a, b) : beats(b, a)) {
          seen[static_cast<std::size_t>(b)] = 1;
          stack.push_back(b);
        }
      }
    }
    return seen;
  };
  auto fwd = reach(true), bwd = reach(false);
  for (int i = 0; i < n; ++i) {
    if (!offered[static_cast<std::size_t>(i)]) continue;
    if (!fwd[static_cast<std::size_t>(i)] || !bwd[static_cast<std::size_t>(i)]) {
      if (!fit.diverged) fit.warnings.push_back("choice data are separable; utilities diverge");
      fit.diverged = true;
      break;
    }
  }
  if (fit.diverged) fit.converged = false;
  fit.model = MnlModel(u, util);
  return fit;
}

FeatureMnlFit fit_feature_mnl_mle(const ChoiceDataset& data, const MleConfig& cfg) {
  require_valid(data);
  if (data.empty()) throw DatasetError("cannot fit MNL to an empty dataset");
  const int n = data.universe.size();
  const int dc = data.customer_dim();
  const int dp = data.product_features ? static_cast<int>(data.product_features->cols()) : 0;
  const int d = dc + dp;
  if (d == 0) throw DatasetError("feature MNL needs customer or product features");
  const double m = static_cast<double>(data.size());

  auto attr = [&](const Sample& s, int i, int j) {
    return j < dc ? s.customer[static_cast<std::size_t>(j)] : (*data.product_features)(i, j - dc);
  };
  std::vector<double> util(static_cast<std::size_t>(n));
  auto objective = [&](const Vec& beta, Vec& grad) {
    grad = Vec::Zero(d);
    double ll = 0.0;
    for (const Sample& s : data.samples) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) {
        if (!s.assortment.contains(i)) continue;
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += beta(j) * attr(s, i, j);
        util[static_cast<std::size_t>(i)] = acc;
        mx = std::max(mx, acc);
      }
      double z = 0.0;
      for (int i = 0; i < n; ++i)
        if (s.assortment.contains(i)) z += std::exp(util[static_cast<std::size_t>(i)] - mx);
      ll += util[static_cast<std::size_t>(s.chosen)] - mx - std::log(z);
      for (int j = 0; j < d; ++j) {
        double e = 0.0;
        for (int i = 0; i < n; ++i)
          if (s.assortment.contains(i)) e += std::exp(util[static_cast<std::size_t>(i)] - mx) / z * attr(s, i, j);
        grad(j) += attr(s, s.chosen, j) - e;
      }
    }
    grad /= m;
    return ll / m;
  };
  AscentResult r = gradient_ascent(objective, Vec::Zero(d), cfg);

  // Rank of the centered attribute design across offered products.
  Mat gram = Mat::Zero(d, d);
  for (const Sample& s : data.samples) {
    Vec mean = Vec::Zero(d);
    const int cnt = s.assortment.count();
    for (int i = 0; i < n; ++i)
      if (s.assortment.contains(i))
        for (int j = 0; j < d; ++j) mean(j) += attr(s, i, j) / cnt;
    for (int i = 0; i < n; ++i) {
      if (!s.assortment.contains(i)) continue;
      Vec z(d);
      for (int j = 0; j < d; ++j) z(j) = attr(s, i, j) - mean(j);
      gram += z * z.transpose();
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  bool non_unique = top == 0.0 || es.eigenvalues().minCoeff() <= 1e-10 * top;

  FeatureMnlFit fit{FeatureMnlModel(data.universe, std::vector<double>(r.x.data(), r.x.data() + d)),
                    r.converged, non_unique, r.iterations, r.grad_norm, {}};
  if (non_unique) fit.warnings.push_back("feature design is rank deficient; coefficients not unique");
  return fit;
}

}  // namespace choicenet
