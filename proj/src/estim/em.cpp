#include "choicenet/estim/em.hpp"

#include <cmath>
#include <map>
#include <optional>

#include "choicenet/core/choice_model.hpp"
#include "choicenet/core/error.hpp"
#include "choicenet/core/rng.hpp"

namespace choicenet {
namespace {

struct Group {
  Assortment assortment;
  std::map<int, double> chosen;  // product -> count
};

std::vector<Group> group_by_assortment(const ChoiceDataset& data) {
  std::map<std::vector<std::uint8_t>, Group> groups;
  for (const Sample& s : data.samples) {
    Group& g = groups[s.assortment.mask()];
    if (g.assortment.size() == 0) g.assortment = s.assortment;
    g.chosen[s.chosen] += 1.0;
  }
  std::vector<Group> out;
  out.reserve(groups.size());
  for (auto& [k, g] : groups) out.push_back(std::move(g));
  return out;
}

// Transient states that can still reach the offered set.
std::vector<int> reaching_states(const Mat& rho, const Assortment& s) {
  const int n = s.size();
  std::vector<char> reach(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  for (int i = 0; i < n; ++i)
    if (s.contains(i)) {
      reach[static_cast<std::size_t>(i)] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    int k = stack.back();
    stack.pop_back();
    for (int j = 0; j < n; ++j)
      if (!reach[static_cast<std::size_t>(j)] && rho(j, k) > 0.0) {
        reach[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
  }
  std::vector<int> t1;
  for (int j = 0; j < n; ++j)
    if (!s.contains(j) && reach[static_cast<std::size_t>(j)]) t1.push_back(j);
  return t1;
}

struct Stats {
  Vec arrivals;
  Mat transitions;
  double loglik = 0.0;
};

Stats e_step(const std::vector<Group>& groups, const Vec& lambda, const Mat& rho) {
  const int n = static_cast<int>(lambda.size());
  Stats st{Vec::Zero(n), Mat::Zero(n, n), 0.0};
  for (const Group& g : groups) {
    const Assortment& s = g.assortment;
    const std::vector<int> t1 = reaching_states(rho, s);
    const int t = static_cast<int>(t1.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(t, t);
    Eigen::VectorXd lt(t);
    for (int x = 0; x < t; ++x) {
      lt(x) = lambda(t1[static_cast<std::size_t>(x)]);
      for (int y = 0; y < t; ++y) a(x, y) -= rho(t1[static_cast<std::size_t>(x)], t1[static_cast<std::size_t>(y)]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    Eigen::VectorXd visits;
    if (t > 0) {
      lu.compute(a);
      visits = lu.transpose().solve(lt);  // expected visits to each transient state
    }
    for (const auto& [i, count] : g.chosen) {
      Eigen::VectorXd h;  // absorption probability into i from each transient state
      double p = lambda(i);
      if (t > 0) {
        Eigen::VectorXd r(t);
        for (int x = 0; x < t; ++x) r(x) = rho(t1[static_cast<std::size_t>(x)], i);
        h = lu.solve(r);
        p += lt.dot(h);
      }
      st.loglik += count * std::log(std::max(p, kProbFloor));
      if (!(p > 0.0)) continue;
      st.arrivals(i) += count * lambda(i) / p;
      for (int x = 0; x < t; ++x) {
        const int j = t1[static_cast<std::size_t>(x)];
        st.arrivals(j) += count * lt(x) * h(x) / p;
        const double vj = count * visits(x) / p;
        if (vj == 0.0) continue;
        for (int y = 0; y < t; ++y) {
          const int k = t1[static_cast<std::size_t>(y)];
          st.transitions(j, k) += vj * rho(j, k) * h(y);
        }
        st.transitions(j, i) += vj * rho(j, i);
      }
    }
  }
  return st;
}

EmFit run_em(const std::vector<Group>& groups, const Universe& u, double m, const EmConfig& cfg,
             std::uint64_t seed) {
  const int n = u.size();
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec lambda(n);
  for (int i = 0; i < n; ++i) lambda(i) = unif(rng);
  lambda /= lambda.sum();
  Mat rho(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) rho(i, j) = unif(rng);
    rho.row(i) /= rho.row(i).sum();
  }
  EmFit fit{MccmModel(u, lambda, rho), 0, false, seed, {}};
  for (fit.iterations = 0; fit.iterations < cfg.max_iters;) {
    Stats st = e_step(groups, lambda, rho);
    fit.loglik.push_back(st.loglik / m);
    Vec lambda_new = st.arrivals / st.arrivals.sum();
    Mat rho_new = rho;
    for (int j = 0; j < n; ++j) {
      const double out = st.transitions.row(j).sum();
      if (out > 0.0) rho_new.row(j) = st.transitions.row(j) / out;
    }
    // Mean L1 change over the n + 1 distributions (lambda and each row of rho).
    const double change = ((lambda_new - lambda).cwiseAbs().sum() + (rho_new - rho).cwiseAbs().sum()) /
                          (static_cast<double>(n) + 1.0);
    lambda = std::move(lambda_new);
    rho = std::move(rho_new);
    ++fit.iterations;
    if (change < cfg.threshold) {
      fit.converged = true;
      break;
    }
  }
  fit.loglik.push_back(e_step(groups, lambda, rho).loglik / m);
  // Guard against drift in the row sums.
  lambda /= lambda.sum();
  for (int j = 0; j < n; ++j) rho.row(j) /= rho.row(j).sum();
  fit.model = MccmModel(u, lambda, rho);
  return fit;
}

}  // namespace

double mccm_loglik(const ChoiceDataset& data, const Vec& lambda, const Mat& rho) {
  if (data.empty()) throw DatasetError("log-likelihood of an empty dataset");
  return e_step(group_by_assortment(data), lambda, rho).loglik / static_cast<double>(data.size());
}

EmFit fit_mccm_em(const ChoiceDataset& data, const EmConfig& cfg) {
  require_valid(data);
  if (data.empty()) throw DatasetError("cannot fit MCCM to an empty dataset");
  if (!(cfg.threshold > 0)) throw DimensionError("EM threshold must be positive");
  auto groups = group_by_assortment(data);
  const double m = static_cast<double>(data.size());
  std::optional<EmFit> best;
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    const std::uint64_t seed = r == 0 ? cfg.seed : derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
    EmFit fit = run_em(groups, data.universe, m, cfg, seed);
    if (!best || fit.loglik.back() > best->loglik.back()) best = std::move(fit);
  }
  return std::move(*best);
}

}  // namespace choicenet
