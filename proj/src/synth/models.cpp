#include "choicenet/synth/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "choicenet/core/error.hpp"

namespace choicenet {

ProbVector softmax_on(std::span<const double> logits, const Assortment& s) {
  const std::size_t n = logits.size();
  ProbVector p(n, 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (s.contains(static_cast<int>(i))) mx = std::max(mx, logits[i]);
  if (mx == -std::numeric_limits<double>::infinity()) {
    // Every offered option has utility -inf; fall back to uniform.
    for (std::size_t i = 0; i < n; ++i)
      if (s.contains(static_cast<int>(i))) p[i] = 1.0 / s.count();
    return p;
  }
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!s.contains(static_cast<int>(i))) continue;
    p[i] = std::exp(logits[i] - mx);
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

MnlModel::MnlModel(Universe u, std::vector<double> utilities)
    : u_(u), util_(std::move(utilities)) {
  if (static_cast<int>(util_.size()) != u_.size())
    throw DimensionError("MNL utility vector length does not match universe");
  for (double x : util_)
    if (std::isnan(x) || x == std::numeric_limits<double>::infinity())
      throw DimensionError("MNL utilities must be finite or -inf");
}

ProbVector MnlModel::prob(const Assortment& s) const { return softmax_on(util_, s); }

MccmModel::MccmModel(Universe u, Vec lambda, Mat rho)
    : u_(u), lambda_(std::move(lambda)), rho_(std::move(rho)) {
  const int n = u_.size();
  if (lambda_.size() != n || rho_.rows() != n || rho_.cols() != n)
    throw DimensionError("MCCM parameter shapes do not match universe");
  if ((lambda_.array() < 0).any() || std::abs(lambda_.sum() - 1.0) > 1e-9)
    throw DimensionError("MCCM arrival vector must be a distribution");
  for (int i = 0; i < n; ++i) {
    if ((rho_.row(i).array() < 0).any() || std::abs(rho_.row(i).sum() - 1.0) > 1e-9)
      throw DimensionError("MCCM transition row " + std::to_string(i) + " is not stochastic");
  }
}

ProbVector mccm_absorption(const Vec& lambda, const Mat& rho, const Assortment& s) {
  const int n = s.size();
  ProbVector p(static_cast<std::size_t>(n), 0.0);
  // Transient states that can reach the offered set.
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
    for (int j = 0; j < n; ++j) {
      if (!reach[static_cast<std::size_t>(j)] && rho(j, k) > 0.0) {
        reach[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
    }
  }
  std::vector<int> t1;
  for (int j = 0; j < n; ++j)
    if (!s.contains(j) && reach[static_cast<std::size_t>(j)]) t1.push_back(j);

  for (int i = 0; i < n; ++i)
    if (s.contains(i)) p[static_cast<std::size_t>(i)] = lambda(i);
  if (!t1.empty()) {
    const int t = static_cast<int>(t1.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(t, t);
    Eigen::RowVectorXd lt(t);
    for (int x = 0; x < t; ++x) {
      lt(x) = lambda(t1[static_cast<std::size_t>(x)]);
      for (int y = 0; y < t; ++y) a(x, y) -= rho(t1[static_cast<std::size_t>(x)], t1[static_cast<std::size_t>(y)]);
    }
    // Visits: v = lambda_T1 (I - Q)^{-1}; then absorb through rho[T1, S].
    Eigen::RowVectorXd v = a.transpose().partialPivLu().solve(lt.transpose()).transpose();
    for (int i = 0; i < n; ++i) {
      if (!s.contains(i)) continue;
      double acc = 0.0;
      for (int x = 0; x < t; ++x) acc += v(x) * rho(t1[static_cast<std::size_t>(x)], i);
      p[static_cast<std::size_t>(i)] += acc;
    }
  }
  // Mass that never reaches the offered set goes to the default option.
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double& x = p[static_cast<std::size_t>(i)];
    if (x < 0.0) x = 0.0;
    total += x;
  }
  int sink = s.contains(n - 1) ? n - 1 : s.members().front();
  double residual = 1.0 - total;
  if (residual > 0.0) {
    p[static_cast<std::size_t>(sink)] += residual;
  } else {
    for (double& x : p) x /= total;
  }
  return p;
}

ProbVector MccmModel::prob(const Assortment& s) const {
  if (s.size() != u_.size()) throw DimensionError("assortment does not match universe");
  return mccm_absorption(lambda_, rho_, s);
}

NpModel::NpModel(Universe u, std::vector<std::vector<int>> perms, std::vector<double> weights)
    : u_(u), perms_(std::move(perms)), weights_(std::move(weights)) {
  if (perms_.empty() || perms_.size() != weights_.size())
    throw DimensionError("NP model needs one weight per permutation");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw DimensionError("NP weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DimensionError("NP weights must sum to 1");
  const int n = u_.size();
  for (const auto& p : perms_) {
    if (static_cast<int>(p.size()) != n) throw DimensionError("permutation length does not match universe");
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int i : p) {
      if (i < 0 || i >= n || seen[static_cast<std::size_t>(i)]) throw DimensionError("not a permutation");
      seen[static_cast<std::size_t>(i)] = 1;
    }
  }
}

ProbVector NpModel::prob(const Assortment& s) const {
  ProbVector p(static_cast<std::size_t>(u_.size()), 0.0);
  for (std::size_t k = 0; k < perms_.size(); ++k) {
    for (int i : perms_[k]) {
      if (s.contains(i)) {
        p[static_cast<std::size_t>(i)] += weights_[k];
        break;
      }
    }
  }
  return p;
}

MmnlModel::MmnlModel(Universe u, std::vector<double> alpha, Mat util)
    : u_(u), alpha_(std::move(alpha)), util_(std::move(util)) {
  if (util_.cols() != u_.size() || util_.rows() != static_cast<Eigen::Index>(alpha_.size()) || alpha_.empty())
    throw DimensionError("MMNL parameter shapes do not match");
  double total = 0.0;
  for (double a : alpha_) {
    if (!(a >= 0.0)) throw DimensionError("MMNL segment weights must be nonnegative");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DimensionError("MMNL segment weights must sum to 1");
}

ProbVector MmnlModel::prob(const Assortment& s) const {
  const auto n = static_cast<std::size_t>(u_.size());
  ProbVector p(n, 0.0);
  std::vector<double> row(n);
  for (std::size_t c = 0; c < alpha_.size(); ++c) {
    if (alpha_[c] == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) row[i] = util_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i));
    ProbVector q = softmax_on(row, s);
    for (std::size_t i = 0; i < n; ++i) p[i] += alpha_[c] * q[i];
  }
  return p;
}

namespace {

// Feature row of product i: customer features followed by product features.
void fill_row(const Features& f, int i, std::vector<double>& z) {
  z.clear();
  z.insert(z.end(), f.customer.begin(), f.customer.end());
  if (f.product)
    for (Eigen::Index j = 0; j < f.product->cols(); ++j) z.push_back((*f.product)(i, j));
}

}  // namespace

FeatureMnlModel::FeatureMnlModel(Universe u, std::vector<double> beta)
    : u_(u), beta_(std::move(beta)) {
  for (double b : beta_)
    if (!std::isfinite(b)) throw DimensionError("feature MNL coefficients must be finite");
}

ProbVector FeatureMnlModel::prob(const Assortment&) const {
  throw UnsupportedError("feature MNL needs feature inputs");
}

ProbVector FeatureMnlModel::prob(const Assortment& s, const Features& f) const {
  const int n = u_.size();
  std::vector<double> u(static_cast<std::size_t>(n), 0.0), z;
  for (int i = 0; i < n; ++i) {
    fill_row(f, i, z);
    if (z.size() != beta_.size()) throw DimensionError("feature dimension does not match coefficients");
    double acc = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) acc += z[j] * beta_[j];
    u[static_cast<std::size_t>(i)] = acc;
  }
  return softmax_on(u, s);
}

FeatureMccmModel::FeatureMccmModel(Universe u, std::vector<double> beta, Mat a)
    : u_(u), beta_(std::move(beta)), a_(std::move(a)) {
  if (a_.rows() != u_.size() || a_.cols() != static_cast<Eigen::Index>(beta_.size()))
    throw DimensionError("feature MCCM matrix must be n x d");
}

std::pair<Vec, Mat> FeatureMccmModel::chain(const Mat& x) const {
  const int n = u_.size();
  if (x.rows() != n || x.cols() != a_.cols()) throw DimensionError("product feature shape mismatch");
  Eigen::Map<const Vec> beta(beta_.data(), static_cast<Eigen::Index>(beta_.size()));
  Vec lam = x * beta;
  lam = (lam.array() - lam.maxCoeff()).exp();
  lam /= lam.sum();
  Mat rho = x * a_.transpose();  // rho(i, j) = A_j . x_i
  for (int i = 0; i < n; ++i) {
    rho.row(i) = (rho.row(i).array() - rho.row(i).maxCoeff()).exp();
    rho.row(i) /= rho.row(i).sum();
  }
  return {lam, rho};
}

ProbVector FeatureMccmModel::prob(const Assortment&) const {
  throw UnsupportedError("feature MCCM needs product features");
}

ProbVector FeatureMccmModel::prob(const Assortment& s, const Features& f) const {
  if (!f.product) throw UnsupportedError("feature MCCM needs product features");
  auto [lam, rho] = chain(*f.product);
  return mccm_absorption(lam, rho, s);
}

}  // namespace choicenet
