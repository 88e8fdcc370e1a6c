#include "choicenet/synth/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "choicenet/core/error.hpp"

namespace choicenet {
namespace {

Vec softmax(const Vec& x) {
  Vec e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

TruthKind parse_truth_kind(std::string_view name) {
  if (name == "mnl") return TruthKind::kMnl;
  if (name == "mccm") return TruthKind::kMccm;
  if (name == "np") return TruthKind::kNp;
  if (name == "mmnl") return TruthKind::kMmnl;
  throw ParseError("unknown truth kind '" + std::string(name) + "' (expected mnl, mccm, np, mmnl)");
}

std::string to_string(TruthKind kind) {
  switch (kind) {
    case TruthKind::kMnl: return "mnl";
    case TruthKind::kMccm: return "mccm";
    case TruthKind::kNp: return "np";
    case TruthKind::kMmnl: return "mmnl";
  }
  return "?";
}

MccmPreset mccm_preset(int n) {
  if (n == 20) return {2.5, 4};
  if (n == 50) return {4.0, 10};
  double sigma = 2.5 + (4.0 - 2.5) * (n - 20) / 30.0;
  sigma = std::clamp(sigma, 2.5, 4.0);
  int clusters = std::max(1, static_cast<int>(std::lround(n / 5.0)));
  return {sigma, clusters};
}

int np_preset(int n) {
  if (n == 20) return 10;
  if (n == 50) return 20;
  return std::max(1, static_cast<int>(std::lround(n / 2.5)));
}

MnlModel gen_mnl(const Universe& u, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> util(static_cast<std::size_t>(u.size()));
  for (double& x : util) x = g(rng);
  return MnlModel(u, std::move(util));
}

MccmModel gen_mccm(const Universe& u, const MccmPreset& preset, Rng& rng, bool in_group_shift) {
  const int n = u.size();
  if (preset.clusters < 1 || !(preset.sigma > 0)) throw DimensionError("bad MCCM preset");
  std::normal_distribution<double> g(0.0, preset.sigma);
  Vec mu(n);
  for (int i = 0; i < n; ++i) mu(i) = g(rng);
  Vec lambda = softmax(mu);
  Mat rho(n, n);
  auto cluster = [&](int i) { return static_cast<int>(static_cast<long>(i) * preset.clusters / n); };
  for (int i = 0; i < n; ++i) {
    Vec nu(n);
    for (int j = 0; j < n; ++j) {
      double mean = (in_group_shift && cluster(i) == cluster(j)) ? 2.0 * preset.sigma : 0.0;
      nu(j) = mean + g(rng);
    }
    rho.row(i) = softmax(nu).transpose();
  }
  return MccmModel(u, std::move(lambda), std::move(rho));
}

NpModel gen_np(const Universe& u, int num_perms, Rng& rng) {
  if (num_perms < 1) throw DimensionError("need at least one permutation");
  std::vector<std::vector<int>> perms;
  for (int k = 0; k < num_perms; ++k) {
    std::vector<int> p(static_cast<std::size_t>(u.size()));
    std::iota(p.begin(), p.end(), 0);
    for (int i = u.size() - 1; i > 0; --i) {
      std::uniform_int_distribution<int> d(0, i);
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(d(rng))]);
    }
    perms.push_back(std::move(p));
  }
  std::vector<double> w(static_cast<std::size_t>(num_perms), 1.0 / num_perms);
  return NpModel(u, std::move(perms), std::move(w));
}

MmnlModel gen_mmnl(const Universe& u, Rng& rng, int segments) {
  const int n = u.size();
  const int np = u.num_products();
  if (segments < 1 || segments > np) throw DimensionError("bad MMNL segment count");
  Mat util = Mat::Constant(segments, n, -50.0);
  std::normal_distribution<double> g(0.0, 1.0);
  // Products are the first np indices; split them into contiguous windows.
  for (int c = 0; c < segments; ++c) {
    const int lo = c * np / segments;
    const int hi = (c + 1) * np / segments;
    for (int i = lo; i < hi; ++i) util(c, i) = (c + 1) + n / 5.0 + g(rng);
    if (u.has_no_purchase()) util(c, u.no_purchase()) = 0.0;
  }
  std::vector<double> alpha(static_cast<std::size_t>(segments), 1.0 / segments);
  return MmnlModel(u, std::move(alpha), std::move(util));
}

std::unique_ptr<ChoiceModel> gen_instance(TruthKind kind, const Universe& u, std::uint64_t seed) {
  Rng rng(seed);
  switch (kind) {
    case TruthKind::kMnl: return std::make_unique<MnlModel>(gen_mnl(u, rng));
    case TruthKind::kMccm: return std::make_unique<MccmModel>(gen_mccm(u, mccm_preset(u.size()), rng));
    case TruthKind::kNp: return std::make_unique<NpModel>(gen_np(u, np_preset(u.size()), rng));
    case TruthKind::kMmnl: return std::make_unique<MmnlModel>(gen_mmnl(u, rng));
  }
  throw Error("unknown truth kind");
}

Mat gen_product_features(int n, int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat f(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) f(i, j) = g(rng);
  return f;
}

FeatureMnlModel gen_feature_mnl(const Universe& u, int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> beta(static_cast<std::size_t>(d));
  for (double& b : beta) b = g(rng);
  return FeatureMnlModel(u, std::move(beta));
}

FeatureMccmModel gen_feature_mccm(const Universe& u, int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> beta(static_cast<std::size_t>(d));
  for (double& b : beta) b = g(rng);
  Mat a(u.size(), d);
  for (int i = 0; i < u.size(); ++i)
    for (int j = 0; j < d; ++j) a(i, j) = g(rng);
  return FeatureMccmModel(u, std::move(beta), std::move(a));
}

}  // namespace choicenet
