#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "choicenet/core/rng.hpp"
#include "choicenet/synth/models.hpp"

namespace choicenet {

enum class TruthKind { kMnl, kMccm, kNp, kMmnl };

TruthKind parse_truth_kind(std::string_view name);
std::string to_string(TruthKind kind);

// Cluster parameters of the grouped MCCM generator. The reference presets are
// sigma 2.5 / 4 clusters at n = 20 and sigma 4 / 10 clusters at n = 50; other
// sizes interpolate sigma linearly in n (clamped to [2.5, 4]) and use
// round(n / 5) clusters.
struct MccmPreset {
  double sigma;
  int clusters;
};
MccmPreset mccm_preset(int n);
// 10 permutations at n = 20, 20 at n = 50, round(n / 2.5) otherwise.
int np_preset(int n);

// u_i ~ N(0, 1) for every index, the no-purchase option included.
MnlModel gen_mnl(const Universe& u, Rng& rng);

// lambda = softmax(N(0, sigma^2)); row i of rho = softmax(nu_i) with
// nu_ij ~ N(2 sigma, sigma^2) inside i's cluster and N(0, sigma^2) outside.
// Index i belongs to cluster floor(i * clusters / n). clusters = 1 with
// in_group_shift = false gives i.i.d. N(0, sigma^2) rows.
MccmModel gen_mccm(const Universe& u, const MccmPreset& preset, Rng& rng,
                   bool in_group_shift = true);

// Uniform random permutations (Fisher-Yates) with equal weights.
NpModel gen_np(const Universe& u, int num_perms, Rng& rng);

// Equal-weight segments; segment c (1-based) draws N(c + n/5, 1) utilities on
// its contiguous block of products, 0 for no-purchase and -50 elsewhere.
MmnlModel gen_mmnl(const Universe& u, Rng& rng, int segments = 5);

// Generator presets keyed by universe size.
std::unique_ptr<ChoiceModel> gen_instance(TruthKind kind, const Universe& u,
                                          std::uint64_t seed);

// Standard-normal feature matrices and coefficients.
Mat gen_product_features(int n, int d, Rng& rng);
FeatureMnlModel gen_feature_mnl(const Universe& u, int d, Rng& rng);
FeatureMccmModel gen_feature_mccm(const Universe& u, int d, Rng& rng);

}  // namespace choicenet
