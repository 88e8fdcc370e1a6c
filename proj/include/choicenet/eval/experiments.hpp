#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "choicenet/estim/em.hpp"
#include "choicenet/estim/mle.hpp"
#include "choicenet/eval/report.hpp"
#include "choicenet/neural/train.hpp"
#include "choicenet/opt/optimizers.hpp"
#include "choicenet/synth/dataset_gen.hpp"
#include "choicenet/synth/generators.hpp"
#include "choicenet/synth/samplers.hpp"

// Seed streams. Every experiment derives all randomness from one seed. A
// column (truth kind k, size n) uses base = derive_seed(seed, k, n); trial t
// of that column then uses derive_seed(base, t, s) with stream s:
//   0 truth parameters, 1 training set, 2 validation set, 3 test set,
//   4 network init and shuffling, 5 EM init, 100 + r revenue draw r.

namespace choicenet {

enum class Estimator { kMnlMle, kMccmEm, kGasn, kRasn };
Estimator parse_estimator(std::string_view name);
std::string to_string(Estimator e);

struct FitSettings {
  TrainConfig train;
  std::vector<int> gasn_hidden;  // empty: one n -> n layer
  int rasn_blocks = 1;
  MleConfig mle;
  EmConfig em;
  nlohmann::json to_json() const;
};

// Fits one estimator. `seed` drives network init/shuffling or the EM start.
ModelPtr fit_estimator(Estimator e, const ChoiceDataset& train, const ChoiceDataset* val,
                       const FitSettings& fit, std::uint64_t seed);

std::uint64_t column_seed(std::uint64_t seed, TruthKind kind, int n);

// Runs body(t) for t in [0, count) on up to `jobs` threads.
void parallel_trials(int count, int jobs, const std::function<void(int)>& body);

struct ExperimentSpec {
  std::vector<TruthKind> truths{TruthKind::kMnl};
  int n = 20;
  SamplerKind sampler = SamplerKind::kUniformSize;
  // Training sizes; smaller sets are prefixes of the largest one.
  std::vector<std::size_t> m_train{100000};
  std::size_t m_val = 5000;
  std::size_t m_test = 10000;
  std::vector<Estimator> estimators{Estimator::kMnlMle, Estimator::kGasn};
  int trials = 10;
  std::uint64_t seed = 42;
  FitSettings fit;
  int jobs = 1;
  nlohmann::json to_json() const;
};

// Mean test CE. Rows: "Uniform", "<estimator> m=<m>" for each estimator and
// size, "Oracle". Columns: "<truth> n=<n>". A failed fit is counted in the
// cell's failures and leaves no value.
ReportTable run_prediction_experiment(const ExperimentSpec& spec);
std::string prediction_row(Estimator e, std::size_t m);
std::string truth_column(TruthKind kind, int n);

// Behavioral fixtures: fitted probabilities against the truth.
struct FixtureSpec {
  std::size_t m = 8000;
  std::size_t m_val = 4000;
  // A 1-layer GAsN on two or three distinct assortments often starts with
  // dead output units; the fit keeps the best of this many seeds by
  // validation CE.
  int restarts = 12;
  std::uint64_t seed = 42;
  FitSettings fit;
};
struct FixtureResult {
  Fixture fixture;
  std::vector<ProbVector> gasn;
  std::vector<ProbVector> mnl;
  std::vector<ProbVector> em;
  // Rows "<case>:<option>", columns True, GAsN, MNL-MLE, MCCM-EM.
  ReportTable table() const;
};
FixtureSpec default_fixture_spec();
FixtureResult run_fixture_experiment(const Fixture& fixture, const FixtureSpec& spec);

// Revenue and capacity draws: mu_i, a_i ~ U[10, 50] for products, 0 for
// no-purchase; budget c ~ U[max(|a|_1/n, |a|_inf), max(4|a|_1/n, |a|_inf)]
// with n the universe size.
RevenueSpec gen_revenue(const Universe& u, Rng& rng);
CapacityConstraint gen_capacity(const Universe& u, Rng& rng);

// Exact optimum under a known truth: revenue-ordered for unconstrained MNL,
// the MNL MILP for constrained MNL, Bellman for unconstrained MCCM, the NP
// MILP for NP beyond brute-force size, brute force otherwise.
OptResult truth_optimum(const ChoiceModel& truth, const RevenueSpec& rev, const CapacityConstraint* cap);

enum class OptEstimator { kMnl, kMccm, kNn1, kNn2 };
std::string to_string(OptEstimator e);
OptEstimator parse_opt_estimator(std::string_view name);

struct OptExperimentSpec {
  std::vector<TruthKind> truths{TruthKind::kMnl, TruthKind::kMmnl};
  std::vector<int> sizes{10, 15};
  int datasets = 5;    // truth instances per (truth, n)
  int draws = 20;      // revenue/constraint draws per instance
  std::size_t m_train = 30000;
  std::size_t m_val = 5000;  // network snapshot selection
  std::vector<OptEstimator> estimators{OptEstimator::kMnl, OptEstimator::kMccm, OptEstimator::kNn1,
                                       OptEstimator::kNn2};
  bool unconstrained = true;
  bool constrained = true;
  double mip_time_limit = 300.0;
  std::uint64_t seed = 42;
  FitSettings fit;
  int jobs = 1;
  nlohmann::json to_json() const;
};

struct OptReport {
  // Mean optimality ratio. Unconstrained rows: MNL-MLE (revenue-ordered),
  // MCCM-EM (Bellman), NN(1), NN(2) (network MIP). Constrained rows:
  // MNL-MLE/RO, MNL-MLE/MIP, MCCM-EM/ADXOpt, NN(1)/MIP, NN(2)/MIP.
  ReportTable unconstrained;
  ReportTable constrained;
  int timeouts = 0;  // network MIPs stopped by the time limit
};
OptReport run_opt_experiment(const OptExperimentSpec& spec);

// MCCM whose lambda and every row of rho are softmaxes of i.i.d. N(0, 1)
// logits. Used as the truth of the shift and warm-start experiments.
MccmModel gen_flat_mccm(const Universe& u, Rng& rng);

struct ShiftSpec {
  std::size_t m_train = 100000;
  std::size_t m_val = 5000;
  std::size_t m_test = 10000;
  std::uint64_t seed = 42;
  FitSettings fit;
  int jobs = 1;
  nlohmann::json to_json() const;
};
struct ShiftReport {
  ReportTable grid;    // rows D-1..D-4, Mix (training); columns D-1..D-4 (test)
  ReportTable oracle;  // one row, Oracle
};
// The Mix training set takes m_train / 4 samples from each sampler.
ShiftReport distribution_shift_experiment(const MccmModel& truth, const ShiftSpec& spec);
// Same, with the truth gen_flat_mccm(Universe(n)) drawn from
// derive_seed(column_seed(seed, kMccm, n), 0, 0).
ShiftReport distribution_shift_experiment(int n, const ShiftSpec& spec);
std::vector<SamplerKind> shift_samplers();
std::string shift_label(SamplerKind kind);

struct EmSizeSpec {
  int n = 20;
  std::size_t m = 10000;
  std::vector<int> sizes{2, 4, 6, 8, 10};
  int trials = 10;
  std::uint64_t seed = 42;
  EmConfig em;
  int jobs = 1;
  nlohmann::json to_json() const;
};
// Rows "size=<k>"; columns "error" (mean absolute error over every lambda
// and rho entry, equally weighted), "lambda", "rho".
ReportTable em_assortment_size_experiment(const EmSizeSpec& spec);
// Mean absolute error over all lambda and rho entries, equally weighted.
double mccm_parameter_error(const MccmModel& fit, const MccmModel& truth);

struct WarmStartSpec {
  int old_products = 20;
  int new_products = 5;
  std::size_t m_old = 100000;
  std::size_t m_new = 2000;
  std::size_t m_val = 5000;
  Arch arch = Arch::kGasn;
  std::vector<int> hidden{50};
  int seeds = 10;
  std::uint64_t seed = 42;
  TrainConfig train;
  int jobs = 1;
  nlohmann::json to_json() const;
};
struct WarmStartReport {
  ReportTable curves;  // rows "epoch <e>", columns warm, cold; one value per seed
  // Seeds where the warm start's validation CE is <= the cold start's at
  // every logged epoch.
  int warm_dominates = 0;
  int seeds = 0;
};
// Folds products keep_products.. of an MCCM into its no-purchase option.
MccmModel shrink_mccm(const MccmModel& model, int keep_products);
WarmStartReport warm_start_experiment(const WarmStartSpec& spec);

struct SweepSpec {
  int n = 20;
  int d = 5;  // product feature dimension of the feature-MCCM truth
  std::size_t m_train = 20000;
  std::size_t m_val = 5000;
  std::size_t m_test = 10000;
  std::vector<int> depths{1, 2, 3};
  std::vector<int> widths{1, 3};  // hidden width = multiplier * n
  int trials = 3;
  std::uint64_t seed = 42;
  TrainConfig train;
  int jobs = 1;
  nlohmann::json to_json() const;
};
// Feature-free GAsN test CE on feature-MCCM data. Rows "depth=<L>", columns
// "width=<k>x". Depth 1 is a single n -> n layer for every width.
ReportTable depth_width_sweep(const SweepSpec& spec);

}  // namespace choicenet
