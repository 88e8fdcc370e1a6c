#include "choicenet/eval/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "choicenet/core/error.hpp"
#include "choicenet/neural/warm_start.hpp"
#include "choicenet/opt/nn_mip.hpp"
#include "choicenet/opt/optimizers.hpp"

namespace choicenet {

Estimator parse_estimator(std::string_view name) {
  if (name == "mnl-mle" || name == "mnl") return Estimator::kMnlMle;
  if (name == "mccm-em" || name == "em") return Estimator::kMccmEm;
  if (name == "gasn") return Estimator::kGasn;
  if (name == "rasn") return Estimator::kRasn;
  throw ParseError("unknown estimator '" + std::string(name) + "'", 0);
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::kMnlMle: return "MNL-MLE";
    case Estimator::kMccmEm: return "MCCM-EM";
    case Estimator::kGasn: return "GAsN";
    case Estimator::kRasn: return "RAsN";
  }
  return "?";
}

namespace {

nlohmann::json train_json(const TrainConfig& t) {
  nlohmann::json j{{"batch", t.batch}, {"lr", t.lr}, {"epochs", t.epochs}, {"seed", t.seed},
                   {"keep_best", t.keep_best}};
  if (t.w_bound) j["w_bound"] = *t.w_bound;
  if (t.b_bound) j["b_bound"] = *t.b_bound;
  return j;
}

NetSpec feature_free_spec(Arch arch, const Universe& u, std::vector<int> hidden, int blocks) {
  NetSpec s;
  s.arch = arch;
  s.n = u.size();
  s.has_no_purchase = u.has_no_purchase();
  s.hidden = std::move(hidden);
  s.blocks = blocks;
  return s;
}

ChoiceDataset prefix(const ChoiceDataset& d, std::size_t m) {
  ChoiceDataset out;
  out.universe = d.universe;
  out.product_features = d.product_features;
  out.samples.assign(d.samples.begin(), d.samples.begin() + static_cast<std::ptrdiff_t>(std::min(m, d.size())));
  return out;
}

const MccmModel& as_mccm(const ChoiceModel& m) {
  auto* p = dynamic_cast<const MccmModel*>(&m);
  if (!p) throw InvariantError("expected an MCCM model");
  return *p;
}

}  // namespace

nlohmann::json FitSettings::to_json() const {
  return {{"train", train_json(train)},
          {"gasn_hidden", gasn_hidden},
          {"rasn_blocks", rasn_blocks},
          {"mle", {{"max_iters", mle.max_iters}, {"tolerance", mle.tolerance}}},
          {"em", {{"max_iters", em.max_iters}, {"threshold", em.threshold}, {"restarts", em.restarts}}}};
}

ModelPtr fit_estimator(Estimator e, const ChoiceDataset& train_data, const ChoiceDataset* val,
                       const FitSettings& fit, std::uint64_t seed) {
  switch (e) {
    case Estimator::kMnlMle:
      return std::make_shared<MnlModel>(fit_mnl_mle(train_data, fit.mle).model);
    case Estimator::kMccmEm: {
      EmConfig c = fit.em;
      c.seed = seed;
      return std::make_shared<MccmModel>(fit_mccm_em(train_data, c).model);
    }
    case Estimator::kGasn:
    case Estimator::kRasn: {
      const Arch arch = e == Estimator::kGasn ? Arch::kGasn : Arch::kRasn;
      TrainConfig t = fit.train;
      t.seed = seed;
      auto r = train(feature_free_spec(arch, train_data.universe, fit.gasn_hidden, fit.rasn_blocks), train_data,
                     val, t);
      return std::make_shared<NeuralChoiceModel>(std::move(r.params));
    }
  }
  throw InvariantError("unhandled estimator");
}

std::uint64_t column_seed(std::uint64_t seed, TruthKind kind, int n) {
  return derive_seed(seed, static_cast<std::uint64_t>(kind), static_cast<std::uint64_t>(n));
}

void parallel_trials(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (int t = 0; t < count; ++t) body(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto worker = [&] {
    for (int t = next++; t < count; t = next++) {
      try {
        body(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::min(jobs, count); ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first) std::rethrow_exception(first);
}

// ---------------------------------------------------------------- prediction

nlohmann::json ExperimentSpec::to_json() const {
  std::vector<std::string> tr, es;
  for (TruthKind k : truths) tr.push_back(to_string(k));
  for (Estimator e : estimators) es.push_back(to_string(e));
  return {{"truths", tr},  {"n", n},           {"sampler", to_string(sampler)}, {"m_train", m_train},
          {"m_val", m_val}, {"m_test", m_test}, {"estimators", es},            {"trials", trials},
          {"seed", seed},   {"fit", fit.to_json()}};
}

std::string prediction_row(Estimator e, std::size_t m) { return to_string(e) + " m=" + std::to_string(m); }
std::string truth_column(TruthKind kind, int n) { return to_string(kind) + " n=" + std::to_string(n); }

ReportTable run_prediction_experiment(const ExperimentSpec& spec) {
  if (spec.m_train.empty() || spec.estimators.empty() || spec.truths.empty() || spec.trials < 1)
    throw DimensionError("prediction experiment needs truths, estimators, sizes and trials");
  std::vector<std::string> rows{"Uniform"};
  for (Estimator e : spec.estimators)
    for (std::size_t m : spec.m_train) rows.push_back(prediction_row(e, m));
  rows.push_back("Oracle");
  std::vector<std::string> cols;
  for (TruthKind k : spec.truths) cols.push_back(truth_column(k, spec.n));
  ReportTable table("prediction", "test CE", rows, cols);

  const Universe u(spec.n);
  const AssortmentSampler sampler(spec.sampler, u);
  const std::size_t m_max = *std::max_element(spec.m_train.begin(), spec.m_train.end());
  for (std::size_t c = 0; c < spec.truths.size(); ++c) {
    const std::uint64_t base = column_seed(spec.seed, spec.truths[c], spec.n);
    // results[t][r]: value, or nullopt for a failed fit
    std::vector<std::vector<std::optional<double>>> results(static_cast<std::size_t>(spec.trials));
    parallel_trials(spec.trials, spec.jobs, [&](int t) {
      const auto tt = static_cast<std::uint64_t>(t);
      auto truth = gen_instance(spec.truths[c], u, derive_seed(base, tt, 0));
      const ChoiceDataset full = gen_dataset(*truth, sampler, m_max, derive_seed(base, tt, 1));
      const ChoiceDataset val = gen_dataset(*truth, sampler, spec.m_val, derive_seed(base, tt, 2));
      const ChoiceDataset test = gen_dataset(*truth, sampler, spec.m_test, derive_seed(base, tt, 3));
      auto& out = results[static_cast<std::size_t>(t)];
      out.push_back(ce_loss(UniformModel(u), test));
      for (Estimator e : spec.estimators)
        for (std::size_t m : spec.m_train) {
          const ChoiceDataset tr = prefix(full, m);
          const std::uint64_t fs = derive_seed(base, tt, e == Estimator::kMccmEm ? 5 : 4);
          try {
            out.push_back(ce_loss(*fit_estimator(e, tr, &val, spec.fit, fs), test));
          } catch (const Error&) {
            out.push_back(std::nullopt);
          }
        }
      out.push_back(ce_loss(*truth, test));
    });
    for (std::size_t t = 0; t < results.size(); ++t)
      for (std::size_t r = 0; r < rows.size(); ++r) {
        ReportCell& cell = table.cell(r, c);
        if (results[t][r]) cell.values.push_back(*results[t][r]);
        else ++cell.failures;
      }
  }
  return table;
}

// ------------------------------------------------------------------ fixtures

FixtureSpec default_fixture_spec() {
  FixtureSpec s;
  s.fit.train.lr = 0.01;
  return s;
}

ReportTable FixtureResult::table() const {
  std::vector<std::string> rows;
  for (std::size_t c = 0; c < fixture.cases.size(); ++c)
    for (int i : fixture.cases[c].members()) rows.push_back(fixture.case_names[c] + ":" + fixture.labels[static_cast<std::size_t>(i)]);
  ReportTable t(fixture.name, "P(i|S)", rows, {"True", "GAsN", "MNL-MLE", "MCCM-EM"});
  std::size_t r = 0;
  for (std::size_t c = 0; c < fixture.cases.size(); ++c)
    for (int i : fixture.cases[c].members()) {
      const auto k = static_cast<std::size_t>(i);
      t.cell(r, 0).values.push_back(fixture.truth[c][k]);
      t.cell(r, 1).values.push_back(gasn[c][k]);
      t.cell(r, 2).values.push_back(mnl[c][k]);
      t.cell(r, 3).values.push_back(em[c][k]);
      ++r;
    }
  return t;
}

FixtureResult run_fixture_experiment(const Fixture& fixture, const FixtureSpec& spec) {
  const ChoiceDataset tr = fixture.sample(spec.m, derive_seed(spec.seed, 1));
  const ChoiceDataset va = fixture.sample(spec.m_val, derive_seed(spec.seed, 2));
  const NetSpec net = feature_free_spec(Arch::kGasn, fixture.universe, spec.fit.gasn_hidden, 1);
  std::optional<TrainResult> best;
  for (int r = 0; r < std::max(1, spec.restarts); ++r) {
    TrainConfig cfg = spec.fit.train;
    cfg.seed = derive_seed(spec.seed, 4, static_cast<std::uint64_t>(r));
    auto res = train(net, tr, &va, cfg);
    if (!best || res.best_val < best->best_val) best = std::move(res);
  }
  const NeuralChoiceModel nn(best->params);
  const MnlModel mnl = fit_mnl_mle(tr, spec.fit.mle).model;
  EmConfig ec = spec.fit.em;
  ec.seed = derive_seed(spec.seed, 5);
  const MccmModel em = fit_mccm_em(tr, ec).model;
  FixtureResult out{fixture, {}, {}, {}};
  for (const Assortment& s : fixture.cases) {
    out.gasn.push_back(nn.prob(s));
    out.mnl.push_back(mnl.prob(s));
    out.em.push_back(em.prob(s));
  }
  return out;
}

// -------------------------------------------------------------- optimization

RevenueSpec gen_revenue(const Universe& u, Rng& rng) {
  std::uniform_real_distribution<double> d(10.0, 50.0);
  RevenueSpec rev;
  rev.mu.assign(static_cast<std::size_t>(u.size()), 0.0);
  for (int i = 0; i < u.size(); ++i)
    if (!u.is_no_purchase(i)) rev.mu[static_cast<std::size_t>(i)] = d(rng);
  return rev;
}

CapacityConstraint gen_capacity(const Universe& u, Rng& rng) {
  std::uniform_real_distribution<double> d(10.0, 50.0);
  CapacityConstraint cap;
  cap.a.assign(static_cast<std::size_t>(u.size()), 0.0);
  double l1 = 0.0, linf = 0.0;
  for (int i = 0; i < u.size(); ++i)
    if (!u.is_no_purchase(i)) {
      const double a = d(rng);
      cap.a[static_cast<std::size_t>(i)] = a;
      l1 += a;
      linf = std::max(linf, a);
    }
  const double n = u.size();
  const double lo = std::max(l1 / n, linf);
  const double hi = std::max(4.0 * l1 / n, linf);
  cap.c = hi > lo ? std::uniform_real_distribution<double>(lo, hi)(rng) : lo;
  return cap;
}

OptResult truth_optimum(const ChoiceModel& truth, const RevenueSpec& rev, const CapacityConstraint* cap) {
  if (auto* mnl = dynamic_cast<const MnlModel*>(&truth)) {
    if (!cap) return revenue_ordered(*mnl, rev);
    return solve_assortment_milp(build_mnl_milp(*mnl, rev, cap), *mnl, rev, "mnl-milp");
  }
  if (auto* mc = dynamic_cast<const MccmModel*>(&truth); mc && !cap) return mccm_bellman_opt(*mc, rev);
  if (auto* np = dynamic_cast<const NpModel*>(&truth); np && truth.universe().size() > kBruteForceMaxN)
    return solve_assortment_milp(build_np_milp(*np, rev, cap), *np, rev, "np-milp");
  if (truth.universe().size() > kBruteForceMaxN)
    throw UnsupportedError("no exact optimizer for a " + truth.kind() + " truth of this size");
  return brute_force_opt(truth, rev, cap);
}

std::string to_string(OptEstimator e) {
  switch (e) {
    case OptEstimator::kMnl: return "MNL-MLE";
    case OptEstimator::kMccm: return "MCCM-EM";
    case OptEstimator::kNn1: return "NN(1)";
    case OptEstimator::kNn2: return "NN(2)";
  }
  return "?";
}

OptEstimator parse_opt_estimator(std::string_view name) {
  if (name == "mnl" || name == "mnl-mle") return OptEstimator::kMnl;
  if (name == "mccm" || name == "mccm-em") return OptEstimator::kMccm;
  if (name == "nn1") return OptEstimator::kNn1;
  if (name == "nn2") return OptEstimator::kNn2;
  throw ParseError("unknown optimization estimator '" + std::string(name) + "'", 0);
}

nlohmann::json OptExperimentSpec::to_json() const {
  std::vector<std::string> tr, es;
  for (TruthKind k : truths) tr.push_back(to_string(k));
  for (OptEstimator e : estimators) es.push_back(to_string(e));
  return {{"truths", tr},
          {"sizes", sizes},
          {"datasets", datasets},
          {"draws", draws},
          {"m_train", m_train},
          {"m_val", m_val},
          {"estimators", es},
          {"unconstrained", unconstrained},
          {"constrained", constrained},
          {"mip_time_limit", mip_time_limit},
          {"seed", seed},
          {"fit", fit.to_json()}};
}

namespace {

struct Fitted {
  std::optional<MnlModel> mnl;
  std::optional<MccmModel> mccm;
  std::optional<NetworkParams> nn1, nn2;
};

std::vector<std::string> opt_rows(const std::vector<OptEstimator>& es, bool constrained) {
  std::vector<std::string> rows;
  for (OptEstimator e : es) {
    if (!constrained) rows.push_back(to_string(e));
    else if (e == OptEstimator::kMnl) {
      rows.push_back("MNL-MLE/RO");
      rows.push_back("MNL-MLE/MIP");
    } else if (e == OptEstimator::kMccm) {
      rows.push_back("MCCM-EM/ADXOpt");
    } else {
      rows.push_back(to_string(e) + "/MIP");
    }
  }
  return rows;
}

}  // namespace

OptReport run_opt_experiment(const OptExperimentSpec& spec) {
  if (spec.datasets < 1 || spec.draws < 1) throw DimensionError("opt experiment needs datasets and draws");
  std::vector<std::string> cols;
  for (TruthKind k : spec.truths)
    for (int n : spec.sizes) cols.push_back(truth_column(k, n));
  const auto urows = opt_rows(spec.estimators, false);
  const auto crows = opt_rows(spec.estimators, true);
  OptReport rep{ReportTable("unconstrained", "opt ratio", spec.unconstrained ? urows : std::vector<std::string>{}, cols),
                ReportTable("constrained", "opt ratio", spec.constrained ? crows : std::vector<std::string>{}, cols), 0};
  std::atomic<int> timeouts{0};

  std::size_t c = 0;
  for (TruthKind kind : spec.truths)
    for (int n : spec.sizes) {
      const Universe u(n);
      const AssortmentSampler sampler(SamplerKind::kUniformSize, u);
      const std::uint64_t base = column_seed(spec.seed, kind, n);
      // per dataset, per draw, per row
      using Block = std::vector<std::vector<std::optional<double>>>;
      std::vector<Block> ures(static_cast<std::size_t>(spec.datasets)), cres(ures.size());
      parallel_trials(spec.datasets, spec.jobs, [&](int d) {
        const auto dd = static_cast<std::uint64_t>(d);
        auto truth = gen_instance(kind, u, derive_seed(base, dd, 0));
        const ChoiceDataset tr = gen_dataset(*truth, sampler, spec.m_train, derive_seed(base, dd, 1));
        const ChoiceDataset va = gen_dataset(*truth, sampler, spec.m_val, derive_seed(base, dd, 2));
        Fitted f;
        for (OptEstimator e : spec.estimators) {
          try {
            switch (e) {
              case OptEstimator::kMnl: f.mnl = fit_mnl_mle(tr, spec.fit.mle).model; break;
              case OptEstimator::kMccm: {
                EmConfig ec = spec.fit.em;
                ec.seed = derive_seed(base, dd, 5);
                f.mccm = fit_mccm_em(tr, ec).model;
                break;
              }
              case OptEstimator::kNn1:
              case OptEstimator::kNn2: {
                TrainConfig tc = spec.fit.train;
                tc.seed = derive_seed(base, dd, 4);
                std::vector<int> hidden;
                if (e == OptEstimator::kNn2) hidden = {n};
                auto r = train(feature_free_spec(Arch::kGasn, u, hidden, 1), tr, &va, tc);
                (e == OptEstimator::kNn1 ? f.nn1 : f.nn2) = std::move(r.params);
                break;
              }
            }
          } catch (const Error&) {
            // leaves the model unset; its rows count failures
          }
        }
        const NnMipOptions nopt{spec.mip_time_limit, NnMipOptions{}.node_limit};
        auto nn_solve = [&](const NetworkParams& p, const RevenueSpec& rev, const CapacityConstraint* cap) {
          OptResult r = solve_nn_mip(build_nn_mip(p, rev, cap), nopt);
          if (!r.exact) ++timeouts;
          return r.assortment;
        };
        for (int r = 0; r < spec.draws; ++r) {
          Rng rng(derive_seed(base, dd, 100 + static_cast<std::uint64_t>(r)));
          const RevenueSpec rev = gen_revenue(u, rng);
          const CapacityConstraint cap = gen_capacity(u, rng);
          for (int pass = 0; pass < 2; ++pass) {
            const bool constrained = pass == 1;
            if (constrained ? !spec.constrained : !spec.unconstrained) continue;
            const CapacityConstraint* cp = constrained ? &cap : nullptr;
            const double best = truth_optimum(*truth, rev, cp).value;
            std::vector<std::optional<double>> row;
            auto ratio = [&](const std::function<Assortment()>& pick) {
              if (best <= 0.0) {
                row.push_back(std::nullopt);
                return;
              }
              try {
                row.push_back(expected_revenue(*truth, pick(), rev) / best);
              } catch (const Error&) {
                row.push_back(std::nullopt);
              }
            };
            auto need = [](const auto& opt) -> const auto& {
              if (!opt) throw Error("estimator failed");
              return *opt;
            };
            for (OptEstimator e : spec.estimators) {
              switch (e) {
                case OptEstimator::kMnl:
                  if (!constrained) {
                    ratio([&] { return revenue_ordered(need(f.mnl), rev).assortment; });
                  } else {
                    ratio([&] { return revenue_ordered(need(f.mnl), rev, cp).assortment; });
                    ratio([&] {
                      const MnlModel& m = need(f.mnl);
                      return solve_assortment_milp(build_mnl_milp(m, rev, cp), m, rev, "mnl-milp").assortment;
                    });
                  }
                  break;
                case OptEstimator::kMccm:
                  if (!constrained) ratio([&] { return mccm_bellman_opt(need(f.mccm), rev).assortment; });
                  else ratio([&] { return adxopt(need(f.mccm), rev, cp, 5).assortment; });
                  break;
                case OptEstimator::kNn1:
                  ratio([&] { return nn_solve(need(f.nn1), rev, cp); });
                  break;
                case OptEstimator::kNn2:
                  ratio([&] { return nn_solve(need(f.nn2), rev, cp); });
                  break;
              }
            }
            (constrained ? cres : ures)[static_cast<std::size_t>(d)].push_back(std::move(row));
          }
        }
      });
      auto fold = [&](ReportTable& t, const std::vector<Block>& res) {
        for (const Block& b : res)
          for (const auto& row : b)
            for (std::size_t r = 0; r < row.size(); ++r) {
              if (row[r]) t.cell(r, c).values.push_back(*row[r]);
              else ++t.cell(r, c).failures;
            }
      };
      fold(rep.unconstrained, ures);
      fold(rep.constrained, cres);
      ++c;
    }
  rep.timeouts = timeouts;
  return rep;
}

// -------------------------------------------------------- distribution shift

nlohmann::json ShiftSpec::to_json() const {
  return {{"m_train", m_train}, {"m_val", m_val}, {"m_test", m_test}, {"seed", seed}, {"fit", fit.to_json()}};
}

MccmModel gen_flat_mccm(const Universe& u, Rng& rng) { return gen_mccm(u, MccmPreset{1.0, 1}, rng, false); }

std::vector<SamplerKind> shift_samplers() {
  return {SamplerKind::kUniformSize, SamplerKind::kBernoulliHalf, SamplerKind::kHalfBlocked,
          SamplerKind::kWindowThird};
}

std::string shift_label(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kUniformSize: return "D-1";
    case SamplerKind::kBernoulliHalf: return "D-2";
    case SamplerKind::kHalfBlocked: return "D-3";
    case SamplerKind::kWindowThird: return "D-4";
    case SamplerKind::kFixedSize: return "fixed";
  }
  return "?";
}

ShiftReport distribution_shift_experiment(const MccmModel& truth, const ShiftSpec& spec) {
  const Universe u = truth.universe();
  const auto kinds = shift_samplers();
  const std::size_t nk = kinds.size();
  std::vector<std::string> cols, rows;
  for (SamplerKind k : kinds) cols.push_back(shift_label(k));
  rows = cols;
  rows.push_back("Mix");
  ShiftReport rep{ReportTable("shift", "test CE", rows, cols), ReportTable("shift oracle", "test CE", {"Oracle"}, cols)};

  std::vector<ChoiceDataset> tests;
  for (std::size_t k = 0; k < nk; ++k) {
    tests.push_back(gen_dataset(truth, AssortmentSampler(kinds[k], u), spec.m_test, derive_seed(spec.seed, 3, k)));
    rep.oracle.cell(0, k).values.push_back(ce_loss(truth, tests.back()));
  }
  std::vector<std::vector<double>> res(rows.size());
  parallel_trials(static_cast<int>(rows.size()), spec.jobs, [&](int r) {
    const auto rr = static_cast<std::uint64_t>(r);
    ChoiceDataset tr, va;
    if (static_cast<std::size_t>(r) < nk) {
      const AssortmentSampler s(kinds[rr], u);
      tr = gen_dataset(truth, s, spec.m_train, derive_seed(spec.seed, 1, rr));
      va = gen_dataset(truth, s, spec.m_val, derive_seed(spec.seed, 2, rr));
    } else {
      std::vector<ChoiceDataset> tp, vp;
      for (std::size_t k = 0; k < nk; ++k) {
        const AssortmentSampler s(kinds[k], u);
        tp.push_back(gen_dataset(truth, s, spec.m_train / nk, derive_seed(spec.seed, 1, 10 + k)));
        vp.push_back(gen_dataset(truth, s, spec.m_val / nk, derive_seed(spec.seed, 2, 10 + k)));
      }
      std::vector<const ChoiceDataset*> tpp, vpp;
      for (std::size_t k = 0; k < nk; ++k) {
        tpp.push_back(&tp[k]);
        vpp.push_back(&vp[k]);
      }
      tr = concat(tpp);
      va = concat(vpp);
    }
    const ModelPtr m = fit_estimator(Estimator::kGasn, tr, &va, spec.fit, derive_seed(spec.seed, 4, rr));
    for (std::size_t k = 0; k < nk; ++k) res[rr].push_back(ce_loss(*m, tests[k]));
  });
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t k = 0; k < nk; ++k) rep.grid.cell(r, k).values.push_back(res[r][k]);
  return rep;
}

ShiftReport distribution_shift_experiment(int n, const ShiftSpec& spec) {
  Rng rng(derive_seed(column_seed(spec.seed, TruthKind::kMccm, n), 0, 0));
  return distribution_shift_experiment(gen_flat_mccm(Universe(n), rng), spec);
}

// ------------------------------------------------------------- EM vs. sizes

nlohmann::json EmSizeSpec::to_json() const {
  return {{"n", n},
          {"m", m},
          {"sizes", sizes},
          {"trials", trials},
          {"seed", seed},
          {"em", {{"max_iters", em.max_iters}, {"threshold", em.threshold}, {"restarts", em.restarts}}}};
}

namespace {

// Mean |delta| over lambda and over the product rows of rho. The
// no-purchase row never affects a choice probability.
std::pair<double, double> mccm_errors(const MccmModel& fit, const MccmModel& truth) {
  const Universe& u = truth.universe();
  if (!(fit.universe() == u)) throw DimensionError("MCCM error needs matching universes");
  const double el = (fit.lambda() - truth.lambda()).cwiseAbs().sum();
  const int rows = u.num_products();
  const double er = (fit.rho().topRows(rows) - truth.rho().topRows(rows)).cwiseAbs().sum();
  return {el, er};
}

}  // namespace

double mccm_parameter_error(const MccmModel& fit, const MccmModel& truth) {
  const auto [el, er] = mccm_errors(fit, truth);
  const double n = truth.universe().size();
  return (el + er) / (n + truth.universe().num_products() * n);
}

ReportTable em_assortment_size_experiment(const EmSizeSpec& spec) {
  std::vector<std::string> rows;
  for (int k : spec.sizes) rows.push_back("size=" + std::to_string(k));
  ReportTable t("em-size", "parameter MAE", rows, {"error", "lambda", "rho"});
  const Universe u(spec.n);
  std::vector<std::vector<std::array<double, 3>>> res(static_cast<std::size_t>(spec.trials));
  parallel_trials(spec.trials, spec.jobs, [&](int tr) {
    const auto tt = static_cast<std::uint64_t>(tr);
    auto truth_ptr = gen_instance(TruthKind::kMccm, u, derive_seed(spec.seed, tt, 0));
    const MccmModel& truth = as_mccm(*truth_ptr);
    for (int k : spec.sizes) {
      const AssortmentSampler s(SamplerKind::kFixedSize, u, k);
      const ChoiceDataset d = gen_dataset(truth, s, spec.m, derive_seed(spec.seed, tt, 100 + static_cast<std::uint64_t>(k)));
      EmConfig ec = spec.em;
      ec.seed = derive_seed(spec.seed, tt, 5);
      const MccmModel fit = fit_mccm_em(d, ec).model;
      const auto [el, er] = mccm_errors(fit, truth);
      const double n = spec.n;
      const double rho_entries = u.num_products() * n;
      res[static_cast<std::size_t>(tr)].push_back({(el + er) / (n + rho_entries), el / n, er / rho_entries});
    }
  });
  for (const auto& trial : res)
    for (std::size_t r = 0; r < trial.size(); ++r)
      for (std::size_t c = 0; c < 3; ++c) t.cell(r, c).values.push_back(trial[r][c]);
  return t;
}

// ---------------------------------------------------------------- warm start

nlohmann::json WarmStartSpec::to_json() const {
  return {{"old_products", old_products}, {"new_products", new_products}, {"m_old", m_old},
          {"m_new", m_new},               {"m_val", m_val},               {"arch", to_string(arch)},
          {"hidden", hidden},             {"seeds", seeds},               {"seed", seed},
          {"train", train_json(train)}};
}

MccmModel shrink_mccm(const MccmModel& model, int keep_products) {
  const Universe& u = model.universe();
  if (!u.has_no_purchase() || keep_products < 1 || keep_products > u.num_products())
    throw DimensionError("shrink needs a no-purchase option and 1..n-1 kept products");
  const int old_np = u.no_purchase();
  const int k = keep_products;
  const Vec& l = model.lambda();
  const Mat& rho = model.rho();
  Vec lam(k + 1);
  Mat r = Mat::Zero(k + 1, k + 1);
  // old index -> new index; dropped products and no-purchase map to k
  auto to = [&](int i) { return i < k ? i : k; };
  lam.setZero();
  for (int i = 0; i <= old_np; ++i) lam(to(i)) += l(i);
  for (int i = 0; i <= old_np; ++i) {
    if (i >= k && i != old_np) continue;
    for (int j = 0; j <= old_np; ++j) r(to(i), to(j)) += rho(i, j);
  }
  return MccmModel(Universe(k + 1), lam, r);
}

WarmStartReport warm_start_experiment(const WarmStartSpec& spec) {
  const int n_small = spec.old_products + 1;
  const int n_big = spec.old_products + spec.new_products + 1;
  const Universe us(n_small), ub(n_big);
  std::vector<TrainResult> warm(static_cast<std::size_t>(spec.seeds)), cold(warm.size());
  parallel_trials(spec.seeds, spec.jobs, [&](int s) {
    const auto ss = static_cast<std::uint64_t>(s);
    Rng rng(derive_seed(spec.seed, ss, 0));
    const MccmModel big = gen_flat_mccm(ub, rng);
    const MccmModel small = shrink_mccm(big, spec.old_products);
    const AssortmentSampler ss_small(SamplerKind::kUniformSize, us), ss_big(SamplerKind::kUniformSize, ub);
    const ChoiceDataset tr_old = gen_dataset(small, ss_small, spec.m_old, derive_seed(spec.seed, ss, 1));
    const ChoiceDataset va_old = gen_dataset(small, ss_small, spec.m_val, derive_seed(spec.seed, ss, 2));
    TrainConfig tc = spec.train;
    tc.seed = derive_seed(spec.seed, ss, 4);
    const TrainResult old = train(feature_free_spec(spec.arch, us, spec.hidden, 1), tr_old, &va_old, tc);

    const ChoiceDataset tr_new = gen_dataset(big, ss_big, spec.m_new, derive_seed(spec.seed, ss, 3));
    const ChoiceDataset va_new = gen_dataset(big, ss_big, spec.m_val, derive_seed(spec.seed, ss, 5));
    tc.seed = derive_seed(spec.seed, ss, 7);
    const NetworkParams init = warm_start_augment(old.params, n_big, derive_seed(spec.seed, ss, 6));
    warm[ss] = train(init, tr_new, &va_new, tc);
    cold[ss] = train(feature_free_spec(spec.arch, ub, spec.hidden, 1), tr_new, &va_new, tc);
  });
  const std::size_t epochs = warm.empty() ? 0 : warm[0].log.size();
  std::vector<std::string> rows;
  for (std::size_t e = 0; e < epochs; ++e) rows.push_back("epoch " + std::to_string(e));
  WarmStartReport rep{ReportTable("warm-start", "val CE", rows, {"warm", "cold"}), 0, spec.seeds};
  for (std::size_t s = 0; s < warm.size(); ++s) {
    bool dom = true;
    for (std::size_t e = 0; e < epochs; ++e) {
      const double w = warm[s].log[e].val_ce, c = cold[s].log[e].val_ce;
      rep.curves.cell(e, 0).values.push_back(w);
      rep.curves.cell(e, 1).values.push_back(c);
      if (!(w <= c)) dom = false;
    }
    if (dom) ++rep.warm_dominates;
  }
  return rep;
}

// ------------------------------------------------------------- depth/width

nlohmann::json SweepSpec::to_json() const {
  return {{"n", n},         {"d", d},         {"m_train", m_train}, {"m_val", m_val},
          {"m_test", m_test}, {"depths", depths}, {"widths", widths},   {"trials", trials},
          {"seed", seed},   {"train", train_json(train)}};
}

ReportTable depth_width_sweep(const SweepSpec& spec) {
  std::vector<std::string> rows, cols;
  for (int l : spec.depths) rows.push_back("depth=" + std::to_string(l));
  for (int w : spec.widths) cols.push_back("width=" + std::to_string(w) + "x");
  ReportTable t("depth-width", "test CE", rows, cols);
  const Universe u(spec.n);
  const AssortmentSampler sampler(SamplerKind::kUniformSize, u);
  std::vector<std::vector<double>> res(static_cast<std::size_t>(spec.trials));
  parallel_trials(spec.trials, spec.jobs, [&](int tr) {
    const auto tt = static_cast<std::uint64_t>(tr);
    Rng rng(derive_seed(spec.seed, tt, 0));
    const FeatureMccmModel truth = gen_feature_mccm(u, spec.d, rng);
    const Mat x = gen_product_features(spec.n, spec.d, rng);
    auto strip = [](ChoiceDataset d) {
      d.product_features.reset();
      return d;
    };
    // The features are static, so the truth acts as one fixed chain; the
    // feature-free network sees only the assortments.
    const ChoiceDataset train_d = gen_dataset(truth, sampler, spec.m_train, derive_seed(spec.seed, tt, 1), x);
    const ChoiceDataset val_d = gen_dataset(truth, sampler, spec.m_val, derive_seed(spec.seed, tt, 2), x);
    const ChoiceDataset test_d = gen_dataset(truth, sampler, spec.m_test, derive_seed(spec.seed, tt, 3), x);
    const ChoiceDataset tr_s = strip(train_d), va_s = strip(val_d), te_s = strip(test_d);
    for (int l : spec.depths)
      for (int w : spec.widths) {
        std::vector<int> hidden(static_cast<std::size_t>(std::max(0, l - 1)), w * spec.n);
        TrainConfig tc = spec.train;
        tc.seed = derive_seed(spec.seed, tt, 4);
        auto r = train(feature_free_spec(Arch::kGasn, u, hidden, 1), tr_s, &va_s, tc);
        res[tt].push_back(ce_loss(NeuralChoiceModel(std::move(r.params)), te_s));
      }
  });
  for (const auto& trial : res)
    for (std::size_t k = 0; k < trial.size(); ++k)
      t.cell(k / spec.widths.size(), k % spec.widths.size()).values.push_back(trial[k]);
  return t;
}

}  // namespace choicenet
