#include "reproduce.hpp"

#include <iostream>

#include "choicenet/core/error.hpp"
#include "choicenet/eval/experiments.hpp"
#include "choicenet/eval/report.hpp"

namespace choicenet::cli {
namespace {

// Concatenates the columns of tables that share their rows.
ReportTable join_columns(const std::string& title, const std::vector<ReportTable>& parts) {
  std::vector<std::string> cols;
  for (const ReportTable& t : parts) cols.insert(cols.end(), t.cols().begin(), t.cols().end());
  ReportTable out(title, parts.front().metric(), parts.front().rows(), cols);
  std::size_t c0 = 0;
  for (const ReportTable& t : parts) {
    for (std::size_t r = 0; r < t.rows().size(); ++r)
      for (std::size_t c = 0; c < t.cols().size(); ++c) out.cell(r, c0 + c) = t.cell(r, c);
    c0 += t.cols().size();
  }
  return out;
}

const std::vector<TruthKind> kAllTruths{TruthKind::kMnl, TruthKind::kMccm, TruthKind::kNp, TruthKind::kMmnl};

std::vector<std::string> run_t5(const ReproduceOptions& o, Manifest& man) {
  ExperimentSpec spec;
  spec.truths = kAllTruths;
  spec.m_train = {1000, 5000, 100000};
  spec.estimators = {Estimator::kMnlMle, Estimator::kMccmEm, Estimator::kGasn, Estimator::kRasn};
  spec.trials = o.trials.value_or(o.full ? 10 : 5);
  spec.seed = o.seed;
  spec.jobs = o.jobs;
  const std::vector<int> sizes = o.full ? std::vector<int>{20, 50} : std::vector<int>{20};
  std::vector<ReportTable> parts;
  nlohmann::json specs = nlohmann::json::array();
  for (int n : sizes) {
    spec.n = n;
    if (o.verbose) std::cerr << "t5: n=" << n << ", " << spec.trials << " trials\n";
    parts.push_back(run_prediction_experiment(spec));
    specs.push_back(spec.to_json());
  }
  man.spec = {{"table", "t5"}, {"experiments", specs}};
  const ReportTable t = join_columns("t5 prediction", parts);
  return write_report(o.out_dir, "t5", {&t}, man);
}

std::vector<std::string> run_opt(const ReproduceOptions& o, Manifest& man, bool constrained) {
  OptExperimentSpec spec;
  spec.truths = kAllTruths;
  spec.sizes = o.full ? std::vector<int>{20, 40, 60} : std::vector<int>{10, 20};
  spec.datasets = 5;
  spec.draws = o.trials.value_or(o.full ? 20 : 4);
  spec.unconstrained = !constrained;
  spec.constrained = constrained;
  spec.mip_time_limit = o.time_limit;
  spec.seed = o.seed;
  spec.jobs = o.jobs;
  if (o.verbose) std::cerr << (constrained ? "t9" : "t8") << ": " << spec.datasets << " datasets x " << spec.draws << " draws\n";
  const OptReport r = run_opt_experiment(spec);
  const std::string id = constrained ? "t9" : "t8";
  man.spec = {{"table", id}, {"experiment", spec.to_json()}, {"timeouts", r.timeouts}};
  return write_report(o.out_dir, id, {constrained ? &r.constrained : &r.unconstrained}, man);
}

std::vector<std::string> run_t12(const ReproduceOptions& o, Manifest& man) {
  ShiftSpec spec;
  spec.m_train = o.full ? 100000 : 20000;
  spec.seed = o.seed;
  spec.jobs = o.jobs;
  const int n = 30;
  if (o.verbose) std::cerr << "t12: n=" << n << ", m=" << spec.m_train << "\n";
  const ShiftReport r = distribution_shift_experiment(n, spec);
  man.spec = {{"table", "t12"}, {"n", n}, {"experiment", spec.to_json()}};
  return write_report(o.out_dir, "t12", {&r.grid, &r.oracle}, man);
}

std::vector<std::string> run_fig5(const ReproduceOptions& o, Manifest& man) {
  EmSizeSpec spec;
  spec.trials = o.trials.value_or(10);
  spec.seed = o.seed;
  spec.jobs = o.jobs;
  if (o.verbose) std::cerr << "fig5: " << spec.trials << " trials\n";
  const ReportTable t = em_assortment_size_experiment(spec);
  man.spec = {{"table", "fig5"}, {"experiment", spec.to_json()}};
  return write_report(o.out_dir, "fig5", {&t}, man);
}

std::vector<std::string> run_fig6(const ReproduceOptions& o, Manifest& man) {
  WarmStartSpec spec;
  spec.seeds = o.trials.value_or(10);
  spec.seed = o.seed;
  spec.jobs = o.jobs;
  const std::vector<std::size_t> sizes = o.full ? std::vector<std::size_t>{2000, 100000} : std::vector<std::size_t>{2000};
  std::vector<ReportTable> curves;
  nlohmann::json specs = nlohmann::json::array(), dominance = nlohmann::json::array();
  for (std::size_t m : sizes) {
    spec.m_new = m;
    if (o.verbose) std::cerr << "fig6: m=" << m << ", " << spec.seeds << " seeds\n";
    WarmStartReport r = warm_start_experiment(spec);
    std::vector<std::string> cols{"warm m=" + std::to_string(m), "cold m=" + std::to_string(m)};
    ReportTable t(r.curves.title(), r.curves.metric(), r.curves.rows(), cols);
    for (std::size_t e = 0; e < t.rows().size(); ++e)
      for (std::size_t c = 0; c < 2; ++c) t.cell(e, c) = r.curves.cell(e, c);
    curves.push_back(std::move(t));
    specs.push_back(spec.to_json());
    dominance.push_back({{"m_new", m}, {"warm_dominates", r.warm_dominates}, {"seeds", r.seeds}});
  }
  man.spec = {{"table", "fig6"}, {"experiments", specs}, {"dominance", dominance}};
  const ReportTable t = join_columns("fig6 warm start", curves);
  return write_report(o.out_dir, "fig6", {&t}, man);
}

}  // namespace

std::vector<std::string> reproduce(const ReproduceOptions& o) {
  Manifest man;
  man.command = o.command;
  if (o.table == "t5") return run_t5(o, man);
  if (o.table == "t8") return run_opt(o, man, false);
  if (o.table == "t9") return run_opt(o, man, true);
  if (o.table == "t12") return run_t12(o, man);
  if (o.table == "fig5") return run_fig5(o, man);
  if (o.table == "fig6") return run_fig6(o, man);
  throw ParseError("unknown table '" + o.table + "' (expected t5, t8, t9, t12, fig5 or fig6)", 0);
}

}  // namespace choicenet::cli
