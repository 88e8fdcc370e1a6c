// choicenet command-line front end.
//
// Exit codes: 0 success, 2 usage/config/input error, 3 numeric
// non-convergence, 4 solver stopped at a limit (incumbent still written),
// 1 anything else.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "choicenet/core/csv_io.hpp"
#include "choicenet/core/error.hpp"
#include "choicenet/eval/diagnostics.hpp"
#include "choicenet/eval/experiments.hpp"
#include "choicenet/eval/meta.hpp"
#include "choicenet/eval/model_store.hpp"
#include "choicenet/eval/report.hpp"
#include "choicenet/neural/network_json.hpp"
#include "choicenet/opt/lp_format.hpp"
#include "choicenet/opt/nn_mip.hpp"
#include "choicenet/synth/model_json.hpp"
#include "reproduce.hpp"

using namespace choicenet;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitLimit = 4;

std::string default_dir() {
  const char* env = std::getenv("CHOICENET_OUT");
  return env && *env ? env : ".";
}

std::string in_default_dir(const std::string& path, const std::string& fallback) {
  if (!path.empty()) return path;
  return (fs::path(default_dir()) / fallback).string();
}

// "<dir>/<stem><suffix>" next to `path`.
std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

RevenueSpec revenue_from_json(const nlohmann::json& j, const Universe& u) {
  RevenueSpec rev;
  try {
    rev.mu = j.at("mu").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("revenue file: ") + e.what());
  }
  check_revenue(u, rev);
  return rev;
}

CapacityConstraint capacity_from_json(const nlohmann::json& j, const Universe& u) {
  CapacityConstraint cap;
  try {
    cap.a = j.at("a").get<std::vector<double>>();
    cap.c = j.at("c").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("capacity file: ") + e.what());
  }
  check_capacity(u, cap);
  return cap;
}

// ------------------------------------------------------------------ generate

struct GenerateArgs {
  std::string truth;
  int n = 0;
  std::size_t m = 0;
  std::string sampler = "uniform-size";
  int k = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string truth_out;
};

int cmd_generate(const GenerateArgs& a, const std::string& command) {
  const Universe u(a.n);
  const TruthKind kind = parse_truth_kind(a.truth);
  auto truth = gen_instance(kind, u, derive_seed(a.seed, 0));
  const AssortmentSampler sampler(parse_sampler_kind(a.sampler), u, a.k);
  const ChoiceDataset d = gen_dataset(*truth, sampler, a.m, derive_seed(a.seed, 1));
  require_valid(d);
  const std::string out = in_default_dir(a.out, "data.csv");
  const std::string truth_out = a.truth_out.empty() ? sibling(out, ".truth.json") : a.truth_out;
  std::ostringstream csv;
  write_transactions(csv, d);
  write_file_atomic(out, csv.str());
  write_file_atomic(truth_out, model_to_json(*truth).dump(2) + "\n");
  Manifest man;
  man.command = command;
  man.spec = {{"truth", a.truth}, {"n", a.n}, {"m", a.m}, {"sampler", a.sampler}, {"k", a.k}, {"seed", a.seed}};
  man.outputs = {out, truth_out};
  write_manifest(sibling(out, ".manifest.json"), man);
  std::cout << out << "\n" << truth_out << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------------- fit

struct FitArgs {
  std::string data;
  std::string val;
  std::string estimator;
  std::vector<int> hidden;
  int blocks = 1;
  int epochs = 100;
  int batch = 100;
  double lr = 0.0005;
  std::optional<std::uint64_t> seed;
  int em_max_iters = 1000;
  double em_threshold = 0.01;
  int restarts = 1;
  std::string out;
};

int cmd_fit(const FitArgs& a, const std::string& command) {
  const Estimator e = parse_estimator(a.estimator);
  if (e != Estimator::kMnlMle && !a.seed) throw ParseError("--seed is required for " + a.estimator);
  const std::uint64_t seed = a.seed.value_or(0);
  const ChoiceDataset train_d = read_transactions_file(a.data);
  if (train_d.empty()) throw DatasetError(a.data + " has no transactions");
  std::optional<ChoiceDataset> val_d;
  if (!a.val.empty()) val_d = read_transactions_file(a.val);
  const ChoiceDataset* val = val_d ? &*val_d : nullptr;
  const std::string out = in_default_dir(a.out, "model.json");
  const std::string log_path = sibling(out, ".log.csv");
  std::ostringstream log;
  bool converged = true;
  std::unique_ptr<ChoiceModel> model;
  nlohmann::json summary{{"estimator", to_string(e)}};

  switch (e) {
    case Estimator::kMnlMle: {
      MnlFit f = fit_mnl_mle(train_d);
      converged = f.converged && !f.diverged;
      log << "iterations,grad_norm,loglik,converged,diverged\n"
          << f.iterations << ',' << format_double(f.grad_norm) << ',' << format_double(f.loglik) << ','
          << f.converged << ',' << f.diverged << '\n';
      for (const auto& w : f.warnings) std::cerr << "warning: " << w << "\n";
      summary["iterations"] = f.iterations;
      model = std::make_unique<MnlModel>(std::move(f.model));
      break;
    }
    case Estimator::kMccmEm: {
      EmConfig c;
      c.max_iters = a.em_max_iters;
      c.threshold = a.em_threshold;
      c.restarts = a.restarts;
      c.seed = seed;
      EmFit f = fit_mccm_em(train_d, c);
      converged = f.converged;
      log << "iteration,loglik\n";
      for (std::size_t k = 0; k < f.loglik.size(); ++k) log << k << ',' << format_double(f.loglik[k]) << '\n';
      summary["iterations"] = f.iterations;
      model = std::make_unique<MccmModel>(std::move(f.model));
      break;
    }
    case Estimator::kGasn:
    case Estimator::kRasn: {
      NetSpec spec;
      spec.arch = e == Estimator::kGasn ? Arch::kGasn : Arch::kRasn;
      spec.n = train_d.universe.size();
      spec.has_no_purchase = train_d.universe.has_no_purchase();
      spec.hidden = a.hidden;
      spec.blocks = a.blocks;
      TrainConfig t;
      t.epochs = a.epochs;
      t.batch = a.batch;
      t.lr = a.lr;
      t.seed = seed;
      try {
        TrainResult r = train(spec, train_d, val, t);
        write_train_log(log, r.log);
        summary["best_epoch"] = r.best_epoch;
        if (val) summary["best_val_ce"] = r.best_val;
        model = std::make_unique<NeuralChoiceModel>(std::move(r.params));
      } catch (const TrainingDiverged& err) {
        std::ostringstream partial;
        write_train_log(partial, err.log());
        write_file_atomic(log_path, partial.str());
        std::cerr << "error: " << err.what() << "\n";
        return kExitNoConvergence;
      }
      break;
    }
  }
  save_model(*model, out);
  write_file_atomic(log_path, log.str());
  summary["train_ce"] = ce_loss(*model, train_d);
  if (val) summary["val_ce"] = ce_loss(*model, *val);
  summary["converged"] = converged;
  Manifest man;
  man.command = command;
  man.spec = {{"estimator", a.estimator}, {"hidden", a.hidden}, {"blocks", a.blocks}, {"epochs", a.epochs},
              {"batch", a.batch},         {"lr", a.lr},         {"seed", seed},       {"em_max_iters", a.em_max_iters},
              {"em_threshold", a.em_threshold}, {"restarts", a.restarts}};
  man.inputs = {a.data};
  if (!a.val.empty()) man.inputs.push_back(a.val);
  man.outputs = {out, log_path};
  write_manifest(sibling(out, ".manifest.json"), man);
  std::cout << summary.dump(2) << "\n";
  if (!converged) {
    std::cerr << "warning: " << to_string(e) << " did not converge\n";
    return kExitNoConvergence;
  }
  return kExitOk;
}

// ------------------------------------------------------------------ optimize

struct OptimizeArgs {
  std::string model;
  std::string method;
  std::string revenue;
  std::optional<std::uint64_t> revenue_seed;
  std::string capacity;
  std::optional<std::uint64_t> capacity_seed;
  int removal_limit = 5;
  double time_limit = 300.0;
  std::string export_lp;
  std::optional<double> dinkelbach_t;
  std::string out;
};

int cmd_optimize(const OptimizeArgs& a) {
  const ModelPtr model = load_model(a.model);
  const Universe& u = model->universe();
  RevenueSpec rev;
  if (!a.revenue.empty()) rev = revenue_from_json(read_json(a.revenue), u);
  else if (a.revenue_seed) {
    Rng rng(*a.revenue_seed);
    rev = gen_revenue(u, rng);
  } else {
    throw ParseError("one of --revenue or --revenue-seed is required");
  }
  std::optional<CapacityConstraint> cap;
  if (!a.capacity.empty()) cap = capacity_from_json(read_json(a.capacity), u);
  else if (a.capacity_seed) {
    Rng rng(*a.capacity_seed);
    cap = gen_capacity(u, rng);
  }
  const CapacityConstraint* cp = cap ? &*cap : nullptr;

  auto need = [&](auto* p, const char* what) {
    if (!p) throw UnsupportedError("--method " + a.method + " needs " + what + " model, got " + model->kind());
    return p;
  };
  auto* mnl = dynamic_cast<const MnlModel*>(model.get());
  auto* mccm = dynamic_cast<const MccmModel*>(model.get());
  auto* np = dynamic_cast<const NpModel*>(model.get());
  auto* net = dynamic_cast<const NeuralChoiceModel*>(model.get());

  std::optional<MipInstance> mip;
  if (a.method == "mnl-milp") mip = build_mnl_milp(*need(mnl, "an mnl"), rev, cp);
  else if (a.method == "np-milp") mip = build_np_milp(*need(np, "an np"), rev, cp);
  else if (a.method == "nn-mip") mip = build_nn_mip(need(net, "a network")->params(), rev, cp);
  if (!a.export_lp.empty()) {
    if (!mip) throw UnsupportedError("--export-lp needs a MIP method (mnl-milp, np-milp, nn-mip)");
    if (mip->ratio && !a.dinkelbach_t) throw ParseError("nn-mip has a ratio objective; pass --dinkelbach-t to export it");
    std::ostringstream s;
    write_lp(s, *mip, a.dinkelbach_t);
    write_file_atomic(a.export_lp, s.str());
    std::cout << a.export_lp << "\n";
    return kExitOk;
  }

  OptResult r;
  if (a.method == "brute") r = brute_force_opt(*model, rev, cp);
  else if (a.method == "ro") r = revenue_ordered(*model, rev, cp);
  else if (a.method == "adxopt") r = adxopt(*model, rev, cp, a.removal_limit);
  else if (a.method == "bellman") r = mccm_bellman_opt(*need(mccm, "an mccm"), rev, cp);
  else if (a.method == "mnl-milp" || a.method == "np-milp")
    r = solve_assortment_milp(*mip, *model, rev, a.method, MilpOptions{a.time_limit, MilpOptions{}.node_limit, 1e-6});
  else if (a.method == "nn-mip") {
    r = solve_nn_mip(*mip, NnMipOptions{a.time_limit, NnMipOptions{}.node_limit});
    r.value = expected_revenue(*model, r.assortment, rev);
  } else {
    throw ParseError("unknown method '" + a.method + "'");
  }
  nlohmann::json j = opt_result_to_json(r);
  j["constrained"] = cp != nullptr;
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) std::cout << text;
  else write_file_atomic(a.out, text);
  const bool limited = (mip.has_value()) && !r.exact;
  if (limited) std::cerr << "warning: solver stopped at a limit; the incumbent is reported\n";
  return limited ? kExitLimit : kExitOk;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateArgs {
  std::string model;
  std::string data;
  std::string truth;
  int bins = 25;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const ModelPtr model = load_model(a.model);
  const ChoiceDataset d = read_transactions_file(a.data);
  if (d.empty()) throw DatasetError(a.data + " has no transactions");
  if (!(d.universe == model->universe())) throw DimensionError("model and data universes differ");
  nlohmann::json j{{"model", model->kind()},
                   {"samples", d.size()},
                   {"ce", ce_loss(*model, d)},
                   {"uniform_ce", ce_loss(UniformModel(d.universe), d)},
                   {"ace", ace_calibration(*model, d, a.bins)},
                   {"bins", a.bins},
                   {"expected_entropy", expected_entropy(*model, d)}};
  if (!a.truth.empty()) j["oracle_ce"] = ce_loss(*load_model(a.truth), d);
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) std::cout << text;
  else write_file_atomic(a.out, text);
  return kExitOk;
}

// ---------------------------------------------------------------------- meta

struct MetaArgs {
  std::string train;
  std::string val;
  std::vector<std::string> candidates{"gasn", "mnl-mle", "mccm-em"};
  std::vector<int> hidden;
  int epochs = 100;
  double lr = 0.0005;
  std::size_t m_prime = 100000;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_meta(const MetaArgs& a, const std::string& command) {
  if (!a.seed) throw ParseError("--seed is required for meta");
  const ChoiceDataset tr = read_transactions_file(a.train);
  const ChoiceDataset va = read_transactions_file(a.val);
  if (tr.empty() || va.empty()) throw DatasetError("meta needs nonempty training and validation data");
  FitSettings fs;
  fs.gasn_hidden = a.hidden;
  fs.train.epochs = a.epochs;
  fs.train.lr = a.lr;
  std::vector<MetaCandidate> cands;
  for (std::size_t k = 0; k < a.candidates.size(); ++k) {
    const Estimator e = parse_estimator(a.candidates[k]);
    if (k == 0 && e != Estimator::kGasn && e != Estimator::kRasn)
      throw ParseError("the first meta candidate must be gasn or rasn");
    const std::uint64_t s = derive_seed(*a.seed, 10 + k);
    cands.push_back({to_string(e), [e, fs, s](const ChoiceDataset& t, const ChoiceDataset& v) {
                       return fit_estimator(e, t, &v, fs, s);
                     }});
  }
  MetaConfig cfg;
  cfg.net.arch = parse_estimator(a.candidates.front()) == Estimator::kRasn ? Arch::kRasn : Arch::kGasn;
  cfg.net.hidden = a.hidden;
  cfg.retrain = fs.train;
  cfg.finetune = fs.train;
  cfg.m_prime = a.m_prime;
  cfg.seed = *a.seed;
  const MetaResult r = meta_learn(tr, va, cands, cfg);
  const std::string out = in_default_dir(a.out, "meta_model.json");
  save_model(*r.model, out);
  nlohmann::json j{{"source", r.source},
                   {"best_candidate", cands[static_cast<std::size_t>(r.best_candidate)].name},
                   {"final_val_ce", r.final_val_ce}};
  for (std::size_t k = 0; k < cands.size(); ++k) j["val_ce"][cands[k].name] = r.val_ce[k];
  if (r.finetuned_val_ce) j["finetuned_val_ce"] = *r.finetuned_val_ce;
  Manifest man;
  man.command = command;
  man.spec = {{"candidates", a.candidates}, {"hidden", a.hidden}, {"epochs", a.epochs}, {"lr", a.lr},
              {"m_prime", a.m_prime},       {"seed", *a.seed},    {"result", j}};
  man.inputs = {a.train, a.val};
  man.outputs = {out};
  write_manifest(sibling(out, ".manifest.json"), man);
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"choicenet: neural and classical discrete-choice models"};
  app.set_config("--config", "", "TOML/INI file of option values; flags on the command line win");
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");
  const std::string command = join_args(argc, argv);
  std::function<int()> run;

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Draw a synthetic transaction dataset and its truth model");
  gen->add_option("--truth", ga.truth, "mnl, mccm, np or mmnl")->required();
  gen->add_option("--n", ga.n, "Universe size, no-purchase included")->required()->check(CLI::Range(2, 100000));
  gen->add_option("--m", ga.m, "Number of transactions")->required();
  gen->add_option("--sampler", ga.sampler, "uniform-size, bernoulli-half, half-blocked, window-third, fixed-size");
  gen->add_option("--k", ga.k, "Assortment size for fixed-size");
  gen->add_option("--seed", ga.seed)->required();
  gen->add_option("--out", ga.out, "Transaction CSV (default $CHOICENET_OUT/data.csv)");
  gen->add_option("--truth-out", ga.truth_out, "Truth JSON (default next to --out)");
  gen->callback([&] { run = [&] { return cmd_generate(ga, command); }; });

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit an estimator to a transaction CSV");
  fit->add_option("--data", fa.data)->check(CLI::ExistingFile)->required();
  fit->add_option("--val", fa.val, "Validation CSV (network snapshot selection)")->check(CLI::ExistingFile);
  fit->add_option("--estimator", fa.estimator, "mnl-mle, mccm-em, gasn or rasn")->required();
  fit->add_option("--hidden", fa.hidden, "GAsN hidden widths")->delimiter(',');
  fit->add_option("--blocks", fa.blocks, "RAsN residual blocks");
  fit->add_option("--epochs", fa.epochs);
  fit->add_option("--batch", fa.batch);
  fit->add_option("--lr", fa.lr);
  fit->add_option("--seed", fa.seed);
  fit->add_option("--em-max-iters", fa.em_max_iters);
  fit->add_option("--em-threshold", fa.em_threshold);
  fit->add_option("--restarts", fa.restarts, "EM restarts");
  fit->add_option("--out", fa.out, "Model JSON (default $CHOICENET_OUT/model.json)");
  fit->callback([&] { run = [&] { return cmd_fit(fa, command); }; });

  OptimizeArgs oa;
  auto* opt = app.add_subcommand("optimize", "Find a revenue-maximizing assortment under a model");
  opt->add_option("--model", oa.model)->check(CLI::ExistingFile)->required();
  opt->add_option("--method", oa.method, "brute, ro, adxopt, bellman, mnl-milp, np-milp or nn-mip")->required();
  opt->add_option("--revenue", oa.revenue, "JSON {\"mu\": [...]}")->check(CLI::ExistingFile);
  opt->add_option("--revenue-seed", oa.revenue_seed, "Draw mu_i ~ U[10, 50] instead");
  opt->add_option("--capacity", oa.capacity, "JSON {\"a\": [...], \"c\": ...}")->check(CLI::ExistingFile);
  opt->add_option("--capacity-seed", oa.capacity_seed, "Draw a capacity constraint instead");
  opt->add_option("--removal-limit", oa.removal_limit, "ADXOpt removals per product");
  opt->add_option("--time-limit", oa.time_limit, "Seconds per MIP");
  opt->add_option("--export-lp", oa.export_lp, "Write the MIP as an LP file instead of solving");
  opt->add_option("--dinkelbach-t", oa.dinkelbach_t, "Ratio parameter t for exporting nn-mip (objective num - t den)");
  opt->add_option("--out", oa.out, "Result JSON (default stdout)");
  opt->callback([&] { run = [&] { return cmd_optimize(oa); }; });

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Cross-entropy and calibration of a model on a dataset");
  ev->add_option("--model", ea.model)->check(CLI::ExistingFile)->required();
  ev->add_option("--data", ea.data)->check(CLI::ExistingFile)->required();
  ev->add_option("--truth", ea.truth, "Truth model JSON, for the oracle CE")->check(CLI::ExistingFile);
  ev->add_option("--bins", ea.bins, "ACE bins")->check(CLI::PositiveNumber);
  ev->add_option("--out", ea.out, "Result JSON (default stdout)");
  ev->callback([&] { run = [&] { return cmd_evaluate(ea); }; });

  cli::ReproduceOptions ro;
  std::string preset = "desk";
  auto* rep = app.add_subcommand("reproduce", "Rerun a table or figure: t5, t8, t9, t12, fig5, fig6");
  rep->add_option("table", ro.table)->required();
  rep->add_option("--preset", preset, "Only 'desk'")->check(CLI::IsMember({"desk"}));
  rep->add_flag("--full", ro.full, "Full-scale grid (n = 20, 50; |N| = 20, 40, 60; 10 trials)");
  rep->add_option("--trials", ro.trials, "Trials, draws or seeds, overriding the preset");
  rep->add_option("--jobs", ro.jobs, "Parallel trials")->check(CLI::PositiveNumber);
  rep->add_option("--seed", ro.seed);
  rep->add_option("--time-limit", ro.time_limit, "Seconds per network MIP");
  rep->add_option("--out", ro.out_dir, "Output directory (default $CHOICENET_OUT or ./results)");
  rep->callback([&] {
    run = [&] {
      if (ro.out_dir.empty()) {
        const char* env = std::getenv("CHOICENET_OUT");
        ro.out_dir = env && *env ? env : "results";
      }
      ro.verbose = verbose;
      ro.command = command;
      for (const std::string& p : cli::reproduce(ro)) std::cout << p << "\n";
      return kExitOk;
    };
  });

  MetaArgs ma;
  auto* meta = app.add_subcommand("meta", "Best-of-candidates fit with synthetic retraining");
  meta->add_option("--train", ma.train)->check(CLI::ExistingFile)->required();
  meta->add_option("--val", ma.val)->check(CLI::ExistingFile)->required();
  meta->add_option("--candidates", ma.candidates, "Estimators; the first must be gasn or rasn")->delimiter(',');
  meta->add_option("--hidden", ma.hidden)->delimiter(',');
  meta->add_option("--epochs", ma.epochs);
  meta->add_option("--lr", ma.lr);
  meta->add_option("--m-prime", ma.m_prime, "Synthetic samples drawn from the best classical model");
  meta->add_option("--seed", ma.seed);
  meta->add_option("--out", ma.out, "Model JSON (default $CHOICENET_OUT/meta_model.json)");
  meta->callback([&] { run = [&] { return cmd_meta(ma, command); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  try {
    return run();
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnsupportedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
