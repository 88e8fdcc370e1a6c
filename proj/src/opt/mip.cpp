#include "choicenet/opt/mip.hpp"

#include <chrono>
#include <cmath>

#include "choicenet/core/error.hpp"

namespace choicenet {

int MipInstance::add_var(std::string name, VarKind kind, double lb, double ub, double cost) {
  vars.push_back({std::move(name), kind, lb, ub});
  obj.push_back(cost);
  return static_cast<int>(vars.size()) - 1;
}

void MipInstance::add_row(std::string name, std::vector<std::pair<int, double>> terms, RowSense sense,
                          double rhs) {
  rows.push_back({std::move(name), std::move(terms), sense, rhs});
}

int MipInstance::find(const std::string& name) const {
  for (std::size_t j = 0; j < vars.size(); ++j)
    if (vars[j].name == name) return static_cast<int>(j);
  return -1;
}

std::size_t MipInstance::num_binaries() const {
  std::size_t k = 0;
  for (const MipVar& v : vars) k += v.kind == VarKind::kBinary;
  return k;
}

void MipInstance::validate() const {
  const int nv = static_cast<int>(vars.size());
  if (obj.size() != vars.size()) throw DimensionError("objective length does not match the variable count");
  for (const MipVar& v : vars) {
    if (std::isnan(v.lb) || std::isnan(v.ub) || v.lb > v.ub) throw DimensionError("variable " + v.name + " has bad bounds");
    if (v.kind == VarKind::kBinary && (v.lb < 0 || v.ub > 1)) throw DimensionError("binary " + v.name + " has bounds outside [0, 1]");
  }
  for (const MipRow& r : rows) {
    if (!std::isfinite(r.rhs)) throw DimensionError("row " + r.name + " has a non-finite rhs");
    for (auto [j, a] : r.terms) {
      if (j < 0 || j >= nv) throw DimensionError("row " + r.name + " references an undeclared variable");
      if (!std::isfinite(a)) throw DimensionError("row " + r.name + " has a non-finite coefficient");
    }
  }
  for (const QuadTerm& q : quad)
    if (q.i < 0 || q.i >= nv || q.j < 0 || q.j >= nv) throw DimensionError("quadratic term references an undeclared variable");
  for (int j : assortment_vars)
    if (j < -1 || j >= nv) throw DimensionError("assortment indicator out of range");
}

double objective_value(const MipInstance& mip, const std::vector<double>& x) {
  double v = mip.obj_const;
  for (std::size_t j = 0; j < x.size(); ++j) v += mip.obj[j] * x[j];
  for (const QuadTerm& q : mip.quad) v += q.coef * x[static_cast<std::size_t>(q.i)] * x[static_cast<std::size_t>(q.j)];
  return v;
}

double max_violation(const MipInstance& mip, const std::vector<double>& x) {
  double worst = 0.0;
  for (std::size_t j = 0; j < mip.vars.size(); ++j) {
    const MipVar& v = mip.vars[j];
    worst = std::max({worst, v.lb - x[j], x[j] - v.ub});
    if (v.kind == VarKind::kBinary) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  }
  for (const MipRow& r : mip.rows) {
    double lhs = 0.0;
    for (auto [j, a] : r.terms) lhs += a * x[static_cast<std::size_t>(j)];
    const double d = lhs - r.rhs;
    if (r.sense == RowSense::kLe) worst = std::max(worst, d);
    else if (r.sense == RowSense::kGe) worst = std::max(worst, -d);
    else worst = std::max(worst, std::abs(d));
  }
  return worst;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kLimit: return "limit";
  }
  return "unknown";
}

MilpResult solve_milp(const MipInstance& mip, const MilpOptions& opt) {
  mip.validate();
  if (mip.ratio) throw UnsupportedError("ratio objectives go through solve_nn_mip");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  MilpResult res;
  const double sense = mip.maximize ? 1.0 : -1.0;
  double incumbent = -kInf;  // in maximize orientation

  struct Node {
    std::vector<double> lb, ub;
  };
  std::vector<Node> stack;
  Node root;
  for (const MipVar& v : mip.vars) {
    root.lb.push_back(v.kind == VarKind::kBinary ? std::ceil(v.lb - opt.int_tol) : v.lb);
    root.ub.push_back(v.kind == VarKind::kBinary ? std::floor(v.ub + opt.int_tol) : v.ub);
  }
  stack.push_back(std::move(root));
  bool limit_hit = false;
  bool unbounded = false;
  while (!stack.empty()) {
    if (res.nodes >= opt.node_limit || elapsed() > opt.time_limit) {
      limit_hit = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    ++res.nodes;
    LpResult lp = solve_lp(mip, node.lb, node.ub);
    if (lp.status == SolveStatus::kInfeasible) continue;
    if (lp.status == SolveStatus::kUnbounded) {
      unbounded = true;
      break;
    }
    if (lp.status == SolveStatus::kLimit) {
      limit_hit = true;
      continue;
    }
    const double bound = sense * lp.value;
    if (bound <= incumbent + 1e-9 * std::max(1.0, std::abs(incumbent))) continue;
    // Most fractional binary.
    int branch = -1;
    double frac_best = opt.int_tol;
    for (std::size_t j = 0; j < mip.vars.size(); ++j) {
      if (mip.vars[j].kind != VarKind::kBinary) continue;
      const double f = std::abs(lp.x[j] - std::round(lp.x[j]));
      if (f > frac_best) {
        frac_best = f;
        branch = static_cast<int>(j);
      }
    }
    if (branch < 0) {
      std::vector<double> x = lp.x;
      for (std::size_t j = 0; j < x.size(); ++j)
        if (mip.vars[j].kind == VarKind::kBinary) x[j] = std::round(x[j]);
      incumbent = bound;
      res.has_solution = true;
      res.x = std::move(x);
      res.value = lp.value;
      continue;
    }
    const std::size_t b = static_cast<std::size_t>(branch);
    Node down = node, up = std::move(node);
    down.ub[b] = 0.0;
    up.lb[b] = 1.0;
    // The child nearer to the LP point is explored first.
    if (lp.x[b] >= 0.5) {
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    } else {
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    }
  }
  res.seconds = elapsed();
  if (unbounded) {
    res.status = SolveStatus::kUnbounded;
    res.has_solution = false;
    return res;
  }
  res.exact = !limit_hit;
  if (res.has_solution) res.status = limit_hit ? SolveStatus::kLimit : SolveStatus::kOptimal;
  else res.status = limit_hit ? SolveStatus::kLimit : SolveStatus::kInfeasible;
  return res;
}

}  // namespace choicenet
