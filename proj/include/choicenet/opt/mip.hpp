#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "choicenet/core/types.hpp"
#include "choicenet/neural/network.hpp"

namespace choicenet {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { kContinuous, kBinary };
enum class RowSense { kLe, kGe, kEq };

struct MipVar {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lb = 0.0;
  double ub = kInf;
};

struct MipRow {
  std::string name;
  std::vector<std::pair<int, double>> terms;  // (variable index, coefficient)
  RowSense sense = RowSense::kLe;
  double rhs = 0.0;
};

// coef * x_i * x_j in the objective (i == j for squares).
struct QuadTerm {
  int i = 0;
  int j = 0;
  double coef = 0.0;
};

// Ratio objective of the network MIP:
//   sum_i mu_i z0_i q(zL_i) / sum_i z0_i q(zL_i),  q(x) = 1 + x + x^2 / 2.
// Variable indices are per universe option.
struct NnRatioObjective {
  NetworkParams net;
  std::vector<double> mu;
  std::optional<CapacityConstraint> cap;
  std::vector<int> z0;
  std::vector<int> zl;
  std::vector<int> v;  // v_i = z0_i * zL_i
};

// Big-M pair of one ReLU unit: z <= m_pos * zeta, zt <= m_neg * (1 - zeta).
struct BigM {
  int layer = 0;  // 1-based
  int unit = 0;
  double pre_lo = 0.0;
  double pre_hi = 0.0;
  double m_pos = 0.0;
  double m_neg = 0.0;
};

struct MipInstance {
  std::vector<MipVar> vars;
  std::vector<MipRow> rows;
  bool maximize = true;
  std::vector<double> obj;  // one entry per variable
  double obj_const = 0.0;
  std::vector<QuadTerm> quad;
  std::optional<NnRatioObjective> ratio;
  // Assortment indicator per universe option, -1 when the option has none.
  std::vector<int> assortment_vars;
  std::vector<BigM> big_m;

  int add_var(std::string name, VarKind kind, double lb, double ub, double cost = 0.0);
  void add_row(std::string name, std::vector<std::pair<int, double>> terms, RowSense sense, double rhs);
  int find(const std::string& name) const;  // -1 when absent
  std::size_t num_binaries() const;
  // Throws DimensionError on dangling indices, bad bounds or size mismatch.
  void validate() const;
};

// Value of the linear + quadratic objective at x.
double objective_value(const MipInstance& mip, const std::vector<double>& x);
// Max violation of rows, bounds and integrality at x.
double max_violation(const MipInstance& mip, const std::vector<double>& x);

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kLimit };
std::string to_string(SolveStatus s);

struct LpResult {
  SolveStatus status = SolveStatus::kInfeasible;
  double value = 0.0;
  std::vector<double> x;
  long iterations = 0;
};

// Bounded-variable two-phase primal simplex on the continuous relaxation,
// with the given bounds replacing the instance bounds. Lower bounds must be
// finite; the quadratic part must be empty.
LpResult solve_lp(const MipInstance& mip, const std::vector<double>& lb, const std::vector<double>& ub);
LpResult solve_lp(const MipInstance& mip);

struct MilpOptions {
  double time_limit = 300.0;  // seconds
  long node_limit = 10'000'000;
  double int_tol = 1e-6;
};

struct MilpResult {
  SolveStatus status = SolveStatus::kInfeasible;
  bool has_solution = false;
  bool exact = false;  // search finished inside the limits
  double value = 0.0;
  std::vector<double> x;
  long nodes = 0;
  double seconds = 0.0;
};

// Depth-first branch and bound over the binaries with LP bounds.
MilpResult solve_milp(const MipInstance& mip, const MilpOptions& opt = {});

}  // namespace choicenet
