#include <algorithm>
#include <cmath>

#include "choicenet/core/error.hpp"
#include "choicenet/opt/mip.hpp"

namespace choicenet {
namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPivTol = 1e-9;
constexpr long kMaxIters = 200000;

// Dense bounded-variable tableau. Every column j has bounds [0, ub_j] after
// shifting by the original lower bound; nonbasic columns sit at 0 or ub_j.
class Tableau {
 public:
  Tableau(int rows, int cols) : m_(rows), n_(cols), t_(Mat::Zero(rows, cols)), d_(Vec::Zero(cols)),
      ub_(Vec::Constant(cols, kInf)), xb_(Vec::Zero(rows)), basis_(static_cast<std::size_t>(rows), -1),
      at_upper_(static_cast<std::size_t>(cols), 0), is_basic_(static_cast<std::size_t>(cols), 0) {}

  Mat& t() { return t_; }
  Vec& ub() { return ub_; }
  Vec& xb() { return xb_; }
  void set_basic(int row, int col) {
    basis_[static_cast<std::size_t>(row)] = col;
    is_basic_[static_cast<std::size_t>(col)] = 1;
  }

  // Reduced costs for objective c (maximize) given the current basis.
  void price(const Vec& c) {
    d_ = c;
    for (int i = 0; i < m_; ++i) {
      const double cb = c(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) d_ -= cb * t_.row(i).transpose();
    }
  }

  Vec values() const {
    Vec x(n_);
    for (int j = 0; j < n_; ++j) x(j) = at_upper_[static_cast<std::size_t>(j)] ? ub_(j) : 0.0;
    for (int i = 0; i < m_; ++i) x(basis_[static_cast<std::size_t>(i)]) = xb_(i);
    return x;
  }

  // Runs primal simplex; returns kOptimal, kUnbounded or kLimit.
  SolveStatus run(long& iters) {
    int degenerate = 0;
    while (true) {
      if (++iters > kMaxIters) return SolveStatus::kLimit;
      const bool bland = degenerate > 50;
      int enter = -1;
      double best = 0.0;
      for (int j = 0; j < n_; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)] || ub_(j) <= 0.0) continue;
        const bool up = at_upper_[static_cast<std::size_t>(j)];
        const double gain = up ? -d_(j) : d_(j);
        if (gain > kCostTol && (bland ? enter < 0 : gain > best)) {
          enter = j;
          best = gain;
        }
      }
      if (enter < 0) return SolveStatus::kOptimal;
      const double dir = at_upper_[static_cast<std::size_t>(enter)] ? -1.0 : 1.0;
      double theta = ub_(enter);
      int leave = -1;
      bool leave_to_upper = false;
      double leave_piv = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (std::abs(a) <= kPivTol) continue;
        const double delta = -dir * a;  // change of basic i per unit step
        const int b = basis_[static_cast<std::size_t>(i)];
        double lim;
        bool to_upper;
        if (delta < 0) {
          lim = std::max(0.0, xb_(i)) / -delta;
          to_upper = false;
        } else {
          if (!std::isfinite(ub_(b))) continue;
          lim = std::max(0.0, ub_(b) - xb_(i)) / delta;
          to_upper = true;
        }
        const bool take = lim < theta - 1e-12 ||
                          (lim <= theta + 1e-12 && leave >= 0 &&
                           (bland ? b < basis_[static_cast<std::size_t>(leave)] : std::abs(a) > leave_piv));
        if (take) {
          theta = lim;
          leave = i;
          leave_to_upper = to_upper;
          leave_piv = std::abs(a);
        }
      }
      if (!std::isfinite(theta)) return SolveStatus::kUnbounded;
      degenerate = theta <= 1e-12 ? degenerate + 1 : 0;
      xb_ -= (dir * theta) * t_.col(enter);
      if (leave < 0) {
        at_upper_[static_cast<std::size_t>(enter)] ^= 1;
        continue;
      }
      const double enter_val = (at_upper_[static_cast<std::size_t>(enter)] ? ub_(enter) : 0.0) + dir * theta;
      const int out = basis_[static_cast<std::size_t>(leave)];
      pivot(leave, enter);
      xb_(leave) = enter_val;
      is_basic_[static_cast<std::size_t>(out)] = 0;
      at_upper_[static_cast<std::size_t>(out)] = leave_to_upper;
      at_upper_[static_cast<std::size_t>(enter)] = 0;
    }
  }

  void pivot(int r, int c) {
    const double p = t_(r, c);
    t_.row(r) /= p;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    const double f = d_(c);
    if (f != 0.0) d_ -= f * t_.row(r).transpose();
    basis_[static_cast<std::size_t>(r)] = c;
    is_basic_[static_cast<std::size_t>(c)] = 1;
  }

  int basic(int row) const { return basis_[static_cast<std::size_t>(row)]; }
  void make_nonbasic(int col) { is_basic_[static_cast<std::size_t>(col)] = 0; at_upper_[static_cast<std::size_t>(col)] = 0; }
  bool basic_col(int col) const { return is_basic_[static_cast<std::size_t>(col)]; }

 private:
  int m_, n_;
  Mat t_;
  Vec d_;
  Vec ub_;
  Vec xb_;
  std::vector<int> basis_;
  std::vector<char> at_upper_;
  std::vector<char> is_basic_;
};

}  // namespace

LpResult solve_lp(const MipInstance& mip) {
  std::vector<double> lb, ub;
  for (const MipVar& v : mip.vars) {
    lb.push_back(v.lb);
    ub.push_back(v.ub);
  }
  return solve_lp(mip, lb, ub);
}

LpResult solve_lp(const MipInstance& mip, const std::vector<double>& lb, const std::vector<double>& ub) {
  if (!mip.quad.empty()) throw UnsupportedError("the simplex solver handles linear objectives only");
  const int nv = static_cast<int>(mip.vars.size());
  const int m = static_cast<int>(mip.rows.size());
  LpResult res;
  for (int j = 0; j < nv; ++j) {
    if (!std::isfinite(lb[static_cast<std::size_t>(j)]))
      throw UnsupportedError("variable " + mip.vars[static_cast<std::size_t>(j)].name + " needs a finite lower bound");
    if (ub[static_cast<std::size_t>(j)] < lb[static_cast<std::size_t>(j)] - kFeasTol) return res;
  }

  // Row i in <= form (>= rows negated), rhs shifted by the lower bounds.
  std::vector<double> rhs(static_cast<std::size_t>(m));
  std::vector<int> slack(static_cast<std::size_t>(m), -1), art(static_cast<std::size_t>(m), -1);
  std::vector<double> sign(static_cast<std::size_t>(m), 1.0);
  int cols = nv;
  for (int i = 0; i < m; ++i) {
    const MipRow& r = mip.rows[static_cast<std::size_t>(i)];
    double b = r.rhs;
    for (auto [j, a] : r.terms) b -= a * lb[static_cast<std::size_t>(j)];
    if (r.sense == RowSense::kGe) {
      sign[static_cast<std::size_t>(i)] = -1.0;
      b = -b;
    }
    rhs[static_cast<std::size_t>(i)] = b;
    if (r.sense != RowSense::kEq) slack[static_cast<std::size_t>(i)] = cols++;
  }
  for (int i = 0; i < m; ++i) {
    const bool eq = mip.rows[static_cast<std::size_t>(i)].sense == RowSense::kEq;
    if (eq || rhs[static_cast<std::size_t>(i)] < 0) art[static_cast<std::size_t>(i)] = cols++;
  }

  Tableau tab(m, cols);
  for (int j = 0; j < nv; ++j) tab.ub()(j) = ub[static_cast<std::size_t>(j)] - lb[static_cast<std::size_t>(j)];
  for (int i = 0; i < m; ++i) {
    const MipRow& r = mip.rows[static_cast<std::size_t>(i)];
    // Flip rows with negative rhs so the starting basic value is >= 0.
    const double flip = rhs[static_cast<std::size_t>(i)] < 0 ? -1.0 : 1.0;
    const double s = sign[static_cast<std::size_t>(i)] * flip;
    for (auto [j, a] : r.terms) tab.t()(i, j) += s * a;
    if (slack[static_cast<std::size_t>(i)] >= 0) tab.t()(i, slack[static_cast<std::size_t>(i)]) = flip;
    tab.xb()(i) = flip * rhs[static_cast<std::size_t>(i)];
    if (art[static_cast<std::size_t>(i)] >= 0) {
      tab.t()(i, art[static_cast<std::size_t>(i)]) = 1.0;
      tab.set_basic(i, art[static_cast<std::size_t>(i)]);
    } else {
      tab.set_basic(i, slack[static_cast<std::size_t>(i)]);
    }
  }

  // Phase 1: drive the artificials to zero.
  bool any_art = false;
  Vec c1 = Vec::Zero(cols);
  for (int i = 0; i < m; ++i)
    if (art[static_cast<std::size_t>(i)] >= 0) {
      c1(art[static_cast<std::size_t>(i)]) = -1.0;
      any_art = true;
    }
  if (any_art) {
    tab.price(c1);
    SolveStatus st = tab.run(res.iterations);
    if (st == SolveStatus::kLimit) {
      res.status = st;
      return res;
    }
    Vec x = tab.values();
    double infeas = 0.0;
    for (int i = 0; i < m; ++i)
      if (art[static_cast<std::size_t>(i)] >= 0) infeas += x(art[static_cast<std::size_t>(i)]);
    if (infeas > 1e-7) {
      res.status = SolveStatus::kInfeasible;
      return res;
    }
    // Pivot remaining artificials out where possible; the rest sit at 0.
    std::vector<char> is_art(static_cast<std::size_t>(cols), 0);
    for (int a : art)
      if (a >= 0) is_art[static_cast<std::size_t>(a)] = 1;
    for (int i = 0; i < m; ++i) {
      const int b = tab.basic(i);
      if (!is_art[static_cast<std::size_t>(b)]) continue;
      int best = -1;
      double mag = 1e-7;
      for (int j = 0; j < cols; ++j) {
        if (is_art[static_cast<std::size_t>(j)] || tab.basic_col(j)) continue;
        if (std::abs(tab.t()(i, j)) > mag) {
          mag = std::abs(tab.t()(i, j));
          best = j;
        }
      }
      if (best >= 0) {
        const double keep = tab.values()(best);
        tab.pivot(i, best);
        tab.xb()(i) = keep;
        tab.make_nonbasic(b);
      }
    }
    for (int i = 0; i < m; ++i)
      if (art[static_cast<std::size_t>(i)] >= 0) tab.ub()(art[static_cast<std::size_t>(i)]) = 0.0;
  }

  Vec c2 = Vec::Zero(cols);
  const double s = mip.maximize ? 1.0 : -1.0;
  for (int j = 0; j < nv; ++j) c2(j) = s * mip.obj[static_cast<std::size_t>(j)];
  tab.price(c2);
  SolveStatus st = tab.run(res.iterations);
  res.status = st;
  if (st != SolveStatus::kOptimal) return res;
  Vec x = tab.values();
  res.x.resize(static_cast<std::size_t>(nv));
  for (int j = 0; j < nv; ++j) {
    double v = x(j) + lb[static_cast<std::size_t>(j)];
    v = std::clamp(v, lb[static_cast<std::size_t>(j)], ub[static_cast<std::size_t>(j)]);
    res.x[static_cast<std::size_t>(j)] = v;
  }
  res.value = objective_value(mip, res.x);
  return res;
}

}  // namespace choicenet
