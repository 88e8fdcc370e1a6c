#pragma once

#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "choicenet/core/choice_model.hpp"
#include "choicenet/opt/mip.hpp"
#include "choicenet/synth/models.hpp"

namespace choicenet {

struct OptResult {
  Assortment assortment;
  double value = 0.0;  // expected revenue under the evaluating model
  std::string method;
  bool exact = false;
  long nodes = 0;
  double seconds = 0.0;
  std::optional<double> surrogate;  // network surrogate objective, when used
  nlohmann::json info = nlohmann::json::object();  // method parameters
};

nlohmann::json opt_result_to_json(const OptResult& r);

// Largest problem brute force accepts.
inline constexpr int kBruteForceMaxN = 25;

// Maximizes f over every feasible assortment. Ties (within 1e-12 relative)
// go to the smaller assortment, then the lexicographically smaller mask.
OptResult brute_force_max(const Universe& u, const CapacityConstraint* cap,
                          const std::function<double(const Assortment&)>& f);

OptResult brute_force_opt(const ChoiceModel& model, const RevenueSpec& rev,
                          const CapacityConstraint* cap = nullptr);

// Best feasible nested set by decreasing revenue (ties by index).
OptResult revenue_ordered(const ChoiceModel& model, const RevenueSpec& rev,
                          const CapacityConstraint* cap = nullptr);

// Greedy add/delete/exchange search from the no-purchase-only assortment. A
// product that has been removed removal_limit times is never removed again.
OptResult adxopt(const ChoiceModel& model, const RevenueSpec& rev,
                 const CapacityConstraint* cap = nullptr, int removal_limit = 5);

// Exact unconstrained MCCM optimum: g_i = max(mu_i, sum_j rho_ij g_j) to
// sup-norm 1e-10; product i is offered iff mu_i beats its continuation value.
OptResult mccm_bellman_opt(const MccmModel& model, const RevenueSpec& rev,
                           const CapacityConstraint* cap = nullptr);

// MILP over the MNL choice probabilities (x_i = P(i | S)).
MipInstance build_mnl_milp(const MnlModel& model, const RevenueSpec& rev,
                           const CapacityConstraint* cap = nullptr);
// MILP over the ranking list: s offered flags, eta_{j,k} first-offered picks.
MipInstance build_np_milp(const NpModel& model, const RevenueSpec& rev,
                          const CapacityConstraint* cap = nullptr);

// Reads the assortment off a MILP solution.
Assortment assortment_from_solution(const MipInstance& mip, const Universe& u,
                                    const std::vector<double>& x);

// Solves a linear assortment MILP and evaluates the result under `model`.
OptResult solve_assortment_milp(const MipInstance& mip, const ChoiceModel& model,
                                const RevenueSpec& rev, const std::string& method,
                                const MilpOptions& opt = {});

// Rev(candidate) / Rev(S*) under the truth; nullopt when Rev(S*) = 0.
std::optional<double> opt_ratio(const Assortment& candidate, const ChoiceModel& truth,
                                const RevenueSpec& rev, const CapacityConstraint* cap = nullptr);

}  // namespace choicenet
