#pragma once

#include <memory>
#include <span>
#include <string>

#include "choicenet/core/rng.hpp"
#include "choicenet/core/types.hpp"

namespace choicenet {

// Per-sample context for feature-based models. Feature-free models ignore it.
struct Features {
  const Mat* product = nullptr;          // n x d, may be null
  std::span<const double> customer;      // length d', may be empty
};

// Probability oracle P(i|S). Implementations must return a dense length-n
// vector with exact zeros off the assortment.
class ChoiceModel {
 public:
  virtual ~ChoiceModel() = default;

  virtual const Universe& universe() const = 0;
  virtual std::string kind() const = 0;
  virtual ProbVector prob(const Assortment& s) const = 0;
  virtual ProbVector prob(const Assortment& s, const Features& /*f*/) const {
    return prob(s);
  }
};

using ModelPtr = std::shared_ptr<const ChoiceModel>;

// Uniform over the offered options.
class UniformModel : public ChoiceModel {
 public:
  explicit UniformModel(Universe u) : u_(u) {}
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "uniform"; }
  ProbVector prob(const Assortment& s) const override;

 private:
  Universe u_;
};

inline constexpr double kProbFloor = 1e-12;

// Throws InvariantError unless p is a valid choice distribution on s.
void check_prob_vector(const ProbVector& p, const Assortment& s, double tol = 1e-9);

Features features_of(const ChoiceDataset& data, const Sample& sample);

// Mean negative log-likelihood; probabilities are floored at kProbFloor.
double ce_loss(const ChoiceModel& model, const ChoiceDataset& data);

double expected_revenue(const ChoiceModel& model, const Assortment& s,
                        const RevenueSpec& rev);
double expected_revenue(const ProbVector& p, const RevenueSpec& rev);

// Draws i with probability p[i] by inverse CDF on one uniform variate.
int sample_from(const ProbVector& p, Rng& rng);
int sample_choice(const ChoiceModel& model, const Assortment& s, Rng& rng);

}  // namespace choicenet
