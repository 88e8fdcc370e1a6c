#pragma once

#include <vector>

#include "choicenet/core/choice_model.hpp"

namespace choicenet {

// Softmax over offered utilities, shifted by the offered maximum.
ProbVector softmax_on(std::span<const double> logits, const Assortment& s);

class MnlModel : public ChoiceModel {
 public:
  MnlModel(Universe u, std::vector<double> utilities);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "mnl"; }
  ProbVector prob(const Assortment& s) const override;
  const std::vector<double>& utilities() const { return util_; }

 private:
  Universe u_;
  std::vector<double> util_;
};

class MccmModel : public ChoiceModel {
 public:
  // lambda: arrival distribution; rho: row-stochastic n x n transitions.
  MccmModel(Universe u, Vec lambda, Mat rho);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "mccm"; }
  ProbVector prob(const Assortment& s) const override;
  const Vec& lambda() const { return lambda_; }
  const Mat& rho() const { return rho_; }

 private:
  Universe u_;
  Vec lambda_;
  Mat rho_;
};

// Absorption of the chain (lambda, rho) into the offered set s. States that
// cannot reach s are sent to the no-purchase option (or the lowest offered
// index when there is none).
ProbVector mccm_absorption(const Vec& lambda, const Mat& rho, const Assortment& s);

class NpModel : public ChoiceModel {
 public:
  NpModel(Universe u, std::vector<std::vector<int>> perms, std::vector<double> weights);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "np"; }
  ProbVector prob(const Assortment& s) const override;
  const std::vector<std::vector<int>>& perms() const { return perms_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  Universe u_;
  std::vector<std::vector<int>> perms_;
  std::vector<double> weights_;
};

class MmnlModel : public ChoiceModel {
 public:
  // u: |C| x n segment utilities.
  MmnlModel(Universe u, std::vector<double> alpha, Mat util);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "mmnl"; }
  ProbVector prob(const Assortment& s) const override;
  const std::vector<double>& alpha() const { return alpha_; }
  const Mat& utilities() const { return util_; }

 private:
  Universe u_;
  std::vector<double> alpha_;
  Mat util_;
};

// Linear-in-attributes MNL: u_i = beta . x_i, where x_i is the product's
// feature row concatenated with the customer features.
class FeatureMnlModel : public ChoiceModel {
 public:
  FeatureMnlModel(Universe u, std::vector<double> beta);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "feature-mnl"; }
  ProbVector prob(const Assortment& s) const override;
  ProbVector prob(const Assortment& s, const Features& f) const override;
  const std::vector<double>& beta() const { return beta_; }

 private:
  Universe u_;
  std::vector<double> beta_;
};

// Feature-driven MCCM: lambda = softmax(X beta) and row i of rho is
// softmax(A x_i), where X stacks the product feature rows.
class FeatureMccmModel : public ChoiceModel {
 public:
  FeatureMccmModel(Universe u, std::vector<double> beta, Mat a);
  const Universe& universe() const override { return u_; }
  std::string kind() const override { return "feature-mccm"; }
  ProbVector prob(const Assortment& s) const override;
  ProbVector prob(const Assortment& s, const Features& f) const override;
  const std::vector<double>& beta() const { return beta_; }
  const Mat& a() const { return a_; }
  // Chain parameters induced by the product features.
  std::pair<Vec, Mat> chain(const Mat& product_features) const;

 private:
  Universe u_;
  std::vector<double> beta_;
  Mat a_;
};

}  // namespace choicenet
