#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace choicenet {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

// The product universe. Products are indexed 0..n-1; when a no-purchase
// option is declared it is always the last index.
class Universe {
 public:
  Universe() = default;
  explicit Universe(int n, bool has_no_purchase = true);

  int size() const { return n_; }
  bool has_no_purchase() const { return has_no_purchase_; }
  // Index of the no-purchase option; -1 when the universe has none.
  int no_purchase() const { return has_no_purchase_ ? n_ - 1 : -1; }
  // Number of real (purchasable) products.
  int num_products() const { return has_no_purchase_ ? n_ - 1 : n_; }
  bool is_no_purchase(int i) const { return has_no_purchase_ && i == n_ - 1; }

  bool operator==(const Universe&) const = default;

 private:
  int n_ = 0;
  bool has_no_purchase_ = true;
};

// Offered subset as a 0/1 mask over the universe.
class Assortment {
 public:
  Assortment() = default;
  // Validates the mask against the universe (non-empty, no-purchase set).
  Assortment(const Universe& u, std::vector<std::uint8_t> mask);

  // Builds from a list of offered product indices; no-purchase is added
  // automatically when the universe declares it.
  static Assortment of(const Universe& u, std::span<const int> products);
  static Assortment full(const Universe& u);
  // Only the no-purchase option (requires one).
  static Assortment no_purchase_only(const Universe& u);
  // Bit i of `bits` is product i. n must be <= 64.
  static Assortment from_bits(const Universe& u, std::uint64_t bits);
  // Parses a '0'/'1' string of length n.
  static Assortment parse(const Universe& u, std::string_view text);

  int size() const { return static_cast<int>(mask_.size()); }
  bool contains(int i) const { return mask_[static_cast<std::size_t>(i)] != 0; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  // Number of offered options, including no-purchase.
  int count() const;
  std::vector<int> members() const;
  std::string to_string() const;
  std::uint64_t bits() const;

  bool operator==(const Assortment&) const = default;

 private:
  std::vector<std::uint8_t> mask_;
};

// One transaction: the chosen index, the offered set, optional customer
// features.
struct Sample {
  int chosen = 0;
  Assortment assortment;
  std::vector<double> customer;
};

struct ChoiceDataset {
  Universe universe;
  std::vector<Sample> samples;
  // Static product features, n x d, when present.
  std::optional<Mat> product_features;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  int customer_dim() const {
    return samples.empty() ? 0 : static_cast<int>(samples.front().customer.size());
  }
};

struct Violation {
  std::size_t sample;  // index of the offending sample
  std::string rule;
};

// Returns every broken dataset invariant; never throws.
std::vector<Violation> validate_dataset(const ChoiceDataset& data);
// Throws DatasetError naming the first violation, if any.
void require_valid(const ChoiceDataset& data);

// Dense per-product probabilities; zero outside the conditioning assortment.
using ProbVector = std::vector<double>;

struct RevenueSpec {
  std::vector<double> mu;
  double max() const;
};

struct CapacityConstraint {
  std::vector<double> a;
  double c = 0.0;
  bool feasible(const Assortment& s) const;
  double load(const Assortment& s) const;
};

void check_revenue(const Universe& u, const RevenueSpec& rev);
void check_capacity(const Universe& u, const CapacityConstraint& cap);

}  // namespace choicenet
