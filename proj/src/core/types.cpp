#include "choicenet/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "choicenet/core/error.hpp"

namespace choicenet {

Universe::Universe(int n, bool has_no_purchase)
    : n_(n), has_no_purchase_(has_no_purchase) {
  if (n < 2) throw DimensionError("universe needs at least 2 options, got " + std::to_string(n));
}

Assortment::Assortment(const Universe& u, std::vector<std::uint8_t> mask)
    : mask_(std::move(mask)) {
  if (static_cast<int>(mask_.size()) != u.size())
    throw DimensionError("assortment length " + std::to_string(mask_.size()) +
                         " does not match universe size " + std::to_string(u.size()));
  for (auto& b : mask_) {
    if (b > 1) throw DimensionError("assortment mask entries must be 0 or 1");
  }
  if (count() == 0) throw DimensionError("assortment is empty");
  if (u.has_no_purchase() && !contains(u.no_purchase()))
    throw DimensionError("assortment must offer the no-purchase option");
}

Assortment Assortment::of(const Universe& u, std::span<const int> products) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(u.size()), 0);
  for (int i : products) {
    if (i < 0 || i >= u.size()) throw DimensionError("product index out of range");
    mask[static_cast<std::size_t>(i)] = 1;
  }
  if (u.has_no_purchase()) mask[static_cast<std::size_t>(u.no_purchase())] = 1;
  return Assortment(u, std::move(mask));
}

Assortment Assortment::full(const Universe& u) {
  return Assortment(u, std::vector<std::uint8_t>(static_cast<std::size_t>(u.size()), 1));
}

Assortment Assortment::no_purchase_only(const Universe& u) {
  if (!u.has_no_purchase()) throw DimensionError("universe has no no-purchase option");
  return of(u, {});
}

Assortment Assortment::from_bits(const Universe& u, std::uint64_t bits) {
  if (u.size() > 64) throw DimensionError("from_bits supports n <= 64");
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(u.size()));
  for (int i = 0; i < u.size(); ++i) mask[static_cast<std::size_t>(i)] = (bits >> i) & 1U;
  return Assortment(u, std::move(mask));
}

Assortment Assortment::parse(const Universe& u, std::string_view text) {
  std::vector<std::uint8_t> mask;
  mask.reserve(text.size());
  for (char ch : text) {
    if (ch == '0' || ch == '1') {
      mask.push_back(static_cast<std::uint8_t>(ch - '0'));
    } else {
      throw ParseError("assortment string must contain only '0'/'1'");
    }
  }
  return Assortment(u, std::move(mask));
}

int Assortment::count() const {
  return static_cast<int>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::vector<int> Assortment::members() const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i)
    if (mask_[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

std::string Assortment::to_string() const {
  std::string s(mask_.size(), '0');
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i]) s[i] = '1';
  return s;
}

std::uint64_t Assortment::bits() const {
  if (mask_.size() > 64) throw DimensionError("bits() supports n <= 64");
  std::uint64_t b = 0;
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i]) b |= (1ULL << i);
  return b;
}

std::vector<Violation> validate_dataset(const ChoiceDataset& data) {
  std::vector<Violation> out;
  const Universe& u = data.universe;
  const std::size_t dcust = data.samples.empty() ? 0 : data.samples.front().customer.size();
  if (data.product_features && data.product_features->rows() != u.size()) {
    out.push_back({0, "product feature matrix has " +
                          std::to_string(data.product_features->rows()) +
                          " rows, universe has " + std::to_string(u.size())});
  }
  for (std::size_t k = 0; k < data.samples.size(); ++k) {
    const Sample& s = data.samples[k];
    const auto& mask = s.assortment.mask();
    if (static_cast<int>(mask.size()) != u.size()) {
      out.push_back({k, "assortment length " + std::to_string(mask.size()) +
                            " != universe size " + std::to_string(u.size())});
      continue;
    }
    if (s.assortment.count() == 0) out.push_back({k, "empty assortment"});
    if (u.has_no_purchase() && !s.assortment.contains(u.no_purchase()))
      out.push_back({k, "no-purchase option not offered"});
    if (s.chosen < 0 || s.chosen >= u.size()) {
      out.push_back({k, "chosen index " + std::to_string(s.chosen) + " out of range"});
    } else if (!s.assortment.contains(s.chosen)) {
      out.push_back({k, "chosen product " + std::to_string(s.chosen) + " not in assortment"});
    }
    if (s.customer.size() != dcust) {
      out.push_back({k, "customer feature dimension " + std::to_string(s.customer.size()) +
                            " != " + std::to_string(dcust)});
    }
    for (double x : s.customer) {
      if (!std::isfinite(x)) {
        out.push_back({k, "non-finite customer feature"});
        break;
      }
    }
  }
  return out;
}

void require_valid(const ChoiceDataset& data) {
  auto v = validate_dataset(data);
  if (!v.empty())
    throw DatasetError("sample " + std::to_string(v.front().sample) + ": " + v.front().rule);
}

double RevenueSpec::max() const {
  return mu.empty() ? 0.0 : *std::max_element(mu.begin(), mu.end());
}

double CapacityConstraint::load(const Assortment& s) const {
  double total = 0.0;
  for (int i = 0; i < s.size(); ++i)
    if (s.contains(i)) total += a[static_cast<std::size_t>(i)];
  return total;
}

bool CapacityConstraint::feasible(const Assortment& s) const {
  return load(s) <= c + 1e-9 * std::max(1.0, std::abs(c));
}

void check_revenue(const Universe& u, const RevenueSpec& rev) {
  if (static_cast<int>(rev.mu.size()) != u.size())
    throw DimensionError("revenue vector length does not match universe");
  for (double m : rev.mu)
    if (!std::isfinite(m)) throw DimensionError("revenue entries must be finite");
  if (u.has_no_purchase() && rev.mu[static_cast<std::size_t>(u.no_purchase())] != 0.0)
    throw DimensionError("no-purchase revenue must be 0");
}

void check_capacity(const Universe& u, const CapacityConstraint& cap) {
  if (static_cast<int>(cap.a.size()) != u.size())
    throw DimensionError("capacity vector length does not match universe");
  for (double x : cap.a)
    if (!(x >= 0.0) || !std::isfinite(x)) throw DimensionError("capacity coefficients must be nonnegative");
  if (u.has_no_purchase() && cap.a[static_cast<std::size_t>(u.no_purchase())] != 0.0)
    throw DimensionError("no-purchase capacity coefficient must be 0");
  if (!(cap.c > 0.0)) throw DimensionError("capacity budget must be positive");
}

}  // namespace choicenet
