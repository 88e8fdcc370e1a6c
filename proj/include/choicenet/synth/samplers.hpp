#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "choicenet/core/rng.hpp"
#include "choicenet/core/types.hpp"

namespace choicenet {

enum class SamplerKind {
  kUniformSize,    // D-1: size uniform on 1..#products, then a uniform subset
  kBernoulliHalf,  // D-2: each product offered with probability 1/2
  kHalfBlocked,    // D-3: one half of the index range is never offered
  kWindowThird,    // D-4: floor(n/3) or floor(n/3)+1 products
  kFixedSize,      // exactly k products
};

SamplerKind parse_sampler_kind(std::string_view name);
std::string to_string(SamplerKind kind);

// Draws assortments over a universe. The no-purchase option, when declared,
// is always offered and never counted as a product.
class AssortmentSampler {
 public:
  AssortmentSampler(SamplerKind kind, Universe u, int k = 0);

  SamplerKind kind() const { return kind_; }
  const Universe& universe() const { return u_; }
  int k() const { return k_; }
  Assortment draw(Rng& rng) const;

 private:
  SamplerKind kind_;
  Universe u_;
  int k_;
};

std::vector<Assortment> sample_assortments(const AssortmentSampler& sampler,
                                           std::size_t m, std::uint64_t seed);

}  // namespace choicenet
