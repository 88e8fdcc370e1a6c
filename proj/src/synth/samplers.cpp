#include "choicenet/synth/samplers.hpp"

#include <algorithm>
#include <numeric>

#include "choicenet/core/error.hpp"

namespace choicenet {
namespace {

// Products (non-no-purchase indices) in [lo, hi).
std::vector<int> products_in(const Universe& u, int lo, int hi) {
  std::vector<int> out;
  for (int i = lo; i < hi; ++i)
    if (!u.is_no_purchase(i)) out.push_back(i);
  return out;
}

// Uniform k-subset of pool via partial Fisher-Yates.
std::vector<int> pick(std::vector<int> pool, int k, Rng& rng) {
  for (int j = 0; j < k; ++j) {
    std::uniform_int_distribution<int> d(j, static_cast<int>(pool.size()) - 1);
    std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(d(rng))]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

Assortment finish(const Universe& u, const std::vector<int>& chosen) {
  if (chosen.empty() && !u.has_no_purchase())
    throw InvariantError("sampler produced an empty assortment");
  return Assortment::of(u, chosen);
}

}  // namespace

SamplerKind parse_sampler_kind(std::string_view name) {
  if (name == "uniform-size" || name == "D-1" || name == "d1") return SamplerKind::kUniformSize;
  if (name == "bernoulli-half" || name == "D-2" || name == "d2") return SamplerKind::kBernoulliHalf;
  if (name == "half-blocked" || name == "D-3" || name == "d3") return SamplerKind::kHalfBlocked;
  if (name == "window-third" || name == "D-4" || name == "d4") return SamplerKind::kWindowThird;
  if (name == "fixed-size" || name == "fixed") return SamplerKind::kFixedSize;
  throw ParseError("unknown sampler kind '" + std::string(name) + "'");
}

std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::kUniformSize: return "uniform-size";
    case SamplerKind::kBernoulliHalf: return "bernoulli-half";
    case SamplerKind::kHalfBlocked: return "half-blocked";
    case SamplerKind::kWindowThird: return "window-third";
    case SamplerKind::kFixedSize: return "fixed-size";
  }
  return "?";
}

AssortmentSampler::AssortmentSampler(SamplerKind kind, Universe u, int k)
    : kind_(kind), u_(u), k_(k) {
  const int np = u_.num_products();
  switch (kind_) {
    case SamplerKind::kHalfBlocked:
      if (u_.size() % 2 != 0) throw DimensionError("half-blocked sampler needs an even universe size");
      break;
    case SamplerKind::kFixedSize:
      if (k_ < 0 || k_ > np || (k_ == 0 && !u_.has_no_purchase()))
        throw DimensionError("fixed-size k out of range");
      break;
    case SamplerKind::kWindowThird:
      if (u_.size() / 3 < 1 || u_.size() / 3 + 1 > np)
        throw DimensionError("universe too small for the window-third sampler");
      break;
    default:
      break;
  }
}

Assortment AssortmentSampler::draw(Rng& rng) const {
  const int n = u_.size();
  switch (kind_) {
    case SamplerKind::kUniformSize: {
      auto pool = products_in(u_, 0, n);
      std::uniform_int_distribution<int> size(1, static_cast<int>(pool.size()));
      return finish(u_, pick(std::move(pool), size(rng), rng));
    }
    case SamplerKind::kBernoulliHalf: {
      std::vector<int> chosen;
      for (;;) {
        chosen.clear();
        for (int i = 0; i < n; ++i)
          if (!u_.is_no_purchase(i) && (rng() >> 63)) chosen.push_back(i);
        if (!chosen.empty() || u_.has_no_purchase()) break;
      }
      return finish(u_, chosen);
    }
    case SamplerKind::kHalfBlocked: {
      const int half = n / 2;
      const bool block_first = (rng() >> 63) != 0;
      auto pool = block_first ? products_in(u_, half, n) : products_in(u_, 0, half);
      std::uniform_int_distribution<int> size(1, static_cast<int>(pool.size()));
      return finish(u_, pick(std::move(pool), size(rng), rng));
    }
    case SamplerKind::kWindowThird: {
      const int lo = n / 3;
      std::uniform_int_distribution<int> size(lo, lo + 1);
      return finish(u_, pick(products_in(u_, 0, n), size(rng), rng));
    }
    case SamplerKind::kFixedSize:
      return finish(u_, pick(products_in(u_, 0, n), k_, rng));
  }
  throw InvariantError("unreachable sampler kind");
}

std::vector<Assortment> sample_assortments(const AssortmentSampler& sampler,
                                           std::size_t m, std::uint64_t seed) {
  if (m == 0) throw DimensionError("sample count must be at least 1");
  Rng rng(seed);
  std::vector<Assortment> out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) out.push_back(sampler.draw(rng));
  return out;
}

}  // namespace choicenet
