#include "choicenet/neural/warm_start.hpp"

#include "choicenet/core/error.hpp"

namespace choicenet {

NetworkParams warm_start_augment(const NetworkParams& old, int n_new, std::uint64_t seed,
                                 NewEntryInit init) {
  old.validate();
  if (old.enc) throw UnsupportedError("warm start supports feature-free networks only");
  if (n_new <= old.n) throw UnsupportedError("warm start only enlarges the universe");
  const int n_old = old.n;
  // Old index -> new index for universe-sized dimensions.
  auto remap = [&](int i) { return (old.has_no_purchase && i == n_old - 1) ? n_new - 1 : i; };
  Rng rng(seed);

  NetworkParams p;
  p.arch = old.arch;
  p.n = n_new;
  p.has_no_purchase = old.has_no_purchase;
  const std::size_t depth = old.layers.size();
  for (std::size_t l = 0; l < depth; ++l) {
    const Layer& src = old.layers[l];
    const bool rows_universe = old.arch == Arch::kRasn || l + 1 == depth;
    const bool cols_universe = old.arch == Arch::kRasn || l == 0;
    const int out = rows_universe ? n_new : src.out();
    const int in = cols_universe ? n_new : src.in();
    Layer dst{Mat::Zero(out, in), Vec::Zero(out)};
    if (init == NewEntryInit::kStandard) glorot_fill(dst, rng);
    for (int r = 0; r < src.out(); ++r) {
      const int rr = rows_universe ? remap(r) : r;
      dst.b(rr) = src.b(r);
      for (int c = 0; c < src.in(); ++c) dst.w(rr, cols_universe ? remap(c) : c) = src.w(r, c);
    }
    p.layers.push_back(std::move(dst));
  }
  p.validate();
  return p;
}

}  // namespace choicenet
