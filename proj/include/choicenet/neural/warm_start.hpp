#pragma once

#include <cstdint>

#include "choicenet/neural/network.hpp"

namespace choicenet {

enum class NewEntryInit { kStandard, kZero };

// Enlarges a feature-free network from old.n to n_new options. Products keep
// their indices, the no-purchase option moves to the new last index, and the
// old weights are copied into the matching positions. Entries touching the
// new products are drawn like a fresh layer (kStandard) or set to 0 (kZero).
NetworkParams warm_start_augment(const NetworkParams& old, int n_new, std::uint64_t seed,
                                 NewEntryInit init = NewEntryInit::kStandard);

}  // namespace choicenet
