#pragma once

#include <iosfwd>
#include <json.hpp>

#include "choicenet/neural/network.hpp"
#include "choicenet/neural/train.hpp"

namespace choicenet {

nlohmann::json network_to_json(const NetworkParams& p);
NetworkParams network_from_json(const nlohmann::json& j);

// epoch,train_ce,val_ce
void write_train_log(std::ostream& out, const std::vector<EpochLog>& log);

}  // namespace choicenet
