#pragma once

#include <string>

#include <json.hpp>

#include "choicenet/core/choice_model.hpp"

namespace choicenet {

// Any model this library fits: classical models and networks ("kind":
// "network"). Throws UnsupportedError for other model types.
nlohmann::json any_model_to_json(const ChoiceModel& model);
ModelPtr any_model_from_json(const nlohmann::json& j);

void save_model(const ChoiceModel& model, const std::string& path);
ModelPtr load_model(const std::string& path);

}  // namespace choicenet
