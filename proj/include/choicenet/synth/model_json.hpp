#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "choicenet/core/choice_model.hpp"

namespace choicenet {

nlohmann::json universe_to_json(const Universe& u);
Universe universe_from_json(const nlohmann::json& j);

// Classical models (mnl, mccm, np, mmnl, feature-mnl, feature-mccm). Throws
// UnsupportedError for other model types.
nlohmann::json model_to_json(const ChoiceModel& model);
std::unique_ptr<ChoiceModel> model_from_json(const nlohmann::json& j);

nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j);

}  // namespace choicenet
