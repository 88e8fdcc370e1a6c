#include "choicenet/eval/model_store.hpp"

#include "choicenet/core/error.hpp"
#include "choicenet/eval/report.hpp"
#include "choicenet/neural/network.hpp"
#include "choicenet/neural/network_json.hpp"
#include "choicenet/synth/model_json.hpp"

namespace choicenet {

nlohmann::json any_model_to_json(const ChoiceModel& model) {
  if (const auto* nn = dynamic_cast<const NeuralChoiceModel*>(&model)) return network_to_json(nn->params());
  return model_to_json(model);
}

ModelPtr any_model_from_json(const nlohmann::json& j) {
  if (j.is_object() && j.value("kind", "") == "network")
    return std::make_shared<NeuralChoiceModel>(network_from_json(j));
  return model_from_json(j);
}

void save_model(const ChoiceModel& model, const std::string& path) {
  write_file_atomic(path, any_model_to_json(model).dump(2) + "\n");
}

ModelPtr load_model(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return any_model_from_json(j);
}

}  // namespace choicenet
