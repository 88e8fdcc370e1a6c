#include "choicenet/synth/model_json.hpp"

#include <cmath>
#include <limits>

#include "choicenet/core/error.hpp"
#include "choicenet/synth/models.hpp"

namespace choicenet {

using nlohmann::json;

json universe_to_json(const Universe& u) {
  return json{{"n", u.size()}, {"no_purchase", u.has_no_purchase()}};
}

Universe universe_from_json(const json& j) {
  return Universe(j.at("n").get<int>(), j.value("no_purchase", true));
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

Mat mat_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& r = j[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != cols) throw ParseError("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = r[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

namespace {

json utilities_to_json(const std::vector<double>& u) {
  // -inf marks an unidentified utility; JSON has no infinity literal.
  json arr = json::array();
  for (double x : u) {
    if (std::isinf(x) && x < 0) arr.push_back(nullptr);
    else arr.push_back(x);
  }
  return arr;
}

std::vector<double> utilities_from_json(const json& j) {
  std::vector<double> u;
  for (const json& x : j) u.push_back(x.is_null() ? -std::numeric_limits<double>::infinity() : x.get<double>());
  return u;
}

}  // namespace

json model_to_json(const ChoiceModel& model) {
  json j;
  j["kind"] = model.kind();
  j["universe"] = universe_to_json(model.universe());
  if (auto* m = dynamic_cast<const MnlModel*>(&model)) {
    j["u"] = utilities_to_json(m->utilities());
  } else if (auto* m = dynamic_cast<const MccmModel*>(&model)) {
    j["lambda"] = std::vector<double>(m->lambda().data(), m->lambda().data() + m->lambda().size());
    j["rho"] = mat_to_json(m->rho());
  } else if (auto* m = dynamic_cast<const NpModel*>(&model)) {
    j["perms"] = m->perms();
    j["weights"] = m->weights();
  } else if (auto* m = dynamic_cast<const MmnlModel*>(&model)) {
    j["alpha"] = m->alpha();
    j["u"] = mat_to_json(m->utilities());
  } else if (auto* m = dynamic_cast<const FeatureMnlModel*>(&model)) {
    j["beta"] = m->beta();
  } else if (auto* m = dynamic_cast<const FeatureMccmModel*>(&model)) {
    j["beta"] = m->beta();
    j["A"] = mat_to_json(m->a());
  } else {
    throw UnsupportedError("no JSON schema for model kind '" + model.kind() + "'");
  }
  return j;
}

std::unique_ptr<ChoiceModel> model_from_json(const json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const Universe u = universe_from_json(j.at("universe"));
    if (kind == "mnl") return std::make_unique<MnlModel>(u, utilities_from_json(j.at("u")));
    if (kind == "mccm") {
      auto lam = j.at("lambda").get<std::vector<double>>();
      return std::make_unique<MccmModel>(u, Eigen::Map<Vec>(lam.data(), static_cast<Eigen::Index>(lam.size())),
                                         mat_from_json(j.at("rho")));
    }
    if (kind == "np")
      return std::make_unique<NpModel>(u, j.at("perms").get<std::vector<std::vector<int>>>(),
                                       j.at("weights").get<std::vector<double>>());
    if (kind == "mmnl")
      return std::make_unique<MmnlModel>(u, j.at("alpha").get<std::vector<double>>(), mat_from_json(j.at("u")));
    if (kind == "feature-mnl")
      return std::make_unique<FeatureMnlModel>(u, j.at("beta").get<std::vector<double>>());
    if (kind == "feature-mccm")
      return std::make_unique<FeatureMccmModel>(u, j.at("beta").get<std::vector<double>>(), mat_from_json(j.at("A")));
    throw UnsupportedError("unknown model kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ParseError(std::string("model JSON: ") + e.what());
  }
}

}  // namespace choicenet
