#include "choicenet/neural/network_json.hpp"

#include <cmath>
#include <ostream>

#include "choicenet/core/csv_io.hpp"
#include "choicenet/core/error.hpp"
#include "choicenet/synth/model_json.hpp"

namespace choicenet {

using nlohmann::json;

namespace {

json layers_to_json(const std::vector<Layer>& ls) {
  json arr = json::array();
  for (const Layer& l : ls) {
    std::vector<double> w(l.w.data(), l.w.data() + l.w.size());
    arr.push_back(json{{"rows", l.out()}, {"cols", l.in()}, {"w", w},
                       {"b", std::vector<double>(l.b.data(), l.b.data() + l.b.size())}});
  }
  return arr;
}

Layer layer_from_json(const json& j) {
  const int rows = j.at("rows").get<int>(), cols = j.at("cols").get<int>();
  auto w = j.at("w").get<std::vector<double>>();
  auto b = j.at("b").get<std::vector<double>>();
  if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows)
    throw ParseError("layer array sizes do not match its shape");
  Layer l{Mat(rows, cols), Vec(rows)};
  std::copy(w.begin(), w.end(), l.w.data());  // row-major
  std::copy(b.begin(), b.end(), l.b.data());
  return l;
}

std::vector<Layer> layers_from_json(const json& j) {
  std::vector<Layer> out;
  for (const json& l : j) out.push_back(layer_from_json(l));
  return out;
}

}  // namespace

json network_to_json(const NetworkParams& p) {
  json j;
  j["kind"] = "network";
  j["arch"] = to_string(p.arch);
  j["universe"] = universe_to_json(p.universe());
  std::vector<int> dims;
  dims.push_back(p.layers.empty() ? (p.enc && p.arch == Arch::kRasn ? 2 * p.n : p.n) : p.layers.front().in());
  for (const Layer& l : p.layers) dims.push_back(l.out());
  j["dims"] = dims;
  j["layers"] = layers_to_json(p.layers);
  if (p.enc) j["encoder"] = json{{"product", layers_to_json(p.enc->product)}, {"customer", layers_to_json(p.enc->customer)}};
  if (p.head) j["head"] = layers_to_json({*p.head})[0];
  return j;
}

NetworkParams network_from_json(const json& j) {
  try {
    if (j.at("kind").get<std::string>() != "network") throw ParseError("not a network document");
    NetworkParams p;
    p.arch = parse_arch(j.at("arch").get<std::string>());
    Universe u = universe_from_json(j.at("universe"));
    p.n = u.size();
    p.has_no_purchase = u.has_no_purchase();
    p.layers = layers_from_json(j.at("layers"));
    if (j.contains("encoder"))
      p.enc = FeatureEncoderParams{layers_from_json(j["encoder"].at("product")),
                                   layers_from_json(j["encoder"].at("customer"))};
    if (j.contains("head")) p.head = layer_from_json(j["head"]);
    p.validate();
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("network JSON: ") + e.what());
  }
}

void write_train_log(std::ostream& out, const std::vector<EpochLog>& log) {
  out << "epoch,train_ce,val_ce\n";
  for (const EpochLog& r : log) {
    out << r.epoch << ',' << format_double(r.train_ce) << ',';
    if (std::isnan(r.val_ce)) out << "nan";
    else out << format_double(r.val_ce);
    out << '\n';
  }
}

}  // namespace choicenet
