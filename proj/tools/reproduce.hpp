#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace choicenet::cli {

struct ReproduceOptions {
  std::string table;  // t5, t8, t9, t12, fig5, fig6
  bool full = false;  // full-scale grid instead of the desk preset
  std::optional<int> trials;
  int jobs = 1;
  std::uint64_t seed = 42;
  std::string out_dir;
  double time_limit = 300.0;  // per network MIP
  bool verbose = false;
  std::string command;  // recorded in the manifest
};

// Runs one table or figure and writes <out_dir>/<table>.{csv,txt,manifest.json}.
// Returns the paths written. Throws ParseError for an unknown table id.
std::vector<std::string> reproduce(const ReproduceOptions& opt);

}  // namespace choicenet::cli
