#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "choicenet/opt/mip.hpp"

namespace choicenet {

// LP names keep [A-Za-z0-9_.]; anything else becomes '_'. Names that start
// with a digit, '.', or 'e'/'E' plus a digit get a leading '_'. Collisions
// get "_2", "_3", ... in declaration order.
std::vector<std::string> sanitize_names(const std::vector<std::string>& names);

// Writes the instance in CPLEX LP text. A ratio objective is refused unless
// t is given, in which case the Dinkelbach objective at t is written.
void write_lp(std::ostream& out, const MipInstance& mip, std::optional<double> t = std::nullopt);
void export_lp(const MipInstance& mip, const std::string& path, std::optional<double> t = std::nullopt);

// Reads the subset of LP format written by write_lp: section keywords on
// their own lines, one bound per line, Binaries only (no Generals).
MipInstance read_lp(std::istream& in);
MipInstance read_lp_file(const std::string& path);

// Same variables (by name, kind, bounds), rows and objective. On mismatch,
// *why names the first difference.
bool equivalent(const MipInstance& a, const MipInstance& b, std::string* why = nullptr);

}  // namespace choicenet
