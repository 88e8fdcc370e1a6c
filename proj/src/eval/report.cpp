#include "choicenet/eval/report.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/evp.h>

#include "choicenet/core/csv_io.hpp"
#include "choicenet/core/error.hpp"

namespace choicenet {

namespace fs = std::filesystem;

double ReportCell::mean() const {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

ReportTable::ReportTable(std::string title, std::string metric, std::vector<std::string> rows,
                         std::vector<std::string> cols)
    : title_(std::move(title)), metric_(std::move(metric)), rows_(std::move(rows)), cols_(std::move(cols)),
      cells_(rows_.size() * cols_.size()) {}

ReportCell& ReportTable::cell(std::size_t r, std::size_t c) {
  if (r >= rows_.size() || c >= cols_.size()) throw DimensionError("report cell out of range");
  return cells_[r * cols_.size() + c];
}

const ReportCell& ReportTable::cell(std::size_t r, std::size_t c) const {
  if (r >= rows_.size() || c >= cols_.size()) throw DimensionError("report cell out of range");
  return cells_[r * cols_.size() + c];
}

std::size_t ReportTable::index(const std::vector<std::string>& labels, const std::string& l) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == l) return i;
  throw DimensionError("no report label '" + l + "' in " + title_);
}

ReportCell& ReportTable::at(const std::string& row, const std::string& col) {
  return cell(index(rows_, row), index(cols_, col));
}

const ReportCell& ReportTable::at(const std::string& row, const std::string& col) const {
  return cell(index(rows_, row), index(cols_, col));
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_q = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_q) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_q = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_q = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt_mean(double v) {
  if (std::isnan(v)) return "nan";
  return format_double(v);
}

}  // namespace

std::string ReportTable::to_csv() const {
  std::ostringstream out;
  out << "row,col,mean,count,failures,values\n";
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      const ReportCell& x = cell(r, c);
      out << quote(rows_[r]) << ',' << quote(cols_[c]) << ',' << fmt_mean(x.mean()) << ',' << x.count() << ','
          << x.failures << ',';
      for (std::size_t k = 0; k < x.values.size(); ++k) out << (k ? ";" : "") << format_double(x.values[k]);
      out << '\n';
    }
  return out.str();
}

ReportTable ReportTable::from_csv(const std::string& title, const std::string& metric, const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "row,col,mean,count,failures,values")
    throw ParseError("not a report CSV", 1);
  struct Entry {
    std::string row, col;
    ReportCell cell;
  };
  std::vector<Entry> entries;
  std::vector<std::string> rows, cols;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != 6) throw ParseError("expected 6 fields", lineno);
    Entry e{f[0], f[1], {}};
    e.cell.failures = std::stoi(f[4]);
    std::istringstream vs(f[5]);
    std::string v;
    while (std::getline(vs, v, ';'))
      if (!v.empty()) e.cell.values.push_back(std::strtod(v.c_str(), nullptr));
    if (std::find(rows.begin(), rows.end(), e.row) == rows.end()) rows.push_back(e.row);
    if (std::find(cols.begin(), cols.end(), e.col) == cols.end()) cols.push_back(e.col);
    entries.push_back(std::move(e));
  }
  ReportTable t(title, metric, rows, cols);
  for (Entry& e : entries) t.at(e.row, e.col) = std::move(e.cell);
  return t;
}

std::string ReportTable::to_text() const {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> head{metric_};
  head.insert(head.end(), cols_.begin(), cols_.end());
  grid.push_back(head);
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    std::vector<std::string> line{rows_[r]};
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      const ReportCell& x = cell(r, c);
      std::ostringstream s;
      if (x.values.empty()) s << "-";
      else s << std::fixed << std::setprecision(4) << x.mean();
      s << " (" << x.count();
      if (x.failures) s << ", " << x.failures << " failed";
      s << ")";
      line.push_back(s.str());
    }
    grid.push_back(line);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& line : grid)
    for (std::size_t k = 0; k < line.size(); ++k) width[k] = std::max(width[k], line[k].size());
  std::ostringstream out;
  out << title_ << '\n';
  for (const auto& line : grid) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (k) out << "  ";
      if (k == 0) out << std::left << std::setw(static_cast<int>(width[k])) << line[k];
      else out << std::right << std::setw(static_cast<int>(width[k])) << line[k];
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::json ReportTable::to_json() const {
  nlohmann::json j;
  j["title"] = title_;
  j["metric"] = metric_;
  j["rows"] = rows_;
  j["cols"] = cols_;
  auto cells = nlohmann::json::array();
  for (std::size_t r = 0; r < rows_.size(); ++r)
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      const ReportCell& x = cell(r, c);
      nlohmann::json e{{"row", rows_[r]}, {"col", cols_[c]}, {"count", x.count()}, {"failures", x.failures},
                       {"values", x.values}};
      if (!x.values.empty()) e["mean"] = x.mean();
      cells.push_back(std::move(e));
    }
  j["cells"] = std::move(cells);
  return j;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw Error("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move " + tmp.string() + " to " + path + ": " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string git_blob_sha1(const std::string& content) {
  const std::string data = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw Error("SHA-1 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return out.str();
}

nlohmann::json Manifest::to_json() const {
  auto files = [](const std::vector<std::string>& paths) {
    auto arr = nlohmann::json::array();
    for (const std::string& p : paths) {
      nlohmann::json e{{"path", p}};
      if (fs::exists(p)) e["sha1"] = git_blob_sha1(read_file(p));
      arr.push_back(std::move(e));
    }
    return arr;
  };
  nlohmann::json j;
  j["command"] = command;
  j["spec"] = spec;
  j["spec_sha1"] = git_blob_sha1(spec.dump());
  j["inputs"] = files(inputs);
  j["outputs"] = files(outputs);
  return j;
}

void write_manifest(const std::string& path, const Manifest& m) {
  write_file_atomic(path, m.to_json().dump(2) + "\n");
}

std::vector<std::string> write_report(const std::string& dir, const std::string& stem,
                                      const std::vector<const ReportTable*>& tables, Manifest manifest) {
  std::string csv, text;
  for (const ReportTable* t : tables) {
    if (tables.size() == 1) csv = t->to_csv();
    text += t->to_text() + "\n";
  }
  std::vector<std::string> paths;
  if (tables.size() == 1) {
    paths.push_back((fs::path(dir) / (stem + ".csv")).string());
    write_file_atomic(paths.back(), csv);
  } else {
    for (const ReportTable* t : tables) {
      std::string name = t->title();
      for (char& c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
      paths.push_back((fs::path(dir) / (stem + "_" + name + ".csv")).string());
      write_file_atomic(paths.back(), t->to_csv());
    }
  }
  paths.push_back((fs::path(dir) / (stem + ".txt")).string());
  write_file_atomic(paths.back(), text);
  manifest.outputs.insert(manifest.outputs.end(), paths.begin(), paths.end());
  const std::string mpath = (fs::path(dir) / (stem + ".manifest.json")).string();
  write_manifest(mpath, manifest);
  paths.push_back(mpath);
  return paths;
}

}  // namespace choicenet
