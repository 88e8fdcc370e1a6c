#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace choicenet {

// One table cell: the per-trial values in trial order. Trials that failed
// are counted in `failures` and carry no value.
struct ReportCell {
  std::vector<double> values;
  int failures = 0;
  std::size_t count() const { return values.size(); }
  // Sum in trial order divided by count; NaN when empty.
  double mean() const;
};

class ReportTable {
 public:
  ReportTable() = default;
  ReportTable(std::string title, std::string metric, std::vector<std::string> rows,
              std::vector<std::string> cols);

  const std::string& title() const { return title_; }
  const std::string& metric() const { return metric_; }
  const std::vector<std::string>& rows() const { return rows_; }
  const std::vector<std::string>& cols() const { return cols_; }

  ReportCell& cell(std::size_t r, std::size_t c);
  const ReportCell& cell(std::size_t r, std::size_t c) const;
  // Lookup by label; throws DimensionError when absent.
  ReportCell& at(const std::string& row, const std::string& col);
  const ReportCell& at(const std::string& row, const std::string& col) const;
  double mean(const std::string& row, const std::string& col) const { return at(row, col).mean(); }

  // Long format: row,col,mean,count,failures,values (values ';'-separated,
  // shortest round-trip decimals).
  std::string to_csv() const;
  // Aligned grid of means with 4 decimals, each cell suffixed by its trial count.
  std::string to_text() const;
  nlohmann::json to_json() const;
  static ReportTable from_csv(const std::string& title, const std::string& metric, const std::string& csv);

 private:
  std::size_t index(const std::vector<std::string>& labels, const std::string& l) const;
  std::string title_;
  std::string metric_;
  std::vector<std::string> rows_;
  std::vector<std::string> cols_;
  std::vector<ReportCell> cells_;
};

// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// SHA-1 of "blob <size>\0<content>", as git computes it, in lowercase hex.
std::string git_blob_sha1(const std::string& content);

// Experiment manifest: the experiment settings, seeds and content hashes of every input and
// output file, enough to replay the run.
struct Manifest {
  std::string command;
  nlohmann::json spec = nlohmann::json::object();
  std::vector<std::string> inputs;   // paths, hashed when written
  std::vector<std::string> outputs;  // paths, hashed when written
  nlohmann::json to_json() const;
};
void write_manifest(const std::string& path, const Manifest& m);

// Writes <dir>/<stem>.csv, <dir>/<stem>.txt and <dir>/<stem>.manifest.json.
// Returns the paths written.
std::vector<std::string> write_report(const std::string& dir, const std::string& stem,
                                      const std::vector<const ReportTable*>& tables,
                                      Manifest manifest);

}  // namespace choicenet
