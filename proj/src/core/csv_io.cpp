#include "choicenet/core/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "choicenet/core/error.hpp"

namespace choicenet {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    auto b = f.find_first_not_of(" \t");
    auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("not a number: '" + s + "'", line);
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ParseError("not an integer: '" + s + "'", line);
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

ChoiceDataset read_transactions(std::istream& in, bool has_no_purchase) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty transaction file", 1);
  ++lineno;
  auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "chosen" || header[1] != "assortment")
    throw ParseError("header must start with 'chosen,assortment'", lineno);
  const std::size_t dcust = header.size() - 2;
  for (std::size_t j = 0; j < dcust; ++j) {
    if (header[j + 2] != "cf_" + std::to_string(j))
      throw ParseError("expected column cf_" + std::to_string(j), lineno);
  }
  ChoiceDataset data;
  bool have_universe = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (fields.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()), lineno);
    if (!have_universe) {
      try {
        data.universe = Universe(static_cast<int>(fields[1].size()), has_no_purchase);
      } catch (const Error& e) {
        throw ParseError(e.what(), lineno);
      }
      have_universe = true;
    }
    Sample s;
    s.chosen = parse_int(fields[0], lineno);
    try {
      s.assortment = Assortment::parse(data.universe, fields[1]);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    s.customer.reserve(dcust);
    for (std::size_t j = 0; j < dcust; ++j) s.customer.push_back(parse_number(fields[j + 2], lineno));
    if (s.chosen < 0 || s.chosen >= data.universe.size() || !s.assortment.contains(s.chosen))
      throw ParseError("chosen product " + fields[0] + " is not in the assortment", lineno);
    data.samples.push_back(std::move(s));
  }
  return data;
}

ChoiceDataset read_transactions_file(const std::string& path, bool has_no_purchase) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_transactions(in, has_no_purchase);
}

void write_transactions(std::ostream& out, const ChoiceDataset& data) {
  out << "chosen,assortment";
  const int d = data.customer_dim();
  for (int j = 0; j < d; ++j) out << ",cf_" << j;
  out << '\n';
  for (const Sample& s : data.samples) {
    out << s.chosen << ',' << s.assortment.to_string();
    for (double x : s.customer) out << ',' << format_double(x);
    out << '\n';
  }
}

Mat read_product_features(std::istream& in, int n) {
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) throw ParseError("empty product feature file", 1);
  ++lineno;
  auto header = split_csv(line);
  if (header.empty() || header[0] != "product") throw ParseError("header must start with 'product'", lineno);
  const int d = static_cast<int>(header.size()) - 1;
  Mat f = Mat::Zero(n, d);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != d + 1) throw ParseError("wrong field count", lineno);
    int i = parse_int(fields[0], lineno);
    if (i < 0 || i >= n) throw ParseError("product index out of range", lineno);
    if (seen[static_cast<std::size_t>(i)]) throw ParseError("duplicate product row", lineno);
    seen[static_cast<std::size_t>(i)] = true;
    for (int j = 0; j < d; ++j) f(i, j) = parse_number(fields[static_cast<std::size_t>(j) + 1], lineno);
  }
  return f;
}

void write_product_features(std::ostream& out, const Mat& features) {
  out << "product";
  for (Eigen::Index j = 0; j < features.cols(); ++j) out << ",pf_" << j;
  out << '\n';
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < features.cols(); ++j) out << ',' << format_double(features(i, j));
    out << '\n';
  }
}

}  // namespace choicenet
