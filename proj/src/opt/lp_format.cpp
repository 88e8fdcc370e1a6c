#include "choicenet/opt/lp_format.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "choicenet/core/csv_io.hpp"
#include "choicenet/core/error.hpp"
#include "choicenet/opt/nn_mip.hpp"

namespace choicenet {
namespace {

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return format_double(x);
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

// Appends " + c name" / " - c name", dropping a unit coefficient.
void put_term(std::ostream& out, double c, const std::string& name, bool first) {
  if (c < 0) out << (first ? "-" : " -") << ' ';
  else if (!first) out << " + ";
  const double a = std::abs(c);
  if (a != 1.0) out << num(a) << ' ';
  out << name;
}

void write_terms(std::ostream& out, const std::vector<std::pair<int, double>>& terms,
                 const std::vector<std::string>& names) {
  bool first = true;
  int on_line = 0;
  for (auto [j, c] : terms) {
    if (on_line == 8) {
      out << "\n  ";
      on_line = 0;
    }
    put_term(out, c, names[static_cast<std::size_t>(j)], first);
    first = false;
    ++on_line;
  }
  if (first) out << "0 " << names.front();
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Tok {
  enum Kind { kName, kNum, kOp } kind;
  std::string text;
  double value = 0.0;
  int line = 0;
};

std::vector<Tok> tokenize(const std::string& text, int line) {
  std::vector<Tok> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      const char* begin = text.c_str() + i;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      out.push_back({Tok::kNum, std::string(begin, static_cast<std::size_t>(end - begin)), v, line});
      i += static_cast<std::size_t>(end - begin);
      continue;
    }
    if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      if (i + 1 < text.size() && (text[i + 1] == '=' || text[i + 1] == '<' || text[i + 1] == '>')) op += text[++i];
      ++i;
      if (op == "=<" || op == "<") op = "<=";
      if (op == "=>" || op == ">") op = ">=";
      out.push_back({Tok::kOp, op, 0.0, line});
      continue;
    }
    if (std::string("+-[]^*/:").find(c) != std::string::npos) {
      out.push_back({Tok::kOp, std::string(1, c), 0.0, line});
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
           std::string("+-[]^*/:<>=").find(text[j]) == std::string::npos)
      ++j;
    std::string name = text.substr(i, j - i);
    const std::string l = lower(name);
    if (l == "inf" || l == "infinity") out.push_back({Tok::kNum, name, kInf, line});
    else out.push_back({Tok::kName, name, 0.0, line});
    i = j;
  }
  return out;
}

class Reader {
 public:
  MipInstance mip;

  int var(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    const int j = mip.add_var(name, VarKind::kContinuous, 0.0, kInf);
    index_[name] = j;
    return j;
  }

  // Linear (and bracketed quadratic) expression starting at toks[pos]; stops
  // at a sense operator or the end.
  void expression(const std::vector<Tok>& t, std::size_t& pos, std::map<int, double>& lin,
                  std::vector<QuadTerm>* quad, double* constant) {
    while (pos < t.size()) {
      if (t[pos].kind == Tok::kOp && (t[pos].text == "<=" || t[pos].text == ">=" || t[pos].text == "=")) return;
      double sign = 1.0;
      while (pos < t.size() && t[pos].kind == Tok::kOp && (t[pos].text == "+" || t[pos].text == "-")) {
        if (t[pos].text == "-") sign = -sign;
        ++pos;
      }
      if (pos >= t.size()) throw ParseError("dangling sign", t.back().line);
      if (t[pos].kind == Tok::kOp && t[pos].text == "[") {
        if (!quad) throw ParseError("quadratic terms are only allowed in the objective", t[pos].line);
        ++pos;
        parse_quad(t, pos, sign, *quad);
        continue;
      }
      double coef = sign;
      if (t[pos].kind == Tok::kNum) {
        coef *= t[pos].value;
        ++pos;
        if (pos >= t.size() || t[pos].kind != Tok::kName) {
          if (!constant) throw ParseError("constant term in a constraint body", t[pos - 1].line);
          *constant += coef;
          continue;
        }
      }
      if (pos >= t.size() || t[pos].kind != Tok::kName)
        throw ParseError("expected a variable name", pos < t.size() ? t[pos].line : t.back().line);
      lin[var(t[pos].text)] += coef;
      ++pos;
    }
  }

  void parse_quad(const std::vector<Tok>& t, std::size_t& pos, double outer, std::vector<QuadTerm>& quad) {
    while (true) {
      if (pos >= t.size()) throw ParseError("unterminated quadratic block", t.back().line);
      if (t[pos].kind == Tok::kOp && t[pos].text == "]") {
        ++pos;
        break;
      }
      double sign = 1.0;
      while (t[pos].kind == Tok::kOp && (t[pos].text == "+" || t[pos].text == "-")) {
        if (t[pos].text == "-") sign = -sign;
        ++pos;
      }
      double coef = sign;
      if (t[pos].kind == Tok::kNum) coef *= t[pos++].value;
      if (t[pos].kind != Tok::kName) throw ParseError("expected a variable in quadratic term", t[pos].line);
      const int a = var(t[pos++].text);
      int b;
      if (t[pos].kind == Tok::kOp && t[pos].text == "^") {
        ++pos;
        if (t[pos].kind != Tok::kNum || t[pos].value != 2.0) throw ParseError("only squares are supported", t[pos].line);
        ++pos;
        b = a;
      } else if (t[pos].kind == Tok::kOp && t[pos].text == "*") {
        ++pos;
        if (t[pos].kind != Tok::kName) throw ParseError("expected a variable after '*'", t[pos].line);
        b = var(t[pos++].text);
      } else {
        throw ParseError("expected '^ 2' or '* name' in quadratic term", t[pos].line);
      }
      quad.push_back({a, b, outer * coef});
    }
    // The objective's bracket is always divided by 2.
    if (pos + 1 >= t.size() || t[pos].text != "/" || t[pos + 1].kind != Tok::kNum || t[pos + 1].value != 2.0)
      throw ParseError("quadratic objective block must be followed by '/ 2'", t[pos < t.size() ? pos : t.size() - 1].line);
    pos += 2;
  }

  std::unordered_map<std::string, int> index_;
};

}  // namespace

std::vector<std::string> sanitize_names(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  std::set<std::string> used;
  for (const std::string& raw : names) {
    std::string s;
    for (char c : raw) s += is_name_char(c) ? c : '_';
    if (s.empty()) s = "_";
    const bool bad_start = std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.' ||
                           ((s[0] == 'e' || s[0] == 'E') && s.size() > 1 &&
                            (std::isdigit(static_cast<unsigned char>(s[1])) || s[1] == 'e' || s[1] == 'E'));
    if (bad_start) s = "_" + s;
    const std::string l = lower(s);
    if (l == "inf" || l == "infinity" || l == "free" || l == "end" || l == "st" || l == "bounds" ||
        l == "binaries" || l == "binary" || l == "bin" || l == "generals" || l == "general" || l == "gen" ||
        l == "maximize" || l == "minimize" || l == "max" || l == "min" || l == "maximum" || l == "minimum")
      s = "_" + s;
    std::string cand = s;
    for (int k = 2; used.count(cand); ++k) cand = s + "_" + std::to_string(k);
    used.insert(cand);
    out.push_back(cand);
  }
  return out;
}

void write_lp(std::ostream& out, const MipInstance& src, std::optional<double> t) {
  src.validate();
  if (src.ratio && !t)
    throw UnsupportedError("ratio objective needs a Dinkelbach parameter t to be written as LP");
  const MipInstance mip = src.ratio ? linearize_ratio(src, *t) : src;
  if (mip.vars.empty()) throw UnsupportedError("cannot write an instance without variables");
  std::vector<std::string> raw;
  for (const MipVar& v : mip.vars) raw.push_back(v.name);
  const auto names = sanitize_names(raw);
  std::vector<std::string> row_raw;
  for (std::size_t i = 0; i < mip.rows.size(); ++i)
    row_raw.push_back(mip.rows[i].name.empty() ? "c" + std::to_string(i + 1) : mip.rows[i].name);
  const auto row_names = sanitize_names(row_raw);

  out << "\\ choicenet assortment MIP\n";
  out << (mip.maximize ? "Maximize\n" : "Minimize\n");
  out << " obj: ";
  std::vector<std::pair<int, double>> lin;
  for (std::size_t j = 0; j < mip.obj.size(); ++j)
    if (mip.obj[j] != 0.0) lin.push_back({static_cast<int>(j), mip.obj[j]});
  bool first = lin.empty();
  if (!lin.empty()) write_terms(out, lin, names);
  if (mip.obj_const != 0.0 || (lin.empty() && mip.quad.empty())) {
    if (first) out << num(mip.obj_const);
    else out << (mip.obj_const < 0 ? " - " : " + ") << num(std::abs(mip.obj_const));
    first = false;
  }
  if (!mip.quad.empty()) {
    out << (first ? "[ " : " + [ ");
    bool qfirst = true;
    for (const QuadTerm& q : mip.quad) {
      const double c = 2.0 * q.coef;
      if (c < 0) out << (qfirst ? "- " : " - ");
      else if (!qfirst) out << " + ";
      out << num(std::abs(c)) << ' ' << names[static_cast<std::size_t>(q.i)];
      if (q.i == q.j) out << " ^ 2";
      else out << " * " << names[static_cast<std::size_t>(q.j)];
      qfirst = false;
    }
    out << " ] / 2";
  }
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < mip.rows.size(); ++i) {
    const MipRow& r = mip.rows[i];
    out << ' ' << row_names[i] << ": ";
    write_terms(out, r.terms, names);
    out << (r.sense == RowSense::kLe ? " <= " : r.sense == RowSense::kGe ? " >= " : " = ") << num(r.rhs) << '\n';
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < mip.vars.size(); ++j) {
    const MipVar& v = mip.vars[j];
    const std::string& nm = names[j];
    if (v.kind == VarKind::kBinary) {
      if (v.lb != 0.0 || v.ub != 1.0) out << ' ' << num(v.lb) << " <= " << nm << " <= " << num(v.ub) << '\n';
      continue;
    }
    if (std::isinf(v.lb) && std::isinf(v.ub)) out << ' ' << nm << " free\n";
    else if (v.lb == v.ub) out << ' ' << nm << " = " << num(v.lb) << '\n';
    else if (std::isinf(v.ub)) out << ' ' << nm << " >= " << num(v.lb) << '\n';
    else out << ' ' << num(v.lb) << " <= " << nm << " <= " << num(v.ub) << '\n';
  }
  bool any_bin = false;
  for (std::size_t j = 0; j < mip.vars.size(); ++j) {
    if (mip.vars[j].kind != VarKind::kBinary) continue;
    if (!any_bin) out << "Binaries\n";
    any_bin = true;
    out << ' ' << names[j] << '\n';
  }
  out << "End\n";
}

void export_lp(const MipInstance& mip, const std::string& path, std::optional<double> t) {
  std::ostringstream buf;
  write_lp(buf, mip, t);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << buf.str();
  if (!f) throw Error("failed writing " + path);
}

MipInstance read_lp(std::istream& in) {
  enum class Sec { kNone, kObj, kRows, kBounds, kBin, kEnd } sec = Sec::kNone;
  Reader rd;
  std::vector<Tok> obj_toks, row_toks;
  std::vector<std::vector<Tok>> bound_lines;
  std::vector<Tok> bin_toks;
  bool have_sense = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t c = line.find('\\');
    if (c != std::string::npos) line.erase(c);
    const std::string tl = lower(trim(line));
    if (tl.empty()) continue;
    if (tl == "maximize" || tl == "maximum" || tl == "max" || tl == "minimize" || tl == "minimum" || tl == "min") {
      rd.mip.maximize = tl.rfind("max", 0) == 0;
      have_sense = true;
      sec = Sec::kObj;
      continue;
    }
    if (tl == "subject to" || tl == "such that" || tl == "st" || tl == "s.t.") {
      sec = Sec::kRows;
      continue;
    }
    if (tl == "bounds" || tl == "bound") {
      sec = Sec::kBounds;
      continue;
    }
    if (tl == "binaries" || tl == "binary" || tl == "bin") {
      sec = Sec::kBin;
      continue;
    }
    if (tl == "generals" || tl == "general" || tl == "gen" || tl == "semi-continuous" || tl == "sos")
      throw ParseError("section '" + trim(line) + "' is not supported (binaries only)", lineno);
    if (tl == "end") {
      sec = Sec::kEnd;
      continue;
    }
    auto toks = tokenize(line, lineno);
    switch (sec) {
      case Sec::kNone: throw ParseError("content before the objective section", lineno);
      case Sec::kObj: obj_toks.insert(obj_toks.end(), toks.begin(), toks.end()); break;
      case Sec::kRows: row_toks.insert(row_toks.end(), toks.begin(), toks.end()); break;
      case Sec::kBounds: bound_lines.push_back(std::move(toks)); break;
      case Sec::kBin: bin_toks.insert(bin_toks.end(), toks.begin(), toks.end()); break;
      case Sec::kEnd: throw ParseError("content after End", lineno);
    }
  }
  if (!have_sense) throw ParseError("missing Maximize/Minimize section");
  if (sec != Sec::kEnd) throw ParseError("missing End", lineno);

  // Objective.
  std::map<int, double> obj_lin;
  double obj_const = 0.0;
  std::vector<QuadTerm> quad;
  {
    std::size_t pos = 0;
    if (obj_toks.size() >= 2 && obj_toks[0].kind == Tok::kName && obj_toks[1].text == ":") pos = 2;
    rd.expression(obj_toks, pos, obj_lin, &quad, &obj_const);
    if (pos != obj_toks.size()) throw ParseError("unexpected token in objective", obj_toks[pos].line);
  }
  // Rows.
  std::vector<std::pair<std::string, std::map<int, double>>> rows;
  std::vector<std::pair<RowSense, double>> senses;
  {
    std::size_t pos = 0;
    int k = 0;
    while (pos < row_toks.size()) {
      std::string name = "c" + std::to_string(++k);
      if (pos + 1 < row_toks.size() && row_toks[pos].kind == Tok::kName && row_toks[pos + 1].text == ":") {
        name = row_toks[pos].text;
        pos += 2;
      }
      std::map<int, double> lin;
      rd.expression(row_toks, pos, lin, nullptr, nullptr);
      if (pos >= row_toks.size()) throw ParseError("constraint '" + name + "' has no sense", row_toks.back().line);
      const std::string op = row_toks[pos++].text;
      double sign = 1.0;
      while (pos < row_toks.size() && (row_toks[pos].text == "+" || row_toks[pos].text == "-")) {
        if (row_toks[pos].text == "-") sign = -sign;
        ++pos;
      }
      if (pos >= row_toks.size() || row_toks[pos].kind != Tok::kNum)
        throw ParseError("constraint '" + name + "' needs a numeric right-hand side", row_toks[pos - 1].line);
      const double rhs = sign * row_toks[pos++].value;
      rows.push_back({name, std::move(lin)});
      senses.push_back({op == "<=" ? RowSense::kLe : op == ">=" ? RowSense::kGe : RowSense::kEq, rhs});
    }
  }
  // Bounds.
  std::vector<char> lb_set, ub_set;
  auto ensure = [&](int j) {
    if (static_cast<int>(lb_set.size()) <= j) {
      lb_set.resize(static_cast<std::size_t>(j) + 1, 0);
      ub_set.resize(static_cast<std::size_t>(j) + 1, 0);
    }
  };
  auto signed_num = [](const std::vector<Tok>& t, std::size_t& p) {
    double s = 1.0;
    while (p < t.size() && (t[p].text == "+" || t[p].text == "-")) {
      if (t[p].text == "-") s = -s;
      ++p;
    }
    if (p >= t.size() || t[p].kind != Tok::kNum) throw ParseError("expected a number in bound", t.empty() ? 0 : t.back().line);
    return s * t[p++].value;
  };
  for (const auto& t : bound_lines) {
    std::size_t p = 0;
    const int ln = t.front().line;
    if (t.size() == 2 && t[0].kind == Tok::kName && lower(t[1].text) == "free") {
      const int j = rd.var(t[0].text);
      ensure(j);
      rd.mip.vars[static_cast<std::size_t>(j)].lb = -kInf;
      rd.mip.vars[static_cast<std::size_t>(j)].ub = kInf;
      lb_set[static_cast<std::size_t>(j)] = ub_set[static_cast<std::size_t>(j)] = 1;
      continue;
    }
    if (t[0].kind == Tok::kName) {
      const int j = rd.var(t[0].text);
      ensure(j);
      p = 1;
      if (p >= t.size()) throw ParseError("incomplete bound", ln);
      const std::string op = t[p++].text;
      const double v = signed_num(t, p);
      MipVar& mv = rd.mip.vars[static_cast<std::size_t>(j)];
      if (op == "<=") {
        mv.ub = v;
        ub_set[static_cast<std::size_t>(j)] = 1;
      } else if (op == ">=") {
        mv.lb = v;
        lb_set[static_cast<std::size_t>(j)] = 1;
      } else {
        mv.lb = mv.ub = v;
        lb_set[static_cast<std::size_t>(j)] = ub_set[static_cast<std::size_t>(j)] = 1;
      }
    } else {
      const double lo = signed_num(t, p);
      if (p >= t.size() || t[p].text != "<=") throw ParseError("expected '<=' in bound", ln);
      ++p;
      if (p >= t.size() || t[p].kind != Tok::kName) throw ParseError("expected a variable in bound", ln);
      const int j = rd.var(t[p++].text);
      ensure(j);
      MipVar& mv = rd.mip.vars[static_cast<std::size_t>(j)];
      mv.lb = lo;
      lb_set[static_cast<std::size_t>(j)] = 1;
      if (p < t.size()) {
        if (t[p].text != "<=") throw ParseError("expected '<=' in bound", ln);
        ++p;
        mv.ub = signed_num(t, p);
        ub_set[static_cast<std::size_t>(j)] = 1;
      }
    }
    if (p != t.size()) throw ParseError("trailing tokens in bound", ln);
  }
  for (const Tok& tk : bin_toks) {
    if (tk.kind != Tok::kName) throw ParseError("expected a variable name in Binaries", tk.line);
    const int j = rd.var(tk.text);
    ensure(j);
    MipVar& mv = rd.mip.vars[static_cast<std::size_t>(j)];
    mv.kind = VarKind::kBinary;
    if (!ub_set[static_cast<std::size_t>(j)]) mv.ub = 1.0;
  }

  MipInstance& mip = rd.mip;
  mip.obj.assign(mip.vars.size(), 0.0);
  for (auto [j, c] : obj_lin) mip.obj[static_cast<std::size_t>(j)] = c;
  mip.obj_const = obj_const;
  for (QuadTerm q : quad) {
    q.coef *= 0.5;
    mip.quad.push_back(q);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<std::pair<int, double>> terms(rows[i].second.begin(), rows[i].second.end());
    mip.add_row(rows[i].first, std::move(terms), senses[i].first, senses[i].second);
  }
  mip.validate();
  return mip;
}

MipInstance read_lp_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  return read_lp(f);
}

bool equivalent(const MipInstance& a, const MipInstance& b, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (a.vars.size() != b.vars.size()) return fail("variable counts differ");
  if (a.rows.size() != b.rows.size()) return fail("row counts differ");
  if (a.maximize != b.maximize) return fail("objective senses differ");
  if (a.obj_const != b.obj_const) return fail("objective constants differ");
  std::unordered_map<std::string, int> bi;
  for (std::size_t j = 0; j < b.vars.size(); ++j) bi[b.vars[j].name] = static_cast<int>(j);
  std::vector<int> map(a.vars.size());
  for (std::size_t j = 0; j < a.vars.size(); ++j) {
    auto it = bi.find(a.vars[j].name);
    if (it == bi.end()) return fail("variable " + a.vars[j].name + " missing");
    map[j] = it->second;
    const MipVar& x = a.vars[j];
    const MipVar& y = b.vars[static_cast<std::size_t>(it->second)];
    if (x.kind != y.kind || x.lb != y.lb || x.ub != y.ub) return fail("variable " + x.name + " differs");
    if (a.obj[j] != b.obj[static_cast<std::size_t>(it->second)]) return fail("objective coefficient of " + x.name + " differs");
  }
  auto row_map = [](const std::vector<std::pair<int, double>>& t, const std::vector<int>* m) {
    std::map<int, double> out;
    for (auto [j, c] : t) out[m ? (*m)[static_cast<std::size_t>(j)] : j] += c;
    return out;
  };
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const MipRow& x = a.rows[i];
    const MipRow& y = b.rows[i];
    if (x.name != y.name || x.sense != y.sense || x.rhs != y.rhs) return fail("row " + x.name + " differs");
    if (row_map(x.terms, &map) != row_map(y.terms, nullptr)) return fail("row " + x.name + " terms differ");
  }
  auto quad_map = [](const std::vector<QuadTerm>& q, const std::vector<int>* m) {
    std::map<std::pair<int, int>, double> out;
    for (const QuadTerm& t : q) {
      int i = m ? (*m)[static_cast<std::size_t>(t.i)] : t.i;
      int j = m ? (*m)[static_cast<std::size_t>(t.j)] : t.j;
      if (i > j) std::swap(i, j);
      out[{i, j}] += t.coef;
    }
    return out;
  };
  if (quad_map(a.quad, &map) != quad_map(b.quad, nullptr)) return fail("quadratic objective differs");
  return true;
}

}  // namespace choicenet
