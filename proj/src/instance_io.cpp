#include "gls/instance_io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

namespace gls {

namespace {

struct Tokenizer {
  std::istringstream in;
  int line_no = 0;
  std::vector<std::string> tokens;

  explicit Tokenizer(const std::string& text) : in(text) {}

  // Next non-empty line, comments stripped; false at end of input.
  bool next_line() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      std::istringstream ls(line);
      tokens.clear();
      std::string tok;
      while (ls >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }
};

int parse_int(const Tokenizer& tz, const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing characters");
    return static_cast<int>(v);
  } catch (const std::exception&) {
    throw ParseError(tz.line_no, std::string("expected integer for ") + what + ", got '" + tok + "'");
  }
}

double parse_real(const Tokenizer& tz, const std::string& tok, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw ParseError(tz.line_no, std::string("expected real for ") + what + ", got '" + tok + "'");
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Instance parse_instance(const std::string& text) {
  Tokenizer tz(text);
  if (!tz.next_line()) throw ParseError(1, "empty instance file");
  if (tz.tokens[0] != "gls" || tz.tokens.size() != 3)
    throw ParseError(tz.line_no, "expected header 'gls <n> <k>'");
  const int n = parse_int(tz, tz.tokens[1], "n");
  const int k = parse_int(tz, tz.tokens[2], "k");
  if (n < 1) throw ParseError(tz.line_no, "dimension must be at least 1");
  if (k < 1) throw ParseError(tz.line_no, "group count must be at least 1");

  Instance inst;
  inst.n = n;
  std::vector<LapEdge> edges;
  std::vector<DiagEntry> diag;
  std::vector<std::pair<int, double>> svals;
  bool in_group = false;

  auto flush_group = [&](int line_no) {
    try {
      Group g;
      g.L = assemble_laplacian(n, edges, diag);
      g.s = SparseVec::from_pairs(svals);
      inst.groups.push_back(std::move(g));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
    edges.clear();
    diag.clear();
    svals.clear();
  };

  int last_line = tz.line_no;
  while (tz.next_line()) {
    const std::string& d = tz.tokens[0];
    if (d == "group") {
      if (tz.tokens.size() != 1) throw ParseError(tz.line_no, "'group' takes no arguments");
      if (in_group) flush_group(tz.line_no);
      in_group = true;
    } else if (d == "e") {
      if (!in_group) throw ParseError(tz.line_no, "'e' outside of a group block");
      if (tz.tokens.size() != 4) throw ParseError(tz.line_no, "expected 'e <u> <v> <w>'");
      LapEdge e;
      e.u = parse_int(tz, tz.tokens[1], "u");
      e.v = parse_int(tz, tz.tokens[2], "v");
      e.w = parse_real(tz, tz.tokens[3], "w");
      if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
        throw ParseError(tz.line_no, "edge index out of range");
      if (e.u == e.v) throw ParseError(tz.line_no, "self-loop edge");
      if (!(e.w > 0)) throw ParseError(tz.line_no, "edge weight must be positive");
      edges.push_back(e);
    } else if (d == "d") {
      if (!in_group) throw ParseError(tz.line_no, "'d' outside of a group block");
      if (tz.tokens.size() != 3) throw ParseError(tz.line_no, "expected 'd <u> <val>'");
      DiagEntry de;
      de.u = parse_int(tz, tz.tokens[1], "u");
      de.d = parse_real(tz, tz.tokens[2], "val");
      if (de.u < 0 || de.u >= n) throw ParseError(tz.line_no, "diagonal index out of range");
      if (de.d < 0) throw ParseError(tz.line_no, "diagonal entry must be nonnegative");
      diag.push_back(de);
    } else if (d == "s") {
      if (!in_group) throw ParseError(tz.line_no, "'s' outside of a group block");
      if (tz.tokens.size() != 3) throw ParseError(tz.line_no, "expected 's <u> <val>'");
      const int u = parse_int(tz, tz.tokens[1], "u");
      const double v = parse_real(tz, tz.tokens[2], "val");
      if (u < 0 || u >= n) throw ParseError(tz.line_no, "potential index out of range");
      svals.emplace_back(u, v);
    } else {
      throw ParseError(tz.line_no, "unknown directive '" + d + "'");
    }
    last_line = tz.line_no;
  }
  if (in_group) flush_group(last_line);
  if (inst.k() != k)
    throw ParseError(last_line, "header declares " + std::to_string(k) + " groups, file has " +
                                    std::to_string(inst.k()));
  validate_instance(inst);
  return inst;
}

std::string serialize_instance(const Instance& inst) {
  validate_instance(inst);
  std::string out;
  out += "gls " + std::to_string(inst.n) + " " + std::to_string(inst.k()) + "\n";
  for (const Group& g : inst.groups) {
    if (!g.L.rows.empty())
      throw std::invalid_argument("serialize_instance: factor-row groups have no file form");
    out += "group\n";
    for (const LapEdge& e : g.L.edges)
      out += "e " + std::to_string(e.u) + " " + std::to_string(e.v) + " " + fmt(e.w) + "\n";
    for (const DiagEntry& d : g.L.diag)
      out += "d " + std::to_string(d.u) + " " + fmt(d.d) + "\n";
    for (std::size_t j = 0; j < g.s.idx.size(); ++j)
      out += "s " + std::to_string(g.s.idx[j]) + " " + fmt(g.s.val[j]) + "\n";
  }
  return out;
}

}  // namespace gls
