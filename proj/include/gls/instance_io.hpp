#pragma once

#include <stdexcept>
#include <string>

#include "gls/instance.hpp"

namespace gls {

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_no, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

// Instance file format (line oriented, '#' comments, LF or CRLF):
//   gls <n> <k>
//   k blocks, each starting with `group`, holding any of
//     e <u> <v> <w>    Laplacian edge, 0-based, w > 0
//     d <u> <val>      extra diagonal entry, val >= 0
//     s <u> <val>      fixed-potential coordinate (default 0)
Instance parse_instance(const std::string& text);
std::string serialize_instance(const Instance& inst);

}  // namespace gls
