#include "oracles.hpp"

#include <sstream>

namespace oracle {

bool acl_allows(const AclCfg& cfg, int requested) {
  for (const auto& e : cfg.entries) {
    if (e.deny && e.right <= requested) return false;
  }
  for (const auto& e : cfg.entries) {
    if (!e.deny && e.right >= requested) return true;
  }
  if (cfg.role_default >= requested) return true;
  if (cfg.category_default >= requested) return true;
  return false;
}

namespace {
int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}
}  // namespace

std::optional<std::vector<std::uint8_t>> parse_hex_columns(std::string_view dump) {
  std::vector<std::uint8_t> out;
  std::size_t pos = 0;
  std::uint64_t expected_offset = 0;
  bool first = true;
  while (pos < dump.size()) {
    auto nl = dump.find('\n', pos);
    if (nl == std::string_view::npos) return std::nullopt;
    auto line = dump.substr(pos, nl - pos);
    pos = nl + 1;
    // offset, then 2 spaces, then 48 hex columns
    auto sp = line.find("  ");
    if (sp == std::string_view::npos || sp < 8) return std::nullopt;
    std::uint64_t off = 0;
    for (char c : line.substr(0, sp)) {
      int v = nibble(c);
      if (v < 0) return std::nullopt;
      off = off * 16 + static_cast<std::uint64_t>(v);
    }
    if (first) {
      expected_offset = off;
      first = false;
    }
    if (off != expected_offset) return std::nullopt;
    auto cols = line.substr(sp + 2);
    if (cols.size() < 48 + 2) return std::nullopt;
    int count = 0;
    for (int k = 0; k < 16; ++k) {
      std::size_t at = static_cast<std::size_t>(k * 3 + (k >= 8 ? 1 : 0));
      char hi = cols[at], lo = cols[at + 1];
      if (hi == ' ' && lo == ' ') break;
      int a = nibble(hi), b = nibble(lo);
      if (a < 0 || b < 0) return std::nullopt;
      out.push_back(static_cast<std::uint8_t>(a * 16 + b));
      ++count;
    }
    if (cols.substr(48, 3) != "  |" || cols.back() != '|') return std::nullopt;
    if (cols.size() != 48 + 3 + static_cast<std::size_t>(count) + 1) return std::nullopt;
    expected_offset += 16;
  }
  return out;
}

std::string latex_escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\textbackslash{}"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '~': out += "\\textasciitilde{}"; break;
      case '{':
      case '}':
      case '$':
      case '&':
      case '#':
      case '_':
      case '%':
        out += '\\';
        out += c;
        break;
      default: out += c;
    }
  }
  return out;
}

std::vector<std::string> longtable_rows(const std::string& tex, const std::string& section) {
  std::vector<std::string> rows;
  auto s = tex.find("\\section{" + section + "}");
  if (s == std::string::npos) return rows;
  auto begin = tex.find("\\begin{longtable}", s);
  auto head = tex.find("\\endhead\n", begin);
  auto end = tex.find("\\end{longtable}", begin);
  if (begin == std::string::npos || head == std::string::npos || end == std::string::npos || head > end) return rows;
  std::istringstream in(tex.substr(head + 9, end - head - 9));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(line);
  }
  return rows;
}

std::vector<std::string> row_cells(const std::string& row) {
  std::string body = row;
  if (body.rfind("\\relax ", 0) == 0) body = body.substr(7);
  if (body.size() >= 2 && body.compare(body.size() - 2, 2, "\\\\") == 0) body.resize(body.size() - 2);
  std::vector<std::string> cells;
  std::string cur;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '&' && (i == 0 || body[i - 1] != '\\')) {
      // trim the single spaces around the separator
      if (!cur.empty() && cur.back() == ' ') cur.pop_back();
      cells.push_back(cur);
      cur.clear();
      if (i + 1 < body.size() && body[i + 1] == ' ') ++i;
    } else {
      cur.push_back(body[i]);
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace oracle
