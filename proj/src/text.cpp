#include "qgraph/text.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <system_error>

#include "qgraph/error.hpp"

namespace qgraph {

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw Error(ErrorKind::InvalidConfig, "cannot format number");
  return std::string(buf, end);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool strip_suffix(std::string_view& s, std::string_view suffix) {
  if (s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
    s.remove_suffix(suffix.size());
    return true;
  }
  return false;
}

}  // namespace

double parse_real(std::string_view text) {
  std::string_view s = trim(text);
  double factor = 1.0;
  if (strip_suffix(s, "pi") || strip_suffix(s, "\xCF\x80")) {  // "π" in UTF-8
    factor = std::numbers::pi;
    s = trim(s);
    strip_suffix(s, "*");
    s = trim(s);
    if (s.empty()) return factor;
    if (s == "-") return -factor;
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorKind::ParseError, "not a number: '" + std::string(text) + "'");
  }
  return value * factor;
}

}  // namespace qgraph
