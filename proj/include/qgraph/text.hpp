#pragma once

#include <string>
#include <string_view>

namespace qgraph {

// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

// Parses a real with an optional pi factor: "3.5", "pi", "2pi", "4*pi",
// "0.5π". Throws Error(ParseError) on anything else.
double parse_real(std::string_view text);

}  // namespace qgraph
