#pragma once

#include <string>

namespace nlma {

// Shortest round-trip digits; infinities spelled inf and -inf.
std::string format_extended(double v);
// Accepts the same spellings back.
double parse_extended(const std::string& s);

}  // namespace nlma
