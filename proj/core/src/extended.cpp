#include "nlma/extended.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "nlma/types.hpp"

namespace nlma {

std::string format_extended(double v) {
    if (std::isnan(v)) return "nan";
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_extended(const std::string& s) {
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ValidationError("not a number: '" + s + "'");
    }
    if (used != s.size()) throw ValidationError("not a number: '" + s + "'");
    return v;
}

}  // namespace nlma
