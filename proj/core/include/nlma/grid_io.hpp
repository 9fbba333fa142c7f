#pragma once

#include <iosfwd>
#include <string>

#include "nlma/grid_function.hpp"

namespace nlma {

// Text format:
//   d n1 [n2 [n3]]
//   L h
//   [cone <name> <params>]
//   [tail C exponent]
//   one value per line, row-major, last index fastest
GridFunction read_grid_file(const std::string& path);
GridFunction read_grid(std::istream& in, const std::string& source = "<stream>");

struct TailMetadata {
    bool present = false;
    double C = 0.0;
    double exponent = 0.0;
};

void write_grid(std::ostream& out, const GridFunction& f, const TailMetadata& meta = {});
void write_grid_file(const std::string& path, const GridFunction& f, const TailMetadata& meta = {});

}  // namespace nlma
