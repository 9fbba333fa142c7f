#pragma once

#include <map>
#include <string>
#include <vector>

#include "nlma/grid_function.hpp"

namespace nlma {

// "name:key=val,key=val". A comma-separated token without '=' extends the value of
// the previous key, so matrices and slope lists read as M=4,0,0,1.
struct BuilderSpec {
    std::string family;
    std::map<std::string, std::vector<double>> numbers;
    std::map<std::string, std::string> strings;

    static BuilderSpec parse(const std::string& text);
    double number(const std::string& key, double fallback) const;
    std::string text() const;
};

struct DomainParams {
    int dim = 1;
    double L = 20.0;
    double h = 0.05;
    // When positive, overrides h with 2L/(nodes-1).
    int nodes = 0;
    Grid grid() const;
};

// Families:
//   smoothcone  a, M       u = sqrt(a^2 + y^T M y) - a, cone sqrt(y^T M y)
//   maxplanes   p, c, r    u = r log sum exp((p_i.y + c_i)/r), r = 0 gives max_i
//   affine      b, c       u = b.y + c
//   quadratic   M          u = y^T M y / 2, quadratic growth
//   negcone     a          u = -sqrt(a^2 + |y|^2)
//   gauss       amp, sigma u = amp exp(-|y|^2 / (2 sigma^2))
//   file        path       grid file import (domain parameters come from the file)
GridFunction build_grid_function(const BuilderSpec& spec, const DomainParams& dom);
std::vector<std::string> builder_families();

GridFunction make_smooth_cone(const Grid& g, double a, const Mat& m);
GridFunction make_max_planes(const Grid& g, const std::vector<Vec>& p, const std::vector<double>& c, double r);
GridFunction make_affine(const Grid& g, const Vec& b, double c);

// Pointwise combination alpha u + beta v, with the matching tail.
GridFunction combine(double alpha, const GridFunction& u, double beta, const GridFunction& v);

}  // namespace nlma
