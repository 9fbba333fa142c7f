#pragma once

#include <vector>

#include "nlma/types.hpp"

namespace nlma {

// Quadrature on the unit sphere S^{d-1}: weights sum to |S^{d-1}| = d |B_1|.
// d = 1: {+1, -1}. d = 2: equally spaced angles starting at 0 (so the set is invariant
// under the symmetries of the square when the count is a multiple of 8). d = 3:
// Gauss-Legendre in the polar cosine times equally spaced azimuths.
struct DirectionSet {
    int dim = 1;
    std::vector<Vec> dirs;
    std::vector<double> weights;
    std::size_t size() const { return dirs.size(); }
};

DirectionSet make_directions(int d, int resolution);

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre01(int n, std::vector<double>& x, std::vector<double>& w);

}  // namespace nlma
