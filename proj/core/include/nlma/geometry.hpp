#pragma once

#include <vector>

#include "nlma/grid_function.hpp"

namespace nlma {

// Largest convex grid function below f: the lower hull of the lifted nodes. Nodes that
// already lie on the hull keep their value bit for bit.
GridFunction convex_envelope(const GridFunction& f);

struct SubdifferentialSet {
    Vec x{};
    std::size_t node = 0;
    std::vector<Vec> vertices;
    bool singleton = false;
    // The slope polytope has nonempty interior in R^d.
    bool full_dimensional = false;
    // A hull facet through x also touches the box boundary, so the contact may extend
    // beyond the computed region.
    bool boundary_contact = false;
    bool empty() const { return vertices.empty(); }
    double diameter() const;
};

SubdifferentialSet subdifferential_at(const GridFunction& f, std::size_t node);

struct PlaneCheck {
    bool supported = false;
    // Offset y with f(x+y) < f(x) + y.g when unsupported; g is the central-difference
    // gradient.
    Vec witness{};
    Vec gradient{};
    // f(x+y) - f(x) - y.g at the witness (negative).
    double defect = 0.0;
};

PlaneCheck supporting_plane_check(const GridFunction& f, std::size_t node);

// Diameter of {y : f(y) - f(x) - b.(y-x) <= t}. Uses the homothety bound
// diam(t) <= (t/eps) diam(eps) once the section reaches the box boundary.
double section_diameter(const GridFunction& f, std::size_t node, const Vec& b, double t);

// Smallest increment f(y) - f(x) - b.(y-x) over nodes and sampled tail points, and
// the place where it is attained.
struct IncrementMin {
    double value = 0.0;
    Vec at{};
};
IncrementMin min_increment(const GridFunction& f, std::size_t node, const Vec& b);

// Internal helpers shared with the operator.
SubdifferentialSet hull_subdifferential(const GridFunction& f, std::size_t node);
bool is_kink(const GridFunction& f, std::size_t node);

}  // namespace nlma
