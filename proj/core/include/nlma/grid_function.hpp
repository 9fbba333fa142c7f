#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nlma/cone.hpp"
#include "nlma/types.hpp"

namespace nlma {

// Uniform tensor grid over [-L, L]^d. Node (i0, i1, i2) sits at -L + i_k h; the last
// index runs fastest.
struct Grid {
    int dim = 1;
    Index n{1, 1, 1};
    double L = 1.0;
    double h = 1.0;

    static Grid make(int d, int nodes_per_axis, double L);
    static Grid with_spacing(int d, double L, double h);

    std::size_t size() const { return std::size_t(n[0]) * n[1] * n[2]; }
    std::size_t index(const Index& i) const { return (std::size_t(i[0]) * n[1] + i[1]) * n[2] + i[2]; }
    Index multi(std::size_t k) const;
    Vec coord(const Index& i) const;
    Vec coord(std::size_t k) const { return coord(multi(k)); }
    bool inside(const Vec& y, double slack = 0.0) const;
    // Nearest node to y; throws when y lies outside the box.
    std::size_t nearest(const Vec& y) const;
    // Distance in cells from node k to the nearest box face.
    int depth(std::size_t k) const;
    std::size_t stride(int axis) const;
    bool same_as(const Grid& o) const;
    void validate() const;
};

using Evaluator = std::function<double(const Vec&)>;

// How a sampled function continues outside the box.
struct Tail {
    ConeModel cone;
    // Closed form valid everywhere, when the builder knows one.
    Evaluator exact;
    double o_max = kInf;
    // 1: cone-asymptotic growth. 2: quadratic growth, usable only with localized kernels.
    int growth = 1;
};

class LowerHull;

// Function sampled on a Grid, plus its tail model. Values are immutable after
// construction; derived functions are produced by with_values or the builders.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(Grid g, std::vector<double> values, Tail tail);

    const Grid& grid() const { return grid_; }
    int dim() const { return grid_.dim; }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t k) const { return values_[k]; }
    const Tail& tail() const { return tail_; }
    const ConeModel& cone() const { return tail_.cone; }

    bool convex() const { return convex_; }
    bool cone_tagged() const { return cone_tagged_; }
    int growth() const { return tail_.growth; }
    double scale() const { return scale_; }
    // Largest violation of midpoint convexity, <= 0 for convex data.
    double midpoint_defect() const { return midpoint_defect_; }
    // sup over the boundary band of |u - Phi|.
    double boundary_offset() const { return boundary_offset_; }

    // Cubic interpolation inside the box, tail model outside.
    double eval(const Vec& y) const;
    double exterior(const Vec& y) const;
    // Central-difference gradient at a node (one-sided on the boundary).
    Vec gradient(std::size_t k) const;
    // Finite-difference Hessian at a node; zero rows at the boundary.
    Mat hessian(std::size_t k) const;

    GridFunction with_values(std::vector<double> v) const;
    GridFunction with_tail(Tail t) const;

    // Exact lower hull of the lifted nodes, computed on first use and shared by copies.
    const LowerHull& hull() const;

private:
    void classify();
    double interpolate(const Vec& y) const;

    Grid grid_;
    std::vector<double> values_;
    Tail tail_;
    bool convex_ = false;
    bool cone_tagged_ = false;
    double scale_ = 1.0;
    double midpoint_defect_ = 0.0;
    double boundary_offset_ = 0.0;

    struct HullCache;
    std::shared_ptr<HullCache> cache_;
};

// Samples f on the grid and records f as the closed-form tail.
GridFunction sample(const Grid& g, const Evaluator& f, Tail tail);

// Offsets used for midpoint tests and second differences: the axes, then the
// diagonals (one representative of each +/- pair).
std::vector<Index> stencil_directions(int d, bool with_diagonals);

}  // namespace nlma
