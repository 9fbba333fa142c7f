#pragma once

#include <vector>

#include "nlma/grid_function.hpp"

namespace nlma {

// Lower convex hull of the lifted nodes (y_k, f_k). In 1D a monotone chain, in 2D and
// 3D a quickhull in dimension d+1 restricted to downward facets. Every node is covered
// by the facets whose projection contains it; the envelope value and the slopes of
// the supporting planes through that node are read off those facets.
class LowerHull {
public:
    LowerHull(const Grid& g, const std::vector<double>& values, double tol);

    const std::vector<double>& envelope() const { return envelope_; }
    // f_k - envelope_k <= tol
    bool on_hull(std::size_t k) const { return gap_[k] <= tol_; }
    double gap(std::size_t k) const { return gap_[k]; }
    // Gradients of the lower facets touching node k, deduplicated.
    std::vector<Vec> slopes(std::size_t k, double dedup_tol = 1e-9) const;
    std::size_t facet_count() const { return facet_grad_.size(); }
    // Data lies on one affine function within tol.
    bool affine() const { return affine_; }
    // Some facet touching node k has a vertex on the box boundary.
    bool boundary_contact(std::size_t k) const;
    double tolerance() const { return tol_; }

private:
    void build_chain(const Grid& g, const std::vector<double>& v);
    void build_quickhull(const Grid& g, const std::vector<double>& v);
    void build_affine(const Grid& g, const std::vector<double>& v, const Vec& slope);

    double tol_;
    bool affine_ = false;
    std::vector<double> envelope_;
    std::vector<double> gap_;
    std::vector<Vec> facet_grad_;
    std::vector<char> facet_boundary_;
    // CSR list of facets touching each node.
    std::vector<std::size_t> touch_start_;
    std::vector<int> touch_;
};

}  // namespace nlma
